"""Exit criteria for the autopilot simulator, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary under "acceptance criteria".
"""
import filecmp
import math
import time

import numpy as np
import pytest

from dsm_autopilot.cli import cmd_compare
from dsm_autopilot.controller_csm import CsmConfig
from dsm_autopilot.controller_dsm import closed_loop_charpoly, itae_quintic, match_w_coefficients, WCoefficients
from dsm_autopilot.poly_tf import pitch_plant_tf
from dsm_autopilot.report import read_comparison_csv
from dsm_autopilot.sim import ReferenceProgram, Scenario, compute_metrics, reachability_monitor, simulate
from dsm_autopilot.vehicle import DisturbanceSpec, PitchCoefficients, Step, gyro_deriv, gyro_output
from dsm_autopilot.sim import rk4_step

# Baseline ratios DSM/CSM measured on the default unmatched scenario.
PINNED_RMS_EQ_RATIO = 0.0045137757061425041
PINNED_RMS_ETHETA_RATIO = 0.00093012672069848763
PIN_RTOL = 1e-3


def check(report, number, title, passed, detail=""):
    report(number, title, bool(passed), detail)
    assert passed, f"criterion {number} failed: {detail}"


def test_01_kernel_exactness(acceptance_report):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        vals = rng.uniform(-5, 5, size=7)
        vals[6] = rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 5)
        c = PitchCoefficients(*vals)
        G = pitch_plant_tf(c)
        A = np.array([[c.Z_v, c.Z_q, c.Z_theta], [c.M_vz, c.M_q, 0.0], [0.0, 1.0, 0.0]])
        B = np.array([c.Z_de, c.M_de, 0.0], dtype=complex)
        for s0 in rng.normal(size=10) * 3 + 1j * rng.normal(size=10) * 3:
            oracle = np.linalg.solve(s0 * np.eye(3) - A, B)[1]
            worst = max(worst, abs(G(s0) - oracle) / abs(oracle))
    elapsed = time.perf_counter() - start
    check(acceptance_report, 1, "kernel exactness", worst <= 1e-9 and elapsed < 1.0,
          f"max rel err {worst:.2e} (<=1e-9), {elapsed:.2f} s (<1 s)")


def test_02_integrator_order(acceptance_report):
    start = time.perf_counter()
    control_period = 4e-3

    def states(dt):
        sc = Scenario(controller="csm", duration=12.0, dt=dt, control_period=control_period,
                      disturbances=DisturbanceSpec())
        log = simulate(sc, "csm")
        stride = int(round(control_period / dt))
        return np.column_stack([log[n] for n in ("v_z", "q", "theta", "delta")])[::stride]

    ref = states(2.5e-4)
    steps = np.array([4e-3, 2e-3, 1e-3])
    errs = np.array([np.max(np.abs(states(h) - ref) / np.maximum(np.max(np.abs(ref), axis=0), 1e-12))
                     for h in steps])
    exponent = np.polyfit(np.log(steps), np.log(errs), 1)[0]
    elapsed = time.perf_counter() - start
    check(acceptance_report, 2, "RK4 convergence order", exponent >= 3.7 and elapsed < 30.0,
          f"exponent {exponent:.2f} (>=3.7), errors {', '.join(f'{e:.1e}' for e in errs)}, {elapsed:.1f} s (<30 s)")


def test_03_itae_polynomial(acceptance_report):
    coeffs = itae_quintic(1.0).coeffs
    check(acceptance_report, 3, "ITAE quintic", coeffs == (1.0, 3.4, 5.5, 5.0, 2.8, 1.0), f"{list(coeffs)}")


def test_04_plant_and_recover(acceptance_report):
    rng = np.random.default_rng(99)
    worst_res, worst_err = 0.0, 0.0
    for _ in range(50):
        vals = rng.uniform(-3, 3, size=7)
        vals[6] = rng.uniform(0.5, 5)
        G = pitch_plant_tf(PitchCoefficients(*vals))
        planted = WCoefficients(*rng.uniform(-10, 10, size=3))
        w, residual = match_w_coefficients(G, closed_loop_charpoly(planted, G))
        err = max(abs(w.a2 - planted.a2), abs(w.a3 - planted.a3), abs(w.b2 - planted.b2))
        worst_res, worst_err = max(worst_res, residual), max(worst_err, err)
    check(acceptance_report, 4, "identification plant-and-recover", worst_res <= 1e-9 and worst_err <= 1e-7,
          f"max residual {worst_res:.1e} (<=1e-9), max coeff err {worst_err:.1e} (<=1e-7)")


def test_05_matched_rejection(acceptance_report):
    # the switching gain has to dominate M_de * 0.1 (~0.46 on the default schedule);
    # eps is scaled with rho so the boundary-layer gain rho/eps stays at the nominal 10 1/s
    cfg = CsmConfig(K=1.0, rho=1.0, epsilon=0.1)
    sc = Scenario(controller="csm", csm=cfg, disturbances=DisturbanceSpec(matched=(Step(0.0, 0.1),)))
    log = simulate(sc, "csm")
    steady = np.abs(log["e_q"][log["t"] >= 5.0]).max()
    bound = 10 * CsmConfig().epsilon
    check(acceptance_report, 5, "matched-disturbance rejection (CSM)", steady <= bound,
          f"max |e_q| after 5 s {steady:.2e} rad/s (<= {bound:g}, 10x nominal eps; scenario eps {cfg.epsilon:g})")


def test_06_unmatched_comparison(acceptance_report, default_compare_dir):
    rows = read_comparison_csv(default_compare_dir / "comparison.csv")
    csm_q, dsm_q, ratio_q = rows["rms_e_q"]
    csm_t, dsm_t, ratio_t = rows["rms_e_theta"]
    directional = dsm_q < csm_q and dsm_t < csm_t
    pinned = (math.isclose(ratio_q, PINNED_RMS_EQ_RATIO, rel_tol=PIN_RTOL)
              and math.isclose(ratio_t, PINNED_RMS_ETHETA_RATIO, rel_tol=PIN_RTOL))
    check(acceptance_report, 6, "unmatched comparison DSM vs CSM", directional and pinned,
          f"rms_e_q ratio {ratio_q:.4g}, rms_e_theta ratio {ratio_t:.4g} (<1, pinned rtol {PIN_RTOL:g})")


def test_07_reachability(acceptance_report):
    sc = Scenario(controller="csm", disturbances=DisturbanceSpec())
    log = simulate(sc, "csm")
    violations = reachability_monitor(log, sc.csm.epsilon)
    check(acceptance_report, 7, "reachability monitor, nominal CSM", len(violations) == 0,
          f"{len(violations)} violations, max |S| {np.abs(log['surface']).max():.2e}")


def test_08_equilibrium(acceptance_report):
    sc = Scenario(reference=ReferenceProgram.zero(), disturbances=DisturbanceSpec())
    ok = {}
    for name in ("csm", "dsm"):
        log = simulate(sc, name)
        ok[name] = all(np.all(log[c] == 0.0) for c in ("e_q", "e_theta", "surface", "delta_c"))
    check(acceptance_report, 8, "equilibrium preservation", all(ok.values()), f"{ok}")


def test_09_determinism(acceptance_report, default_compare_dir, tmp_path):
    assert cmd_compare(None, tmp_path) == 0
    names = sorted(p.name for p in default_compare_dir.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(default_compare_dir, tmp_path, names, shallow=False)
    check(acceptance_report, 9, "cmd_compare determinism", not mismatch and not errors and len(match) == len(names),
          f"{len(match)}/{len(names)} files byte-identical")


def test_10_gyro_fidelity(acceptance_report):
    wn, zeta = 80 * math.pi, 0.25
    wd = wn * math.sqrt(1 - zeta**2)
    dt = 1e-5
    n = int(round(0.1 / dt))
    g = np.zeros(2)
    worst = 0.0
    for k in range(n + 1):
        t = k * dt
        analytic = 1 - math.exp(-zeta * wn * t) * (math.cos(wd * t) + zeta / math.sqrt(1 - zeta**2) * math.sin(wd * t))
        worst = max(worst, abs(gyro_output(g) - analytic))
        g = rk4_step(lambda _t, y: gyro_deriv(y, 1.0), g, t, dt)
    check(acceptance_report, 10, "gyro step fidelity", worst <= 1e-6, f"max err {worst:.1e} (<=1e-6)")
