import math

import numpy as np
import pytest

from dsm_autopilot.errors import InvalidInputError, NumericalBlowupError
from dsm_autopilot.sim import (
    BASE_COLUMNS,
    DSM_COLUMNS,
    ReferenceProgram,
    Scenario,
    TrajectoryLog,
    compute_metrics,
    default_reference,
    reachability_monitor,
    rk4_step,
    simulate,
)
from dsm_autopilot.vehicle import DisturbanceSpec, Step


def test_rk4_examples():
    y = np.array([1.5, -2.0])
    np.testing.assert_array_equal(rk4_step(lambda t, x: np.zeros(2), y, 0.0, 0.1), y)
    dt = 1e-3
    assert rk4_step(lambda t, x: -x, np.array([1.0]), 0.0, dt)[0] == pytest.approx(math.exp(-dt), abs=1e-13)
    assert rk4_step(lambda t, x: np.ones(1), np.array([2.0]), 0.0, 0.25)[0] == 2.25


def test_rk4_blowup_carries_time():
    with pytest.raises(NumericalBlowupError) as info:
        rk4_step(lambda t, x: np.array([math.nan]), np.array([0.0]), 3.5, 0.1)
    assert info.value.t == 3.5


def test_reference_program():
    ref = default_reference()
    q_hold = -math.radians(1.0)
    assert ref.q_c(0.0) == 0.0
    assert ref.q_c(5.0) == pytest.approx(q_hold / 2)
    assert ref.q_c(20.0) == q_hold
    assert ref.q_c(55.0) == 0.0
    assert ref.q_c_dot(5.0) == pytest.approx(q_hold / 10)
    assert ref.q_c_dot(20.0) == 0.0
    assert ref.q_c_dot(45.0) == pytest.approx(-q_hold / 10)
    # trapezoid area: 5 + 30 + 5 seconds at the hold rate
    assert ref.theta_c(60.0) == pytest.approx(40 * q_hold)
    assert ref.theta_c(10.0) == pytest.approx(5 * q_hold)
    # theta_c is the running integral of q_c
    ts = np.linspace(0, 60, 60001)
    qs = np.array([ref.q_c(t) for t in ts])
    cum = np.concatenate([[0], np.cumsum(0.5 * (qs[1:] + qs[:-1]) * np.diff(ts))])
    np.testing.assert_allclose([ref.theta_c(t) for t in ts[::1000]], cum[::1000], atol=1e-12)
    with pytest.raises(InvalidInputError):
        ReferenceProgram([(1.0, 0.0), (1.0, 1.0)])


def test_scenario_validation():
    with pytest.raises(InvalidInputError):
        Scenario(dt=-1e-3)
    with pytest.raises(InvalidInputError):
        Scenario(duration=1e-4, dt=1e-3)
    with pytest.raises(InvalidInputError):
        Scenario(controller="pid")
    with pytest.raises(InvalidInputError):
        Scenario(control_period=1.5e-3)


def short(controller, **kw):
    kw.setdefault("duration", 2.0)
    return simulate(Scenario(controller=controller, **kw), controller)


@pytest.mark.parametrize("controller", ["csm", "dsm"])
def test_log_shape_and_columns(controller):
    log = short(controller, duration=0.5, dt=2e-3)
    assert len(log) == math.floor(0.5 / 2e-3) + 1
    expected = BASE_COLUMNS + (DSM_COLUMNS if controller == "dsm" else ())
    assert log.column_names == expected
    np.testing.assert_allclose(np.diff(log["t"]), 2e-3, rtol=1e-9)


@pytest.mark.parametrize("controller", ["csm", "dsm"])
def test_zero_input_equilibrium(controller):
    log = short(controller, reference=ReferenceProgram.zero(), disturbances=DisturbanceSpec())
    for name in ("e_q", "e_theta", "surface", "delta", "delta_c", "v_z", "q", "theta"):
        assert np.all(log[name] == 0.0), name


@pytest.mark.parametrize("controller", ["csm", "dsm"])
def test_determinism(controller):
    a = short(controller, duration=1.0)
    b = short(controller, duration=1.0)
    for name in a.column_names:
        np.testing.assert_array_equal(a[name], b[name])


def test_log_csv_round_trip(tmp_path):
    log = short("dsm", duration=0.3)
    path = tmp_path / "dsm.csv"
    log.to_csv(path)
    back = TrajectoryLog.from_csv(path)
    assert back.controller == "dsm"
    assert back.column_names == log.column_names
    for name in log.column_names:
        np.testing.assert_array_equal(back[name], log[name])


def test_metrics_examples():
    def make(e_q, e_th=None):
        n = len(e_q)
        cols = {c: np.zeros(n) for c in BASE_COLUMNS}
        cols["t"] = np.arange(n) * 0.01
        cols["e_q"] = np.asarray(e_q, dtype=float)
        if e_th is not None:
            cols["e_theta"] = np.asarray(e_th, dtype=float)
        return TrajectoryLog("csm", 0.01, 1e-3, cols)

    m = compute_metrics(make(np.zeros(50)))
    assert all(v == 0 for v in m.as_dict().values())
    m = compute_metrics(make(np.full(50, -0.3), np.full(50, -0.1)))
    assert m.rms_e_q == pytest.approx(0.3)
    assert m.max_abs_e_q == pytest.approx(0.3)
    assert m.final_e_theta == pytest.approx(-0.1)
    t = np.arange(0, 10, 0.001)
    m = compute_metrics(make(2.0 * np.sin(2 * np.pi * t)))
    assert m.rms_e_q == pytest.approx(2.0 / math.sqrt(2), abs=1e-3)
    with pytest.raises(InvalidInputError):
        compute_metrics(TrajectoryLog("csm", 0.01, 1e-3, {c: np.zeros(0) for c in BASE_COLUMNS}))


def monitor_log(s):
    cols = {"t": np.arange(len(s)) * 1e-3, "surface": np.asarray(s, dtype=float)}
    return TrajectoryLog("csm", 1e-3, 1e-3, cols)


def test_reachability_monitor_examples():
    eps = 1e-3
    assert reachability_monitor(monitor_log(np.zeros(100)), eps) == []
    t = np.arange(1000) * 1e-3
    assert reachability_monitor(monitor_log(0.5 * np.exp(-3 * t)), eps) == []
    growing = 0.01 + 0.1 * t
    flagged = reachability_monitor(monitor_log(growing), eps)
    assert len(flagged) == len(t) - 1
    assert all(d > 0 for _, _, d in flagged)
    # inside the layer nothing is checked
    assert reachability_monitor(monitor_log(1e-4 + 1e-7 * np.arange(100)), eps) == []


def test_matched_disturbance_only_hits_servo_path():
    sc = Scenario(controller="csm", duration=1.0, reference=ReferenceProgram.zero(),
                  disturbances=DisturbanceSpec(matched=(Step(0.0, 0.01),)))
    log = simulate(sc, "csm")
    assert np.all(log["f11"] == 0.0) and np.all(log["f12"] == 0.0)
    assert np.max(np.abs(log["delta"])) > 0.0


def test_control_period_holds_command():
    sc = Scenario(controller="csm", duration=0.1, control_period=4e-3)
    log = simulate(sc, "csm")
    dc = log["delta_c"].reshape(-1)[:100].reshape(25, 4)
    assert np.all(dc == dc[:, :1])


@pytest.mark.slow
@pytest.mark.parametrize("disturbed", [False, True])
def test_gyro_bypass_changes_little(disturbed):
    kw = {} if disturbed else {"disturbances": DisturbanceSpec()}
    for controller in ("csm", "dsm"):
        on = compute_metrics(simulate(Scenario(use_gyro=True, **kw), controller))
        off = compute_metrics(simulate(Scenario(use_gyro=False, **kw), controller))
        assert abs(on.final_e_theta - off.final_e_theta) < 0.05 * abs(on.final_e_theta)


def test_csm_reaching_phase_satisfies_eta_reachability():
    """A fast reference ramp pushes S out of the layer; once the ramp ends and
    only a matched disturbance below rho remains, every step outside the layer
    approaches it with a strictly positive eta."""
    from dsm_autopilot.controller_csm import CsmConfig

    eps, ramp_end = 1e-2, 0.2
    sc = Scenario(controller="csm", duration=3.0, csm=CsmConfig(rho=0.1, epsilon=eps),
                  reference=ReferenceProgram([(0.0, 0.0), (ramp_end, 0.05)]),
                  disturbances=DisturbanceSpec(matched=(Step(0.0, 0.01),)))
    log = simulate(sc, "csm")
    violations = reachability_monitor(log, eps)
    assert violations and all(t < ramp_end for t, _, _ in violations)
    s, t = log["surface"], log["t"]
    after = (t[:-1] >= ramp_end) & (np.abs(s[:-1]) > eps)
    assert after.sum() > 10
    d_half_sq = 0.5 * (s[1:] ** 2 - s[:-1] ** 2) / np.diff(t)
    eta = -d_half_sq[after] / np.abs(s[:-1][after])
    assert eta.min() > 0.0


@pytest.mark.slow
def test_dsm_manifold_attractive_on_default_scenario():
    sc = Scenario(controller="dsm")
    log = simulate(sc, "dsm")
    assert reachability_monitor(log, sc.dsm.epsilon) == []
    assert compute_metrics(log).reachability_violations == 0
