"""Command-line front end.

    dsm-autopilot run --scenario FILE --controller {csm,dsm} --out DIR
    dsm-autopilot compare --scenario FILE --out DIR
    dsm-autopilot validate --scenario FILE

Exit codes: 0 success, 2 configuration error, 3 numerical blow-up.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import dump_scenario, load_scenario
from .errors import ConfigError, InvalidInputError, NumericalBlowupError
from .report import (
    write_coefficients_csv,
    write_comparison_csv,
    write_metrics_csv,
    write_plot_script,
)
from .sim import compute_metrics, simulate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _overrides(dt=None, duration=None):
    return {"simulation.dt": dt, "simulation.duration": duration}


def _load(path, dt=None, duration=None):
    return load_scenario(path, overrides=_overrides(dt, duration))


def _write_outputs(log, out: Path) -> None:
    name = log.controller
    log.to_csv(out / f"{name}_trajectory.csv")
    write_metrics_csv(compute_metrics(log), out / f"{name}_metrics.csv")
    if name == "dsm":
        write_coefficients_csv(log, out / "dsm_coefficients.csv")


def _fail(code, msg):
    print(f"error: {msg}", file=sys.stderr)
    return code


def cmd_run(scenario, controller, out, dt=None, duration=None) -> int:
    try:
        sc = _load(scenario, dt, duration)
        sc = sc.with_(controller=controller)
    except (ConfigError, InvalidInputError) as exc:
        return _fail(EXIT_CONFIG, exc)
    try:
        log = simulate(sc, controller)
    except NumericalBlowupError as exc:
        return _fail(EXIT_NUMERIC, f"{controller}: {exc}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _write_outputs(log, out)
    m = compute_metrics(log)
    print(f"{controller}: rms_e_q={m.rms_e_q:.4g} rad/s  rms_e_theta={m.rms_e_theta:.4g} rad")
    return EXIT_OK


def cmd_compare(scenario, out, dt=None, duration=None, jobs=2) -> int:
    try:
        sc = _load(scenario, dt, duration).with_(controller="both")
    except (ConfigError, InvalidInputError) as exc:
        return _fail(EXIT_CONFIG, exc)
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=2) as pool:
                futures = {name: pool.submit(simulate, sc, name) for name in ("csm", "dsm")}
                logs = {name: f.result() for name, f in futures.items()}
        else:
            logs = {name: simulate(sc, name) for name in ("csm", "dsm")}
    except NumericalBlowupError as exc:
        return _fail(EXIT_NUMERIC, str(exc))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for log in logs.values():
        _write_outputs(log, out)
    m_csm, m_dsm = compute_metrics(logs["csm"]), compute_metrics(logs["dsm"])
    write_comparison_csv(m_csm, m_dsm, out / "comparison.csv")
    write_plot_script(out / "plot_figures.py")
    print(f"{'metric':<18}{'csm':>14}{'dsm':>14}")
    for key, a in m_csm.as_dict().items():
        b = m_dsm.as_dict()[key]
        print(f"{key:<18}{a:>14.5g}{b:>14.5g}")
    return EXIT_OK


def cmd_validate(scenario, dt=None, duration=None) -> int:
    try:
        sc = _load(scenario, dt, duration)
    except (ConfigError, InvalidInputError) as exc:
        return _fail(EXIT_CONFIG, exc)
    print(dump_scenario(sc), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dsm-autopilot", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file (default: bundled scenario)")
    common.add_argument("--dt", type=float, help="override integration step [s]")
    common.add_argument("--duration", type=float, help="override simulated time [s]")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="simulate one controller")
    run.add_argument("--controller", choices=("csm", "dsm"), required=True)
    run.add_argument("--out", required=True, help="output directory")

    cmp_ = sub.add_parser("compare", parents=[common], help="simulate both controllers and compare")
    cmp_.add_argument("--out", required=True, help="output directory")
    cmp_.add_argument("--jobs", type=int, default=2, help="1 runs the two simulations serially")

    sub.add_parser("validate", parents=[common], help="print the resolved configuration")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.scenario, args.controller, args.out, args.dt, args.duration)
    if args.command == "compare":
        return cmd_compare(args.scenario, args.out, args.dt, args.duration, args.jobs)
    return cmd_validate(args.scenario, args.dt, args.duration)


if __name__ == "__main__":
    sys.exit(main())
