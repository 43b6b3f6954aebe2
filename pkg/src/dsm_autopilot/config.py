"""Scenario files: INI-style text with sections [simulation], [reference],
[schedule], [disturbance], [csm] and [dsm].

Missing sections or keys fall back to the built-in defaults; unknown keys are
rejected. Disturbance channels are written as a sum of primitives, e.g.
``f11 = step(15, 0.5) + sine(0.2, 0.1, 0)``; ``none`` clears a channel.
"""
from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import MISSING, fields
from importlib import resources
from pathlib import Path

from .controller_csm import CsmConfig
from .controller_dsm import DsmConfig
from .errors import AutopilotError, ConfigError
from .sim import ReferenceProgram, Scenario, default_reference
from .vehicle import PRIMITIVES, CoefficientSchedule, DisturbanceSpec, default_disturbance, default_schedule

DEFAULT_SCENARIO_ENV = "DSM_AUTOPILOT_DEFAULT_SCENARIO"

_FLOAT, _BOOL, _STR, _OPT_FLOAT = "float", "bool", "str", "optional float"
KNOWN_KEYS = {
    "simulation": {
        "duration": _FLOAT, "dt": _FLOAT, "controller": _STR,
        "use_gyro": _BOOL, "control_period": _OPT_FLOAT,
    },
    "reference": {"breakpoints": _STR},
    "schedule": {"file": _STR},
    "disturbance": {"f11": _STR, "f12": _STR, "matched": _STR},
    "csm": {"K": _FLOAT, "rho": _FLOAT, "epsilon": _FLOAT, "use_sign": _BOOL},
    "dsm": {
        "rho": _FLOAT, "epsilon": _FLOAT, "wn": _FLOAT,
        "wn_is_hz": _BOOL, "resolve_period": _OPT_FLOAT,
    },
}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}
_TERM = re.compile(r"\s*([A-Za-z_]\w*)\s*\(([^()]*)\)\s*")


def bundled_default_path() -> Path:
    override = os.environ.get(DEFAULT_SCENARIO_ENV)
    if override:
        return Path(override)
    return Path(str(resources.files("dsm_autopilot") / "data" / "default_scenario.ini"))


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` to the 1-based line number where it is set."""
    where = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            where[(section, None)] = lineno
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            where[(section, m.group(1).strip())] = lineno
    return where


def parse_disturbance_expr(expr: str) -> tuple:
    expr = expr.strip()
    if not expr or expr.lower() == "none":
        return ()
    terms = []
    pos = 0
    while True:
        m = _TERM.match(expr, pos)
        if not m:
            raise ValueError(f"cannot parse disturbance term at {expr[pos:]!r}")
        name = m.group(1).lower()
        if name not in PRIMITIVES:
            raise ValueError(f"unknown disturbance primitive {name!r} (expected step, ramp or sine)")
        args = [float(a) for a in m.group(2).split(",") if a.strip()]
        cls = PRIMITIVES[name]
        n_fields = len(fields(cls))
        n_required = sum(1 for f in fields(cls) if f.default is MISSING)
        if not (n_required <= len(args) <= n_fields):
            raise ValueError(f"{name} takes {n_required}..{n_fields} arguments, got {len(args)}")
        terms.append(cls(*args))
        pos = m.end()
        if pos == len(expr):
            break
        if expr[pos] != "+":
            raise ValueError(f"expected '+' between disturbance terms at {expr[pos:]!r}")
        pos += 1
    return tuple(terms)


def format_disturbance_expr(prims) -> str:
    if not prims:
        return "none"
    parts = []
    for p in prims:
        name = next(k for k, v in PRIMITIVES.items() if isinstance(p, v))
        parts.append(f"{name}({', '.join(repr(float(getattr(p, f.name))) for f in fields(p))})")
    return " + ".join(parts)


def parse_breakpoints(text: str):
    pts = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        t, sep, q = item.partition(":")
        if not sep:
            raise ValueError(f"breakpoint {item!r} must be written t:q_c")
        pts.append((float(t), float(q)))
    return pts


def _convert(kind, raw):
    raw = raw.strip()
    if kind == _FLOAT:
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError(f"{raw!r} is not finite")
        return v
    if kind == _OPT_FLOAT:
        return None if raw.lower() in ("", "none", "auto") else _convert(_FLOAT, raw)
    if kind == _BOOL:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"{raw!r} is not a boolean")
    return raw


def parse_scenario_text(text: str, base_dir=None, overrides=None) -> Scenario:
    """Parse scenario text into a validated :class:`Scenario`.

    ``overrides`` maps ``"section.key"`` to already-typed values applied on top
    of the file (used by command-line flags).
    """
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        detail = str(exc).splitlines()[0]
        if isinstance(exc, configparser.ParsingError) and exc.errors:
            line, bad = exc.errors[0]
            detail = f"cannot parse {bad.strip()!r}"
        raise ConfigError(detail, line=line) from None
    lines = _line_index(text)

    values = {}
    for section in cp.sections():
        if section not in KNOWN_KEYS:
            raise ConfigError(f"unknown section [{section}]", line=lines.get((section, None)))
        for key, raw in cp.items(section):
            dotted = f"{section}.{key}"
            line = lines.get((section, key))
            if key not in KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key {dotted}", line=line, key=dotted)
            try:
                values[dotted] = _convert(KNOWN_KEYS[section][key], raw)
            except ValueError as exc:
                raise ConfigError(f"invalid value for {dotted}: {exc}", line=line, key=dotted) from None
    for dotted, v in (overrides or {}).items():
        if v is not None:
            values[dotted] = v

    def build(dotted, fn):
        section, key = dotted.split(".", 1)
        try:
            return fn(values[dotted])
        except (ValueError, AutopilotError, OSError) as exc:
            raise ConfigError(f"invalid {dotted}: {exc}", line=lines.get((section, key)), key=dotted) from None

    def get(dotted, default):
        return values.get(dotted, default)

    kw = {}
    if "reference.breakpoints" in values:
        kw["reference"] = build("reference.breakpoints", lambda s: ReferenceProgram(parse_breakpoints(s)))
    else:
        kw["reference"] = default_reference()

    sched_file = values.get("schedule.file", "")
    if sched_file:
        path = Path(sched_file)
        if not path.is_absolute():
            path = base_dir / path
        kw["schedule"] = build("schedule.file", lambda _: CoefficientSchedule.from_csv(path))
        kw["schedule"].source = str(sched_file)
    else:
        kw["schedule"] = default_schedule()

    dd = default_disturbance()
    chans = {}
    for ch in ("f11", "f12", "matched"):
        dotted = f"disturbance.{ch}"
        chans[ch] = build(dotted, parse_disturbance_expr) if dotted in values else getattr(dd, ch)
    kw["disturbances"] = DisturbanceSpec(**chans)

    def section_config(name, cls):
        args = {k: values[f"{name}.{k}"] for k in KNOWN_KEYS[name] if f"{name}.{k}" in values}
        try:
            return cls(**args)
        except AutopilotError as exc:
            m = re.search(rf"{name}\.(\w+)", str(exc))
            key = f"{name}.{m.group(1)}" if m else None
            line = lines.get((name, m.group(1))) if m else None
            raise ConfigError(str(exc), line=line, key=key) from None

    kw["csm"] = section_config("csm", CsmConfig)
    kw["dsm"] = section_config("dsm", DsmConfig)

    sim = Scenario.__dataclass_fields__
    try:
        sc = Scenario(
            duration=get("simulation.duration", sim["duration"].default),
            dt=get("simulation.dt", sim["dt"].default),
            controller=get("simulation.controller", sim["controller"].default).lower(),
            use_gyro=get("simulation.use_gyro", sim["use_gyro"].default),
            control_period=get("simulation.control_period", None),
            **kw,
        )
    except AutopilotError as exc:
        msg = str(exc)
        key = next((f"simulation.{k}" for k in KNOWN_KEYS["simulation"] if msg.startswith(k)), None)
        if key is None and msg.startswith("dsm.resolve_period"):
            key = "dsm.resolve_period"
        line = lines.get(tuple(key.split(".", 1))) if key else None
        if key and key not in msg:
            msg = f"invalid {key}: {msg}"
        raise ConfigError(msg, line=line, key=key) from None
    return sc


def load_scenario(path=None, overrides=None) -> Scenario:
    path = Path(path) if path is not None else bundled_default_path()
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc.strerror}") from None
    return parse_scenario_text(text, base_dir=path.parent, overrides=overrides)


def _fmt(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_scenario(sc: Scenario) -> str:
    """Fully resolved configuration, parseable back by :func:`parse_scenario_text`."""
    out = ["[simulation]"]
    for k in ("duration", "dt", "controller", "use_gyro", "control_period"):
        out.append(f"{k} = {_fmt(getattr(sc, k))}")
    out += ["", "[reference]"]
    out.append("breakpoints = " + ", ".join(f"{t!r}:{q!r}" for t, q in sc.reference.breakpoints))
    out += ["", "[schedule]"]
    out.append(f"file = {getattr(sc.schedule, 'source', '')}")
    out += ["", "[disturbance]"]
    for ch in ("f11", "f12", "matched"):
        out.append(f"{ch} = {format_disturbance_expr(getattr(sc.disturbances, ch))}")
    for name, cfg in (("csm", sc.csm), ("dsm", sc.dsm)):
        out += ["", f"[{name}]"]
        for k in KNOWN_KEYS[name]:
            out.append(f"{k} = {_fmt(getattr(cfg, k))}")
    return "\n".join(out) + "\n"
