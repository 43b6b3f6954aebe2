"""Fixed-step closed-loop simulation, trajectory logging and metrics."""
from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .controller_csm import CsmConfig, csm_control, csm_surface
from .controller_dsm import (
    DsmConfig,
    ManifoldFilterState,
    WCoefficients,
    dsm_control,
    dsm_manifold,
    solve_w_coefficients,
    update_w_realization,
)
from .errors import IllConditionedError, InvalidInputError, NumericalBlowupError
from .poly_tf import pitch_plant_tf
from .vehicle import (
    GYRO_SS,
    SERVO_RATE_LIMIT,
    SERVO_TAU,
    CoefficientSchedule,
    DisturbanceSpec,
    coeffs_at,
    default_disturbance,
    default_schedule,
)

CONTROLLERS = ("csm", "dsm")
# state layout: plant (3), servo (1), gyro (2), controller (2)
N_STATES = 8
BASE_COLUMNS = (
    "t", "v_z", "q", "theta", "delta", "delta_c", "q_meas", "q_c", "theta_c",
    "e_q", "e_theta", "surface", "f11", "f12",
)
DSM_COLUMNS = ("a2", "a3", "b2", "residual")


def rk4_step(f, y: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step; raises on any non-finite stage."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    incr = k1 + 2.0 * k2 + 2.0 * k3 + k4
    # a non-finite stage always leaves a non-finite weighted sum
    if not np.isfinite(incr).all():
        raise NumericalBlowupError(t)
    return y + (dt / 6.0) * incr


class ReferenceProgram:
    """Piecewise-linear pitch-rate program, held constant outside its breakpoints.

    ``theta_c`` is the exact running integral of ``q_c`` from t = 0 and
    ``q_c_dot`` the right-continuous segment slope.
    """

    def __init__(self, breakpoints):
        bp = [(float(t), float(q)) for t, q in breakpoints]
        if not bp:
            raise InvalidInputError("reference program needs at least one breakpoint")
        ts = np.array([t for t, _ in bp])
        qs = np.array([q for _, q in bp])
        if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(qs))):
            raise InvalidInputError("reference breakpoints must be finite")
        if np.any(np.diff(ts) <= 0.0):
            raise InvalidInputError("reference breakpoint times must be strictly increasing")
        self.breakpoints = tuple(bp)
        slope = np.diff(qs) / np.diff(ts) if len(ts) > 1 else np.zeros(0)
        # integral of q_c from the first breakpoint up to each breakpoint
        seg = 0.5 * (qs[1:] + qs[:-1]) * np.diff(ts)
        self._t = ts.tolist()
        self._q = qs.tolist()
        self._slope = slope.tolist()
        self._cum = np.concatenate([[0.0], np.cumsum(seg)]).tolist()
        self._last = len(self._t) - 1
        self._offset = self._integral_from_first(0.0)

    @classmethod
    def zero(cls):
        return cls([(0.0, 0.0)])

    def _segment(self, t):
        return bisect_right(self._t, t) - 1

    def q_c(self, t: float) -> float:
        k = self._segment(t)
        if k < 0:
            return self._q[0]
        if k >= self._last:
            return self._q[-1]
        return self._q[k] + self._slope[k] * (t - self._t[k])

    def q_c_dot(self, t: float) -> float:
        k = self._segment(t)
        if k < 0 or k >= self._last:
            return 0.0
        return self._slope[k]

    def _integral_from_first(self, t: float) -> float:
        k = self._segment(t)
        if k < 0:
            return self._q[0] * (t - self._t[0])
        if k >= self._last:
            return self._cum[-1] + self._q[-1] * (t - self._t[-1])
        dt = t - self._t[k]
        return self._cum[k] + self._q[k] * dt + 0.5 * self._slope[k] * dt * dt

    def theta_c(self, t: float) -> float:
        return self._integral_from_first(t) - self._offset

    def __eq__(self, other):
        return isinstance(other, ReferenceProgram) and self.breakpoints == other.breakpoints

    def __repr__(self):
        return f"ReferenceProgram({list(self.breakpoints)!r})"


def default_reference() -> ReferenceProgram:
    q_hold = -math.radians(1.0)
    return ReferenceProgram([(0.0, 0.0), (10.0, q_hold), (40.0, q_hold), (50.0, 0.0)])


@dataclass
class Scenario:
    duration: float = 60.0
    dt: float = 1e-3
    controller: str = "both"
    schedule: CoefficientSchedule = field(default_factory=default_schedule)
    disturbances: DisturbanceSpec = field(default_factory=default_disturbance)
    reference: ReferenceProgram = field(default_factory=default_reference)
    csm: CsmConfig = field(default_factory=CsmConfig)
    dsm: DsmConfig = field(default_factory=DsmConfig)
    use_gyro: bool = True
    control_period: float | None = None  # s; None holds the command for one step

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise InvalidInputError(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.duration) and self.duration >= self.dt):
            raise InvalidInputError(f"duration must be at least dt, got {self.duration}")
        if self.controller not in CONTROLLERS + ("both",):
            raise InvalidInputError(f"controller must be csm, dsm or both, got {self.controller!r}")
        self.control_steps
        self.resolve_steps
        return self

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration / self.dt + 1e-9))

    def _period_steps(self, period, name):
        n = period / self.dt
        k = int(round(n))
        if k < 1 or abs(n - k) > 1e-6 * max(1.0, n):
            raise InvalidInputError(f"{name} must be a positive integer multiple of dt")
        return k

    @property
    def control_steps(self) -> int:
        if self.control_period is None:
            return 1
        return self._period_steps(self.control_period, "control_period")

    @property
    def resolve_steps(self) -> int:
        if self.dsm.resolve_period is None:
            return 10 * self.control_steps
        k = self._period_steps(self.dsm.resolve_period, "dsm.resolve_period")
        if k % self.control_steps:
            raise InvalidInputError("dsm.resolve_period must be a multiple of the control period")
        return k

    def controllers(self):
        return CONTROLLERS if self.controller == "both" else (self.controller,)

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass
class TrajectoryLog:
    controller: str
    dt: float
    epsilon: float
    columns: dict

    def __len__(self):
        return len(self.columns["t"])

    def __getitem__(self, name) -> np.ndarray:
        return self.columns[name]

    @property
    def column_names(self):
        return tuple(self.columns)

    def to_csv(self, path) -> None:
        names = self.column_names
        data = np.column_stack([self.columns[n] for n in names])
        with Path(path).open("w", newline="") as fh:
            fh.write(",".join(names) + "\n")
            for row in data:
                fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")

    @classmethod
    def from_csv(cls, path, controller=None, epsilon=math.nan) -> "TrajectoryLog":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(x) for x in r] for r in reader if r]
        data = np.array(rows, dtype=float).reshape(len(rows), len(header))
        cols = {name: data[:, i].copy() for i, name in enumerate(header)}
        if controller is None:
            controller = "dsm" if "a2" in cols else "csm"
        dt = float(cols["t"][1] - cols["t"][0]) if len(rows) > 1 else math.nan
        return cls(controller=controller, dt=dt, epsilon=epsilon, columns=cols)


@dataclass(frozen=True)
class Metrics:
    rms_e_q: float
    max_abs_e_q: float
    rms_e_theta: float
    max_abs_e_theta: float
    control_rms: float
    reachability_violations: int
    final_e_theta: float

    def as_dict(self):
        return {
            "rms_e_q": self.rms_e_q,
            "max_abs_e_q": self.max_abs_e_q,
            "rms_e_theta": self.rms_e_theta,
            "max_abs_e_theta": self.max_abs_e_theta,
            "control_rms": self.control_rms,
            "reachability_violations": self.reachability_violations,
            "final_e_theta": self.final_e_theta,
        }


def reachability_monitor(log: TrajectoryLog, eps: float, eta: float = 0.0):
    """Steps outside the boundary layer where ``0.5 d(s^2)/dt <= -eta |s|`` fails.

    Returns ``(t, s, 0.5*d(s^2)/dt)`` tuples, derivative by forward difference.
    """
    s = np.asarray(log["surface"])
    t = np.asarray(log["t"])
    if len(s) < 2:
        return []
    dt = np.diff(t)
    d_half_sq = 0.5 * (s[1:] ** 2 - s[:-1] ** 2) / dt
    outside = np.abs(s[:-1]) > eps
    bad = outside & (d_half_sq > -eta * np.abs(s[:-1]))
    return [(float(t[k]), float(s[k]), float(d_half_sq[k])) for k in np.flatnonzero(bad)]


def _rms(x) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def compute_metrics(log: TrajectoryLog, eps: float | None = None) -> Metrics:
    if len(log) == 0:
        raise InvalidInputError("cannot compute metrics of an empty log")
    e_q = np.asarray(log["e_q"])
    e_th = np.asarray(log["e_theta"])
    eps = log.epsilon if eps is None else eps
    violations = len(reachability_monitor(log, eps)) if math.isfinite(eps) else 0
    return Metrics(
        rms_e_q=_rms(e_q),
        max_abs_e_q=float(np.max(np.abs(e_q))),
        rms_e_theta=_rms(e_th),
        max_abs_e_theta=float(np.max(np.abs(e_th))),
        control_rms=_rms(log["delta_c"]),
        reachability_violations=violations,
        final_e_theta=float(e_th[-1]),
    )


def _closed_loop_rhs(sc: Scenario, controller: str, held: dict):
    """Continuous dynamics of plant, servo, gyro and controller integrators.

    ``held`` carries the zero-order-held command and the current W(s)
    matrices; it is mutated between steps by the caller.
    """
    sched = sc.schedule
    times = sched.times.tolist()
    table = [tuple(r) for r in sched._table.tolist()]
    t_first, t_last = times[0], times[-1]
    dist = sc.disturbances
    f11_prims, f12_prims, matched_prims = dist.f11, dist.f12, dist.matched
    ref = sc.reference
    Ag, Bg, Cg = GYRO_SS.A, GYRO_SS.B, GYRO_SS.C
    g00, g01, g10, g11 = Ag[0, 0], Ag[0, 1], Ag[1, 0], Ag[1, 1]
    bg0, bg1 = Bg
    cg0, cg1 = Cg
    use_gyro = sc.use_gyro
    is_dsm = controller == "dsm"

    def coeff_row(t):
        if t <= t_first:
            return table[0]
        if t >= t_last:
            return table[-1]
        k = bisect_right(times, t) - 1
        w = (t - times[k]) / (times[k + 1] - times[k])
        return [a + w * (b - a) for a, b in zip(table[k], table[k + 1])]

    def rhs(t, y):
        v_z, q, theta, delta, g1, g2, c1, c2 = y
        Z_v, Z_q, Z_t, Z_de, M_vz, M_q, M_de = coeff_row(t)
        f11 = sum(p(t) for p in f11_prims) if f11_prims else 0.0
        f12 = sum(p(t) for p in f12_prims) if f12_prims else 0.0
        cmd = held["delta_c"]
        if matched_prims:
            cmd += sum(p(t) for p in matched_prims)
        rate = (cmd - delta) / SERVO_TAU
        if rate > SERVO_RATE_LIMIT:
            rate = SERVO_RATE_LIMIT
        elif rate < -SERVO_RATE_LIMIT:
            rate = -SERVO_RATE_LIMIT
        q_meas = cg0 * g1 + cg1 * g2 if use_gyro else q
        e = ref.q_c(t) - q_meas
        if is_dsm:
            A = held["A"]
            dc1 = A[0, 0] * c1 + A[0, 1] * c2
            dc2 = A[1, 0] * c1 + A[1, 1] * c2 + e
        else:
            dc1 = e
            dc2 = 0.0
        return np.array((
            Z_v * v_z + Z_q * q + Z_t * theta + Z_de * delta + f11,
            M_vz * v_z + M_q * q + M_de * delta + f12,
            q,
            rate,
            g00 * g1 + g01 * g2 + bg0 * q,
            g10 * g1 + g11 * g2 + bg1 * q,
            dc1,
            dc2,
        ))

    return rhs


def simulate(sc: Scenario, controller: str) -> TrajectoryLog:
    """Run one controller over the scenario and return its trajectory log."""
    if controller not in CONTROLLERS:
        raise InvalidInputError(f"unknown controller {controller!r}")
    dt = sc.dt
    n = sc.n_steps
    ctrl_every = sc.control_steps
    resolve_every = sc.resolve_steps
    is_dsm = controller == "dsm"
    ref = sc.reference
    csm_cfg, dsm_cfg = sc.csm, sc.dsm
    wn = dsm_cfg.omega_n

    held = {"delta_c": 0.0}
    filt = None
    residual = math.nan
    if is_dsm:
        w, residual = solve_w_coefficients(pitch_plant_tf(coeffs_at(sc.schedule, 0.0)), wn)
        filt = ManifoldFilterState(coeffs=w)
        held["A"] = filt.ss.A
    rhs = _closed_loop_rhs(sc, controller, held)

    names = BASE_COLUMNS + (DSM_COLUMNS if is_dsm else ())
    out = np.empty((n + 1, len(names)))
    y = np.zeros(N_STATES)
    Cg = GYRO_SS.C
    delta_c = 0.0
    surface = 0.0
    for k in range(n + 1):
        t = k * dt
        v_z, q, theta, delta, g1, g2, c1, c2 = y
        q_meas = float(Cg[0] * g1 + Cg[1] * g2) if sc.use_gyro else q
        q_c = ref.q_c(t)
        theta_c = ref.theta_c(t)
        e = q_c - q_meas
        f11 = sum(p(t) for p in sc.disturbances.f11) if sc.disturbances.f11 else 0.0
        f12 = sum(p(t) for p in sc.disturbances.f12) if sc.disturbances.f12 else 0.0

        if k % ctrl_every == 0:
            c = coeffs_at(sc.schedule, t)
            if is_dsm:
                filt.x[0], filt.x[1] = c1, c2
                surface = dsm_manifold(delta, filt, e)
                delta_c = dsm_control(surface, dsm_cfg)
                if k % resolve_every == 0 and k > 0:
                    try:
                        w_new, res_new = solve_w_coefficients(pitch_plant_tf(c), wn)
                    except IllConditionedError:
                        pass
                    else:
                        w, residual = w_new, res_new
                        filt = update_w_realization(filt, w)
                        held["A"] = filt.ss.A
            else:
                surface = csm_surface(c1, e, csm_cfg.K)
                delta_c = csm_control(q_c, ref.q_c_dot(t), e, v_z, q_meas, c, surface, csm_cfg)
            held["delta_c"] = delta_c

        row = (t, v_z, q, theta, delta, delta_c, q_meas, q_c, theta_c,
               q_c - q, theta_c - theta, surface, f11, f12)
        if is_dsm:
            row += (w.a2, w.a3, w.b2, residual)
        out[k] = row
        if k < n:
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    y = rk4_step(rhs, y, t, dt)
            except NumericalBlowupError as exc:
                raise NumericalBlowupError(exc.t, step=k) from None

    eps = dsm_cfg.epsilon if is_dsm else csm_cfg.epsilon
    cols = {name: out[:, i].copy() for i, name in enumerate(names)}
    return TrajectoryLog(controller=controller, dt=dt, epsilon=eps, columns=cols)


def run_scenario(sc: Scenario) -> dict:
    """Simulate every controller the scenario asks for; ``{name: TrajectoryLog}``."""
    sc.validate()
    return {name: simulate(sc, name) for name in sc.controllers()}
