"""Pitch-plane launch vehicle: time-varying airframe, TVC servo, rate gyro
and deterministic disturbance generators."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .poly_tf import Polynomial, RationalTransferFunction, realize_canonical

SERVO_TAU = 0.1  # s
SERVO_RATE_LIMIT = math.radians(25.0)  # rad/s
GYRO_WN = 80.0 * math.pi  # rad/s
GYRO_DAMPING_TERM = 40.0 * math.pi  # rad/s, s^1 coefficient of the gyro denominator

SCHEDULE_HEADER = ("t", "Z_v", "Z_q", "Z_theta", "Z_de", "M_vz", "M_q", "M_de")


@dataclass(frozen=True)
class PitchCoefficients:
    Z_v: float = 0.0
    Z_q: float = 0.0
    Z_theta: float = 0.0
    Z_de: float = 0.0
    M_vz: float = 0.0
    M_q: float = 0.0
    M_de: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise InvalidInputError(f"coefficient {f.name} is not finite")
        if self.M_de == 0.0:
            raise InvalidInputError("M_de must be nonzero")

    def as_tuple(self):
        return (self.Z_v, self.Z_q, self.Z_theta, self.Z_de, self.M_vz, self.M_q, self.M_de)


class CoefficientSchedule:
    """Piecewise-linear schedule of pitch coefficients, clamped outside its span."""

    def __init__(self, times, samples):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or len(times) == 0:
            raise InvalidInputError("coefficient schedule needs at least one sample")
        if len(samples) != len(times):
            raise InvalidInputError("schedule times and samples differ in length")
        if not np.all(np.isfinite(times)):
            raise InvalidInputError("schedule times must be finite")
        if np.any(np.diff(times) <= 0.0):
            raise InvalidInputError("schedule times must be strictly increasing")
        self.times = times
        self.source = ""  # file the schedule was loaded from, if any
        self.samples = tuple(
            s if isinstance(s, PitchCoefficients) else PitchCoefficients(*s) for s in samples
        )
        self._table = np.array([s.as_tuple() for s in self.samples])
        m_de = self._table[:, 6]
        if np.any(np.sign(m_de) != np.sign(m_de[0])):
            raise InvalidInputError("M_de crosses zero on the schedule span")

    @classmethod
    def constant(cls, coeffs: PitchCoefficients) -> "CoefficientSchedule":
        return cls([0.0], [coeffs])

    @classmethod
    def from_csv(cls, path) -> "CoefficientSchedule":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = tuple(h.strip() for h in next(reader))
            except StopIteration:
                raise InvalidInputError(f"{path}: empty schedule file") from None
            if header != SCHEDULE_HEADER:
                raise InvalidInputError(
                    f"{path}: header must be {','.join(SCHEDULE_HEADER)}, got {','.join(header)}"
                )
            times, samples = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not x.strip() for x in row):
                    continue
                if len(row) != len(SCHEDULE_HEADER):
                    raise InvalidInputError(f"{path}:{lineno}: expected {len(SCHEDULE_HEADER)} columns")
                try:
                    vals = [float(x) for x in row]
                except ValueError as exc:
                    raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
                times.append(vals[0])
                samples.append(PitchCoefficients(*vals[1:]))
        return cls(times, samples)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SCHEDULE_HEADER)
            for t, row in zip(self.times, self._table):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    def at(self, t: float) -> PitchCoefficients:
        return coeffs_at(self, t)

    def __eq__(self, other):
        if not isinstance(other, CoefficientSchedule):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(self._table, other._table)

    def __repr__(self):
        return f"CoefficientSchedule({len(self.times)} samples over [{self.times[0]:g}, {self.times[-1]:g}] s)"


def coeffs_at(sched: CoefficientSchedule, t: float) -> PitchCoefficients:
    if sched is None or len(sched.times) == 0:
        raise InvalidInputError("empty coefficient schedule")
    tab = sched._table
    if t <= sched.times[0]:
        return sched.samples[0]
    if t >= sched.times[-1]:
        return sched.samples[-1]
    k = int(np.searchsorted(sched.times, t, side="right")) - 1
    t0, t1 = sched.times[k], sched.times[k + 1]
    w = (t - t0) / (t1 - t0)
    row = tab[k] + w * (tab[k + 1] - tab[k])
    return PitchCoefficients(*(float(v) for v in row))


# Synthetic atmospheric-flight profile (SI units, 0..60 s). Speed-like Z_q grows
# with time, M_vz > 0 makes the airframe statically unstable around max-q.
_DEFAULT_ROWS = (
    # t     Z_v     Z_q    Z_theta  Z_de   M_vz     M_q    M_de
    (0.0, -0.020, 150.0, -9.6, 18.0, 0.0020, -0.030, 2.0),
    (10.0, -0.025, 260.0, -9.2, 21.0, 0.0028, -0.050, 2.6),
    (20.0, -0.032, 370.0, -8.6, 24.0, 0.0034, -0.080, 3.2),
    (30.0, -0.040, 470.0, -7.8, 27.0, 0.0036, -0.100, 3.8),
    (40.0, -0.046, 560.0, -6.8, 30.0, 0.0032, -0.090, 4.2),
    (50.0, -0.050, 640.0, -5.8, 33.0, 0.0026, -0.070, 4.5),
    (60.0, -0.052, 700.0, -4.8, 35.0, 0.0020, -0.050, 4.6),
)


def default_schedule() -> CoefficientSchedule:
    return CoefficientSchedule([r[0] for r in _DEFAULT_ROWS], [r[1:] for r in _DEFAULT_ROWS])


def plant_deriv(x, c: PitchCoefficients, delta_e: float, f11: float = 0.0, f12: float = 0.0) -> np.ndarray:
    """Time derivative of the pitch state ``[v_z, q, theta]``."""
    v_z, q, theta = x
    return np.array([
        c.Z_v * v_z + c.Z_q * q + c.Z_theta * theta + c.Z_de * delta_e + f11,
        c.M_vz * v_z + c.M_q * q + c.M_de * delta_e + f12,
        q,
    ])


def servo_deriv(delta: float, delta_c: float) -> float:
    """First-order servo with slew-rate limit applied to the deflection rate."""
    rate = (delta_c - delta) / SERVO_TAU
    return min(max(rate, -SERVO_RATE_LIMIT), SERVO_RATE_LIMIT)


def gyro_tf() -> RationalTransferFunction:
    wn2 = GYRO_WN ** 2
    return RationalTransferFunction(Polynomial((wn2,)), Polynomial((wn2, GYRO_DAMPING_TERM, 1.0)))


GYRO_SS = realize_canonical(gyro_tf())


def gyro_deriv(g, q_true: float) -> np.ndarray:
    return GYRO_SS.A @ np.asarray(g, dtype=float) + GYRO_SS.B * q_true


def gyro_output(g) -> float:
    return float(GYRO_SS.C @ np.asarray(g, dtype=float))


# -- disturbances -----------------------------------------------------------

@dataclass(frozen=True)
class Step:
    t0: float
    amplitude: float

    def __call__(self, t):
        return self.amplitude if t >= self.t0 else 0.0


@dataclass(frozen=True)
class Ramp:
    t0: float
    slope: float

    def __call__(self, t):
        return self.slope * (t - self.t0) if t >= self.t0 else 0.0


@dataclass(frozen=True)
class Sine:
    amplitude: float
    frequency: float  # Hz
    phase: float = 0.0  # rad

    def __call__(self, t):
        return self.amplitude * math.sin(2.0 * math.pi * self.frequency * t + self.phase)


PRIMITIVES = {"step": Step, "ramp": Ramp, "sine": Sine}


@dataclass(frozen=True)
class DisturbanceSpec:
    """Additive disturbances per channel.

    ``f11`` enters the normal-velocity equation (m/s^2), ``f12`` the pitch-rate
    equation (rad/s^2). ``matched`` is added to the servo command (rad) and is
    the only channel the control can cancel directly.
    """

    f11: tuple = ()
    f12: tuple = ()
    matched: tuple = ()

    def __post_init__(self):
        for name in ("f11", "f12", "matched"):
            prims = tuple(getattr(self, name))
            for p in prims:
                if not all(math.isfinite(float(getattr(p, f.name))) for f in fields(p)):
                    raise InvalidInputError(f"non-finite disturbance parameter in {name}")
            object.__setattr__(self, name, prims)

    def matched_at(self, t: float) -> float:
        return sum(p(t) for p in self.matched) if self.matched else 0.0

    @property
    def is_empty(self) -> bool:
        return not (self.f11 or self.f12 or self.matched)


def disturbance_eval(spec: DisturbanceSpec, t: float) -> tuple[float, float]:
    f11 = sum(p(t) for p in spec.f11) if spec.f11 else 0.0
    f12 = sum(p(t) for p in spec.f12) if spec.f12 else 0.0
    return f11, f12


def default_disturbance() -> DisturbanceSpec:
    return DisturbanceSpec(
        f11=(Step(15.0, 0.5), Sine(0.2, 0.1, 0.0)),
        f12=(Step(25.0, 0.05),),
    )
