"""Polynomials in s, rational transfer functions and canonical realizations.

Coefficients are stored ascending by power: ``coeffs[k]`` multiplies ``s**k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NotRealizableError

TRIM_TOL = 1e-12


@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple = (0.0,)

    def __post_init__(self):
        c = [float(x) for x in self.coeffs]
        while len(c) > 1 and abs(c[-1]) <= TRIM_TOL:
            c.pop()
        if not c or (len(c) == 1 and abs(c[0]) <= TRIM_TOL):
            c = [0.0]
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        """Degree of the polynomial; the zero polynomial reports 0."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    @property
    def leading(self) -> float:
        return self.coeffs[-1]

    def __call__(self, s):
        # Horner, works for real/complex scalars and numpy arrays
        acc = 0.0 * s
        for c in reversed(self.coeffs):
            acc = acc * s + c
        return acc

    def __add__(self, other):
        return poly_add(self, other)

    def __sub__(self, other):
        return poly_add(self, poly_scale(other, -1.0))

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return poly_mul(self, other)
        return poly_scale(self, other)

    __rmul__ = __mul__

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    n = max(len(p.coeffs), len(q.coeffs))
    a = np.zeros(n)
    a[: len(p.coeffs)] += p.coeffs
    a[: len(q.coeffs)] += q.coeffs
    return Polynomial(tuple(a))


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return Polynomial(tuple(np.convolve(p.coeffs, q.coeffs)))


def poly_scale(p: Polynomial, c: float) -> Polynomial:
    return Polynomial(tuple(c * x for x in p.coeffs))


@dataclass(frozen=True)
class RationalTransferFunction:
    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if self.den.is_zero():
            raise InvalidInputError("transfer function denominator is identically zero")

    @property
    def is_proper(self) -> bool:
        return self.num.degree <= self.den.degree or self.num.is_zero()

    def __call__(self, s):
        return self.num(s) / self.den(s)


@dataclass(frozen=True)
class StateSpaceRealization:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float = 0.0
    order: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "order", self.A.shape[0])

    def frequency_response(self, s: complex) -> complex:
        """Evaluate ``C (sI - A)^-1 B + D`` at a single complex frequency."""
        if self.order == 0:
            return complex(self.D)
        x = np.linalg.solve(s * np.eye(self.order) - self.A, self.B.astype(complex))
        return complex(self.C @ x) + self.D

    def output(self, x: np.ndarray, u: float) -> float:
        return float(self.C @ x) + self.D * u

    def deriv(self, x: np.ndarray, u: float) -> np.ndarray:
        return self.A @ x + self.B * u


def realize_canonical(tf: RationalTransferFunction) -> StateSpaceRealization:
    """Controllable canonical realization of a proper SISO transfer function.

    The denominator is scaled monic on a copy; the caller's polynomials are
    left untouched.
    """
    if not tf.is_proper:
        raise NotRealizableError(
            f"improper transfer function: deg num {tf.num.degree} > deg den {tf.den.degree}"
        )
    den = tf.den.as_array()
    lead = den[-1]
    den = den / lead
    num = np.zeros(len(den))
    num[: len(tf.num.coeffs)] = np.asarray(tf.num.coeffs) / lead
    n = len(den) - 1

    d = num[n]
    resid = num[:n] - d * den[:n]
    A = np.zeros((n, n))
    if n:
        A[:-1, 1:] = np.eye(n - 1)
        A[-1, :] = -den[:n]
    B = np.zeros(n)
    if n:
        B[-1] = 1.0
    return StateSpaceRealization(A=A, B=B, C=resid.copy(), D=float(d))


def pitch_plant_tf(c) -> RationalTransferFunction:
    """Frozen-time pitch-rate response to thrust deflection, q(s)/delta(s).

    Built from the three-state model ``[v_z, q, theta]`` with ``theta' = q``.
    The factor s shared by numerator and denominator in degenerate cases is
    kept on purpose.
    """
    vals = (c.Z_v, c.Z_q, c.Z_theta, c.Z_de, c.M_vz, c.M_q, c.M_de)
    if not all(math.isfinite(v) for v in vals):
        raise InvalidInputError("pitch coefficients must be finite")
    if c.M_de == 0.0:
        raise InvalidInputError("M_de must be nonzero")
    den = Polynomial((
        -c.Z_theta * c.M_vz,
        c.Z_v * c.M_q - c.Z_q * c.M_vz,
        -(c.Z_v + c.M_q),
        1.0,
    ))
    num = Polynomial((0.0, c.Z_de * c.M_vz - c.M_de * c.Z_v, c.M_de))
    return RationalTransferFunction(num, den)
