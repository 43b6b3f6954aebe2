"""Dynamic sliding-manifold autopilot.

The manifold adds a second-order compensator ``W(s) = P(s)/Q(s)`` acting on
the pitch-rate error to the deflection state:

    manifold = delta + W(s) e,   W(s) = (s^2 + a2 s + a3) / (s^2 + b2 s)

``(a2, a3, b2)`` are re-identified on line so that the closed-loop error
polynomial ``Q D - P N`` of the frozen-time plant ``G = N/D`` approaches the
ITAE-optimal quintic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controller_csm import sat
from .errors import DegeneratePlantError, IllConditionedError, InvalidInputError
from .poly_tf import (
    Polynomial,
    RationalTransferFunction,
    StateSpaceRealization,
    realize_canonical,
)

ITAE_QUINTIC = (1.0, 3.4, 5.5, 5.0, 2.8, 1.0)  # ascending, omega_n = 1
MAX_CONDITION = 1e12
CLOSED_LOOP_DEGREE = 5


@dataclass(frozen=True)
class WCoefficients:
    a2: float
    a3: float
    b2: float
    a1: float = field(default=1.0, init=False)
    b1: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a2, self.a3, self.b2)):
            raise InvalidInputError("W(s) coefficients must be finite")

    @property
    def numerator(self) -> Polynomial:
        return Polynomial((self.a3, self.a2, self.a1))

    @property
    def denominator(self) -> Polynomial:
        return Polynomial((0.0, self.b2, self.b1))

    def tf(self) -> RationalTransferFunction:
        return RationalTransferFunction(self.numerator, self.denominator)


@dataclass(frozen=True)
class DsmConfig:
    rho: float = 1.0
    epsilon: float = 1e-3
    wn: float = 10.0
    wn_is_hz: bool = False
    resolve_period: float | None = None  # s; None means 10 integration steps

    def __post_init__(self):
        for name in ("rho", "epsilon", "wn"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise InvalidInputError(f"dsm.{name} must be a positive finite number, got {v}")
        if self.resolve_period is not None and not (
            math.isfinite(self.resolve_period) and self.resolve_period > 0.0
        ):
            raise InvalidInputError("dsm.resolve_period must be positive")

    @property
    def omega_n(self) -> float:
        """ITAE natural frequency in rad/s."""
        return 2.0 * math.pi * self.wn if self.wn_is_hz else self.wn


def itae_quintic(wn: float) -> Polynomial:
    if not (math.isfinite(wn) and wn > 0.0):
        raise InvalidInputError(f"natural frequency must be positive, got {wn}")
    return Polynomial(tuple(c * wn ** (5 - k) for k, c in enumerate(ITAE_QUINTIC)))


def charpoly_from_polys(P: Polynomial, Q: Polynomial, G: RationalTransferFunction) -> Polynomial:
    """Numerator of ``1 - (P/Q)(N/D)`` cleared of denominators."""
    return Q * G.den - P * G.num


def closed_loop_charpoly(w: WCoefficients, G: RationalTransferFunction) -> Polynomial:
    c = charpoly_from_polys(w.numerator, w.denominator, G)
    if c.degree != CLOSED_LOOP_DEGREE:
        raise DegeneratePlantError(f"closed-loop polynomial has degree {c.degree}, expected 5")
    return c


def _padded(p: Polynomial, n: int = CLOSED_LOOP_DEGREE + 1) -> np.ndarray:
    out = np.zeros(n)
    out[: len(p.coeffs)] = p.coeffs[:n]
    return out


def affine_charpoly_system(G: RationalTransferFunction):
    """Write the monic closed-loop polynomial as ``base + M @ [a2, a3, b2]``.

    Returns ``(base, M)`` over the coefficients of s^0..s^4. The polynomial is
    affine in the unknowns, so the columns come out exactly from unit probes.
    """
    if G.den.degree != 3 or G.num.degree > 2:
        raise DegeneratePlantError(
            f"plant must have a cubic denominator and at most quadratic numerator, "
            f"got degrees {G.num.degree}/{G.den.degree}"
        )
    lead = G.den.leading

    def probe(a2, a3, b2):
        P = Polynomial((a3, a2, 1.0))
        Q = Polynomial((0.0, b2, 1.0))
        return _padded(charpoly_from_polys(P, Q, G)) / lead

    base = probe(0.0, 0.0, 0.0)
    M = np.column_stack([
        probe(1.0, 0.0, 0.0) - base,
        probe(0.0, 1.0, 0.0) - base,
        probe(0.0, 0.0, 1.0) - base,
    ])
    return base[:5], M[:5]


def weighted_lstsq(M: np.ndarray, rhs: np.ndarray, weights: np.ndarray):
    """Solve ``min ||diag(weights) (M x - rhs)||``; returns ``(x, residual, cond)``."""
    Mw = M * weights[:, None]
    rw = rhs * weights
    sv = np.linalg.svd(Mw, compute_uv=False)
    cond = math.inf if sv[-1] == 0.0 else sv[0] / sv[-1]
    if not cond <= MAX_CONDITION:
        raise IllConditionedError(f"identification matrix condition number {cond:.3g} exceeds {MAX_CONDITION:g}")
    x = np.linalg.lstsq(Mw, rw, rcond=None)[0]
    return x, float(np.linalg.norm(Mw @ x - rw)), cond


def match_w_coefficients(G: RationalTransferFunction, target: Polynomial, scale: float = 1.0):
    """Least-squares fit of ``(a2, a3, b2)`` to a monic quintic target.

    Each coefficient of s^k is weighted by ``scale**(k-5)``, i.e. the fit is done
    in the normalized variable ``s/scale``. With ``scale = 1`` this is the plain
    coefficient-vector distance.
    """
    if target.degree != CLOSED_LOOP_DEGREE:
        raise InvalidInputError("target polynomial must be a quintic")
    t = _padded(target) / target.leading
    base, M = affine_charpoly_system(G)
    weights = scale ** (np.arange(5) - 5.0)
    x, residual, _ = weighted_lstsq(M, t[:5] - base, weights)
    return WCoefficients(a2=float(x[0]), a3=float(x[1]), b2=float(x[2])), residual


def solve_w_coefficients(G: RationalTransferFunction, wn: float):
    """Identify W(s) for the frozen-time plant against the ITAE quintic at ``wn`` rad/s."""
    return match_w_coefficients(G, itae_quintic(wn), scale=wn)


@dataclass(frozen=True)
class ManifoldFilterState:
    """Canonical realization of W(s) plus its internal state."""

    coeffs: WCoefficients
    x: np.ndarray = field(default_factory=lambda: np.zeros(2))
    ss: StateSpaceRealization = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "x", np.array(self.x, dtype=float))
        object.__setattr__(self, "ss", realize_canonical(self.coeffs.tf()))

    def output(self, e: float) -> float:
        return self.ss.output(self.x, e)

    def deriv(self, e: float) -> np.ndarray:
        return self.ss.deriv(self.x, e)


def update_w_realization(filt: ManifoldFilterState, w_new: WCoefficients) -> ManifoldFilterState:
    """Swap in new coefficients while carrying the internal state over."""
    return ManifoldFilterState(coeffs=w_new, x=filt.x.copy())


def dsm_manifold(delta: float, filt: ManifoldFilterState, e: float) -> float:
    return delta + filt.output(e)


def dsm_control(manifold: float, cfg: DsmConfig) -> float:
    return -cfg.rho * sat(manifold, cfg.epsilon)
