"""The capacity curve Phi_h(n) and its Lipschitz envelope in h.

Phi_h(n) is the tight upper envelope of the expected maximum deviation between
empirical risks on two independent samples of size n, for a class of VC
dimension h::

    Phi_h(n) = 1                                              if n < h/2
             = a * L / (x - a'') * (sqrt(1 + a'(x - a'') / L) + 1)   otherwise

with x = n/h and L = ln(2x) + 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchBoundaryError, DegeneracyError, DomainError


@dataclass(frozen=True)
class PhiConstants:
    a: float = 0.16
    a_prime: float = 1.2
    # Root of Phi(n/h = 1/2) = 1, i.e. 0.5 - 2a - a'a^2 = 0.14928.
    a_double_prime: float = 0.5 - 2 * 0.16 - 1.2 * 0.16**2


PHI_CONSTANTS = PhiConstants()

#: relative safety margin applied to numerically computed slope constants
SLOPE_MARGIN = 0.01
DEFAULT_H_LO = 0.1


def _check_positive(name, value):
    if not value > 0 or not math.isfinite(value):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")


def phi_value(h: float, n: float, consts: PhiConstants = PHI_CONSTANTS) -> float:
    """Evaluate Phi_h(n) for a single (h, n) pair."""
    _check_positive("h", h)
    _check_positive("n", n)
    if n < h / 2:
        return 1.0
    x = n / h
    log_term = math.log(2 * x) + 1
    shifted = x - consts.a_double_prime
    return (consts.a * log_term / shifted
            * (math.sqrt(1 + consts.a_prime * shifted / log_term) + 1))


def phi_curve(h: float, ns, consts: PhiConstants = PHI_CONSTANTS) -> np.ndarray:
    """Phi_h evaluated at every design point in `ns`.

    Unlike :func:`phi_value` this accepts h = 0 and returns the continuous
    extension Phi_0(n) = 0, which the least-squares search needs at the left
    end of its domain.
    """
    ns = np.asarray(ns, dtype=float)
    if h < 0 or not math.isfinite(h):
        raise DomainError(f"h must be finite and >= 0, got {h!r}")
    if np.any(ns <= 0):
        raise DomainError("design points must be positive")
    if h == 0:
        return np.zeros_like(ns)
    return _phi_array(np.full_like(ns, h), ns, consts)


def phi_over_h(hs, n: float, consts: PhiConstants = PHI_CONSTANTS) -> np.ndarray:
    """Phi_h(n) for a fixed n over an array of positive h values."""
    hs = np.asarray(hs, dtype=float)
    _check_positive("n", n)
    if np.any(hs <= 0):
        raise DomainError("h values must be positive")
    return _phi_array(hs, np.full_like(hs, float(n)), consts)


def _phi_array(hs, ns, consts):
    x = ns / hs
    flat = ns < hs / 2
    xs = np.where(flat, 1.0, x)
    log_term = np.log(2 * xs) + 1
    shifted = xs - consts.a_double_prime
    smooth = (consts.a * log_term / shifted
              * (np.sqrt(1 + consts.a_prime * shifted / log_term) + 1))
    return np.where(flat, 1.0, smooth)


def fd_step(h):
    return np.maximum(1e-6, 1e-6 * np.asarray(h, dtype=float))


def phi_derivative_h(h: float, n: float, consts: PhiConstants = PHI_CONSTANTS) -> float:
    """Central finite-difference estimate of dPhi_h(n)/dh.

    Raises BranchBoundaryError when the stencil straddles h = 2n, where Phi
    has a kink; callers must then split the evaluation themselves.
    """
    _check_positive("h", h)
    _check_positive("n", n)
    step = float(fd_step(h))
    lo, hi = h - step, h + step
    if lo <= 0:
        raise DomainError(f"h={h!r} too small for a central stencil of width {step!r}")
    kink = 2 * n
    if lo > kink:
        return 0.0
    if hi > kink:
        raise BranchBoundaryError(
            f"stencil [{lo!r}, {hi!r}] straddles the branch boundary h = 2n = {kink!r}")
    return (phi_value(hi, n, consts) - phi_value(lo, n, consts)) / (2 * step)


def slope_profile(hs, n: float, consts: PhiConstants = PHI_CONSTANTS) -> np.ndarray:
    """dPhi/dh on a grid of h, switching to one-sided stencils next to the kink.

    Points on the constant branch (h > 2n) get slope 0. Points whose central
    stencil would cross h = 2n use a backward difference that stays on the
    smooth branch.
    """
    hs = np.asarray(hs, dtype=float)
    step = fd_step(hs)
    kink = 2.0 * n
    central = (phi_over_h(hs + step, n, consts) - phi_over_h(hs - step, n, consts)) / (2 * step)
    backward = (phi_over_h(hs, n, consts) - phi_over_h(hs - step, n, consts)) / step
    out = np.where(hs + step > kink, backward, central)
    return np.where(hs - step > kink, 0.0, out)


@dataclass(frozen=True)
class LipschitzEstimate:
    """Slope envelope of h -> Phi_h(n) over [h_lo, M].

    `upper` is L(n), `lower` is c(n, M). The floor is taken over the smooth
    part [h_lo, min(M, 2n)] only; beyond 2n the curve is flat at 1.
    """

    n: int
    M: float
    h_lo: float
    upper: float
    lower: float
    grid_resolution: float
    raw_upper: float
    raw_lower: float

    @property
    def smooth_hi(self):
        return min(self.M, 2.0 * self.n)


def _check_range(h_lo, M):
    _check_positive("h_lo", h_lo)
    _check_positive("M", M)
    if h_lo >= M:
        raise DomainError(f"need h_lo < M, got h_lo={h_lo!r}, M={M!r}")


def _extreme_slopes(n, h_lo, hi, intervals, consts):
    hs = np.linspace(h_lo, hi, intervals + 1)
    slopes = np.abs(slope_profile(hs, n, consts))
    return float(slopes.max()), float(slopes.min()), (hi - h_lo) / intervals


def lipschitz_envelope(n: int, h_lo: float = DEFAULT_H_LO, M: float = 50.0,
                       consts: PhiConstants = PHI_CONSTANTS, rtol: float = 1e-3,
                       start_intervals: int = 1024, max_intervals: int = 2**20) -> LipschitzEstimate:
    """Numerically bound the slope of Phi in h from above and below.

    The h-grid is doubled until both extremes move by less than `rtol`
    (relative), then the maximum is inflated and the minimum deflated by
    :data:`SLOPE_MARGIN`.
    """
    _check_positive("n", n)
    _check_range(h_lo, M)
    hi = min(M, 2.0 * n)
    if hi <= h_lo:
        raise DegeneracyError(
            f"no smooth branch in [h_lo={h_lo}, M={M}] for n={n}: Phi is constant there", n=n)
    intervals = start_intervals
    upper, lower, res = _extreme_slopes(n, h_lo, hi, intervals, consts)
    while intervals < max_intervals:
        intervals *= 2
        up2, lo2, res = _extreme_slopes(n, h_lo, hi, intervals, consts)
        stable = (abs(up2 - upper) <= rtol * max(abs(up2), 1e-300)
                  and abs(lo2 - lower) <= rtol * max(abs(lo2), 1e-300))
        upper, lower = up2, lo2
        if stable:
            break
    if not lower > 0:
        raise DegeneracyError(f"slope floor c(n, M) = {lower!r} <= 0 for n={n}", n=n)
    return LipschitzEstimate(
        n=n, M=M, h_lo=h_lo,
        upper=upper * (1 + SLOPE_MARGIN),
        lower=lower * (1 - SLOPE_MARGIN),
        grid_resolution=res, raw_upper=upper, raw_lower=lower,
    )


def lipschitz_upper(n: int, h_lo: float = DEFAULT_H_LO, M: float = 50.0) -> float:
    """L(n): an upper bound on |Phi_h(n) - Phi_h'(n)| / |h - h'| over [h_lo, M]."""
    return lipschitz_envelope(n, h_lo, M).upper


def lipschitz_lower(n: int, h_lo: float = DEFAULT_H_LO, M: float = 50.0) -> float:
    """c(n, M): a positive floor on the slope of Phi in h over the smooth branch."""
    return lipschitz_envelope(n, h_lo, M).lower


def entropy_bound(eta: float, tau: float, c_prime: float) -> float:
    """Upper bound on the eta-entropy of the radius-tau slice of {Phi_h}."""
    _check_positive("eta", eta)
    _check_positive("c_prime", c_prime)
    if tau < 0:
        raise DomainError(f"tau must be >= 0, got {tau!r}")
    return math.log((4 * tau / c_prime + eta) / eta)
