"""Constants, concentration bounds for the estimated dimension, and risk bounds.

All probability-valued outputs are clamped to [0, 1] while the raw value is
kept alongside. Growth-function arithmetic stays in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import DomainError, UnreachableTargetError
from .phi import DEFAULT_H_LO, LipschitzEstimate, lipschitz_envelope

C3 = 2304
#: sup-norm radius of the curve class; fixes the 4 / sqrt(2mk) prefactor of the delta threshold
TAU = 4.0
LN4 = math.log(4.0)


def _mean_of_squares(values, what):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DomainError(f"{what}: need at least one value")
    if np.any(~(v > 0)):
        raise DomainError(f"{what}: all values must be positive")
    return float(np.mean(v * v))


def compute_c_prime(L) -> float:
    """Mean squared upper slope constant over the design points."""
    return _mean_of_squares(L, "c_prime")


def compute_c2(c_values) -> float:
    """Mean squared lower slope constant over the design points."""
    return _mean_of_squares(c_values, "c2")


# c1 ---------------------------------------------------------------------------

def c1_quadrature(c_prime: float, tol: float = 1e-10) -> float:
    """Adaptive quadrature of the entropy integral int_0^1 sqrt(ln(1 + 4v/c')) dv."""
    if not c_prime > 0:
        raise DomainError(f"c_prime must be positive, got {c_prime!r}")
    value, _ = integrate.quad(lambda v: math.sqrt(math.log1p(4 * v / c_prime)),
                              0.0, 1.0, epsabs=tol, epsrel=0.0, limit=500)
    return value


def c1_reference_form(c_prime: float) -> float:
    """(c' + 1/4) sqrt(ln(4c' + 1)) - sqrt(pi)/8 erfi(sqrt(4c' + 1)), the commonly quoted form.

    This does not agree with the integral it is meant to evaluate; it is kept
    only so reports can show the discrepancy. May return -inf (erfi overflow).
    """
    if not c_prime > 0:
        raise DomainError(f"c_prime must be positive, got {c_prime!r}")
    with np.errstate(over="ignore"):
        erfi = float(special.erfi(math.sqrt(4 * c_prime + 1)))
    return (c_prime + 0.25) * math.sqrt(math.log(4 * c_prime + 1)) - math.sqrt(math.pi) / 8 * erfi


def c1_substitution_form(c_prime: float) -> float:
    """Closed form of the entropy integral via u = 1 + 4v/c'.

    (c'/4 + 1) sqrt(ln(1 + 4/c')) - (c' sqrt(pi) / 8) erfi(sqrt(ln(1 + 4/c'))).
    Cancellation makes it lose accuracy for very large c'.
    """
    if not c_prime > 0:
        raise DomainError(f"c_prime must be positive, got {c_prime!r}")
    s = math.sqrt(math.log1p(4 / c_prime))
    return (c_prime / 4 + 1) * s - c_prime * math.sqrt(math.pi) / 8 * float(special.erfi(s))


@dataclass(frozen=True)
class C1Result:
    value: float
    reference_closed_form: float
    substitution_closed_form: float

    @property
    def discrepancy(self):
        return abs(self.value - self.reference_closed_form)

    @property
    def discrepancy_reported(self):
        return self.discrepancy > 1e-6


def compute_c1(c_prime: float) -> C1Result:
    """Entropy-integral constant. The quadrature value governs; both closed forms ride along."""
    return C1Result(
        value=c1_quadrature(c_prime),
        reference_closed_form=c1_reference_form(c_prime),
        substitution_closed_form=c1_substitution_form(c_prime),
    )


@dataclass(frozen=True)
class ConstantsBundle:
    points: tuple
    M: float
    h_lo: float
    envelopes: tuple = field(repr=False)
    c_prime: float
    c1: C1Result
    c2: float
    c3: int = C3

    @property
    def L(self):
        return [e.upper for e in self.envelopes]

    @property
    def c(self):
        return [e.lower for e in self.envelopes]

    @property
    def sqrt_c_prime(self):
        return math.sqrt(self.c_prime)

    def to_dict(self):
        return {
            "points": list(self.points),
            "M": self.M,
            "h_lo": self.h_lo,
            "L": self.L,
            "c": self.c,
            "grid_resolution": [e.grid_resolution for e in self.envelopes],
            "c_prime": self.c_prime,
            "sqrt_c_prime": self.sqrt_c_prime,
            "c1": self.c1.value,
            "c1_closed_form": self.c1.reference_closed_form,
            "c1_substitution_form": self.c1.substitution_closed_form,
            "c1_discrepancy": self.c1.discrepancy,
            "c1_discrepancy_reported": self.c1.discrepancy_reported,
            "c2": self.c2,
            "c3": self.c3,
        }


def compute_constants(points, M: float = 50.0, h_lo: float = DEFAULT_H_LO) -> ConstantsBundle:
    """Slope envelopes at every design point and the derived constants."""
    points = tuple(int(n) for n in getattr(points, "points", points))
    if not points:
        raise DomainError("need at least one design point")
    envelopes: list[LipschitzEstimate] = [lipschitz_envelope(n, h_lo, M) for n in points]
    c_prime = compute_c_prime([e.upper for e in envelopes])
    return ConstantsBundle(
        points=points, M=float(M), h_lo=float(h_lo), envelopes=tuple(envelopes),
        c_prime=c_prime, c1=compute_c1(c_prime),
        c2=compute_c2([e.lower for e in envelopes]),
    )


# concentration of the estimate ---------------------------------------------------

def _check_mk(m, k):
    if int(m) != m or int(k) != k or m < 1 or k < 1:
        raise DomainError(f"m and k must be positive integers, got m={m!r}, k={k!r}")


def delta_threshold(m: int, k: int, c1: float) -> float:
    """Smallest admissible deviation: 4 / sqrt(2mk) * max(24 c1, 29), exclusive."""
    _check_mk(m, k)
    return TAU * max(24 * c1, 29) / math.sqrt(2 * m * k)


def _tail(delta, m, k, c2):
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta!r}")
    return 13 * math.exp(-m * k * c2 * delta**2 / (16 * C3))


@dataclass(frozen=True)
class DeviationReport:
    m: int
    k: int
    delta: float
    delta_min: float
    c2: float
    prob_raw: float
    prob: float
    valid: bool

    def to_dict(self):
        return dict(self.__dict__)


def estimator_deviation_bound(delta: float, m: int, k: int, c2: float, c1: float) -> DeviationReport:
    """Bound on P(|h_hat - h*| > delta); `valid` is False at or below the delta threshold."""
    _check_mk(m, k)
    raw = _tail(delta, m, k, c2)
    delta_min = delta_threshold(m, k, c1)
    return DeviationReport(m=int(m), k=int(k), delta=float(delta), delta_min=delta_min,
                           c2=float(c2), prob_raw=raw, prob=min(1.0, raw),
                           valid=bool(delta > delta_min))


def varphi(m: int, k: int, c2: float, delta: float) -> float:
    """Probability mass conceded to a miss of the dimension estimate by more than delta."""
    _check_mk(m, k)
    return min(1.0, _tail(delta, m, k, c2))


def phi_deviation_bound(delta: float, m: int, k: int) -> float:
    """Bound on P(||Phi_hhat - Phi_h*||_k > delta); meaningful above the delta threshold."""
    _check_mk(m, k)
    return min(1.0, _tail(delta, m, k, 1.0))


# risk bounds ------------------------------------------------------------------

def log_growth_function(h: float, n: float) -> float:
    """Log of the growth-function bound: h (ln(n/h) + 1), or n ln 2 when n < h."""
    if not h > 0 or not n > 0:
        raise DomainError(f"h and n must be positive, got h={h!r}, n={n!r}")
    if n < h:
        return n * math.log(2)
    return h * (math.log(n / h) + 1)


def _log_first_term(h, n, rho):
    return LN4 + log_growth_function(h, 2 * n) - n * rho * rho


def _exp(x):
    return math.exp(x) if x < 709 else math.inf


def classical_risk_bound(h: float, n: float, rho: float) -> float:
    """4 GF(h, 2n) exp(-n rho^2), clamped to [0, 1]."""
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho!r}")
    return min(1.0, _exp(_log_first_term(h, n, rho)))


@dataclass(frozen=True)
class GeneralizationReport:
    n: float
    rho: float
    h_hat: float
    delta: float
    h_eff: float
    varphi: float
    log_first_term: float
    bound_raw: float
    bound: float

    @property
    def vacuous(self):
        return self.bound >= 1.0

    def to_dict(self):
        d = dict(self.__dict__)
        d["vacuous"] = self.vacuous
        return d


def estimated_risk_bound(h_hat: float, delta: float, n: float, rho: float,
                         varphi: float) -> GeneralizationReport:
    """Risk bound with the dimension replaced by h_hat + delta, paying varphi for a miss."""
    if not 0.0 <= varphi <= 1.0:
        raise DomainError(f"varphi must lie in [0, 1], got {varphi!r}")
    if h_hat < 0 or not delta > 0 or not n > 0 or not rho > 0:
        raise DomainError("need h_hat >= 0 and positive delta, n, rho")
    h_eff = h_hat + delta
    log_first = _log_first_term(h_eff, n, rho)
    raw = _exp(log_first) * (1 - varphi) + varphi if varphi < 1 else 1.0
    return GeneralizationReport(n=n, rho=rho, h_hat=h_hat, delta=delta, h_eff=h_eff,
                                varphi=varphi, log_first_term=log_first,
                                bound_raw=raw, bound=min(1.0, raw))


def _bound_at(h_eff, n, rho, phi):
    if rho <= 0:
        return 1.0
    first = min(1.0, _exp(_log_first_term(h_eff, n, rho)))
    return min(1.0, first * (1 - phi) + phi)


def invert_rho(h_eff: float, n: float, target: float, varphi: float) -> float:
    """Smallest rho whose estimated-dimension bound is at most `target` (bisection)."""
    if not 0 < target < 1:
        raise DomainError(f"target must lie in (0, 1), got {target!r}")
    if not 0 <= varphi <= 1:
        raise DomainError(f"varphi must lie in [0, 1], got {varphi!r}")
    if target <= varphi:
        raise UnreachableTargetError(
            f"target {target!r} is at or below the floor varphi = {varphi!r}")
    if not h_eff > 0 or not n > 0:
        raise DomainError("h_eff and n must be positive")
    lo, hi = 0.0, 1.0
    while _bound_at(h_eff, n, hi, varphi) > target:
        lo, hi = hi, 2 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _bound_at(h_eff, n, mid, varphi) > target:
            lo = mid
        else:
            hi = mid
    return hi
