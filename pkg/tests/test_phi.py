import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vcprobe.errors import BranchBoundaryError, DegeneracyError, DomainError
from vcprobe.phi import (
    PHI_CONSTANTS,
    entropy_bound,
    lipschitz_envelope,
    lipschitz_lower,
    lipschitz_upper,
    phi_curve,
    phi_derivative_h,
    phi_over_h,
    phi_value,
    slope_profile,
)


def phi_mp(h, n):
    """High-precision reference evaluation, independent of the numpy path."""
    mpmath.mp.dps = 40
    h, n = mpmath.mpf(h), mpmath.mpf(n)
    if n < h / 2:
        return mpmath.mpf(1)
    a, ap = mpmath.mpf("0.16"), mpmath.mpf("1.2")
    app = mpmath.mpf("0.5") - 2 * a - ap * a * a
    x = n / h
    L = mpmath.log(2 * x) + 1
    return a * L / (x - app) * (mpmath.sqrt(1 + ap * (x - app) / L) + 1)


def secant_extremes(n, h_lo, M, points=10_000):
    """Max and min of |Phi_h - Phi_h'| / |h - h'| over all pairs of a uniform grid."""
    hs = np.linspace(h_lo, M, points)
    vals = np.array([float(phi_mp(h, n)) for h in hs])
    hi, lo = 0.0, math.inf
    for i in range(points - 1):
        s = np.abs((vals[i + 1:] - vals[i]) / (hs[i + 1:] - hs[i]))
        hi, lo = max(hi, s.max()), min(lo, s.min())
    return hi, lo


# frozen from secant_extremes(100, 0.1, 20)
SECANT_MAX_N100 = 0.08435867609836877
SECANT_MIN_N100 = 0.008453325706343388


def test_constants_calibrated():
    c = PHI_CONSTANTS
    assert c.a == 0.16 and c.a_prime == 1.2
    assert c.a_double_prime == pytest.approx(0.14928, abs=1e-12)
    with pytest.raises(AttributeError):
        c.a = 0.2


def test_small_sample_branch_is_one():
    assert phi_value(1, 0.4) == 1.0


@pytest.mark.parametrize("h", [0.01, 1, 2, 5, 10, 37.5, 1e4])
def test_calibration_at_half(h):
    assert abs(phi_value(h, h / 2) - 1) <= 1e-6


def test_reference_value():
    assert phi_value(10, 100) == pytest.approx(0.19402, abs=1e-4)
    assert phi_value(10, 100) == pytest.approx(float(phi_mp(10, 100)), rel=1e-12)


@given(st.floats(0.05, 500), st.floats(0.05, 5000))
def test_matches_high_precision_reference(h, n):
    assert phi_value(h, n) == pytest.approx(float(phi_mp(h, n)), rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("h,n", [(0, 1), (-1, 1), (1, 0), (1, -2), (math.nan, 1)])
def test_domain_errors(h, n):
    with pytest.raises(DomainError):
        phi_value(h, n)


def test_vectorised_forms_agree():
    ns = np.array([1, 3, 10, 50, 400])
    np.testing.assert_allclose(phi_curve(7.5, ns), [phi_value(7.5, n) for n in ns], rtol=1e-15)
    hs = np.array([0.1, 2, 19.99, 20, 20.01, 100])
    np.testing.assert_allclose(phi_over_h(hs, 10), [phi_value(h, 10) for h in hs], rtol=1e-15)
    assert np.all(phi_curve(0.0, ns) == 0)


@given(st.floats(0.1, 200))
def test_nonincreasing_in_n_and_vanishing(h):
    ns = h / 2 * np.geomspace(1, 1e6, 200)
    vals = phi_curve(h, ns)
    assert np.all(np.diff(vals) <= 1e-12)
    assert vals[-1] < 0.01
    assert np.all((vals > 0) & (vals <= 1))


@given(st.integers(1, 2000))
def test_nondecreasing_in_h(n):
    hs = np.linspace(0.01, 2 * n, 400)
    assert np.all(np.diff(phi_over_h(hs, n)) >= -1e-12)


def test_derivative_constant_branch():
    assert phi_derivative_h(1, 0.3) == 0.0


def test_derivative_matches_secants():
    h, n = 10.0, 100.0
    step = 1e-4
    hs = h + step * np.arange(-3, 4)
    secants = [(float(phi_mp(b, n)) - float(phi_mp(a, n))) / step for a, b in zip(hs, hs[1:])]
    d = phi_derivative_h(h, n)
    assert d > 0
    assert d == pytest.approx(np.mean(secants[2:4]), abs=1e-4)


@pytest.mark.parametrize("h", [1.0, 2.0, 7.0, 200.0])
def test_derivative_branch_boundary(h):
    with pytest.raises(BranchBoundaryError):
        phi_derivative_h(h, h / 2)


def test_slope_profile_one_sided_near_kink():
    n = 10.0
    hs = np.array([5.0, 19.9999999, 20.0, 20.5, 30.0])
    s = slope_profile(hs, n)
    assert s[0] == pytest.approx(phi_derivative_h(5.0, n))
    assert s[1] > 0 and s[2] > 0
    assert s[3] == 0 and s[4] == 0


def test_lipschitz_upper_vs_brute_force():
    est = lipschitz_envelope(100, 0.1, 20)
    assert est.raw_upper == pytest.approx(SECANT_MAX_N100, abs=1e-3)
    assert est.upper >= SECANT_MAX_N100
    assert lipschitz_upper(100, 0.1, 20) == est.upper


def test_lipschitz_lower_vs_brute_force():
    est = lipschitz_envelope(100, 0.1, 20)
    assert est.lower == pytest.approx(SECANT_MIN_N100, abs=1e-3)
    assert 0 < est.lower <= SECANT_MIN_N100
    assert lipschitz_lower(100, 0.1, 20) == est.lower


@pytest.mark.slow
def test_frozen_secant_oracle_values():
    hi, lo = secant_extremes(100, 0.1, 20, points=2_000)
    # coarser than the frozen 10^4 grid, so only loosely comparable
    assert hi == pytest.approx(SECANT_MAX_N100, abs=2e-3)
    assert lo == pytest.approx(SECANT_MIN_N100, abs=1e-4)


@pytest.mark.parametrize("n", [1, 5, 40, 100, 1000])
def test_grid_doubling_stability(n):
    a = lipschitz_envelope(n, 0.1, 50)
    b = lipschitz_envelope(n, 0.1, 50, start_intervals=2 * round(a.M / a.grid_resolution))
    assert abs(a.upper - b.upper) < 1e-3
    assert abs(a.lower - b.lower) < 1e-3


@pytest.mark.parametrize("n,M", [(100, 20), (10, 50), (3, 50), (60, 50)])
def test_sandwich_on_random_pairs(n, M):
    est = lipschitz_envelope(n, 0.1, M)
    rng = np.random.default_rng(n)
    pairs = rng.uniform(0.1, M, size=(100, 2))
    lo_side = rng.uniform(0.1, est.smooth_hi, size=(100, 2))
    for h1, h2 in pairs:
        gap = abs(phi_value(h1, n) - phi_value(h2, n))
        assert gap <= est.upper * abs(h1 - h2) + 1e-15
    for h1, h2 in lo_side:
        gap = abs(phi_value(h1, n) - phi_value(h2, n))
        assert est.lower * abs(h1 - h2) <= gap + 1e-15
    assert 0 < est.lower <= est.upper


def test_lipschitz_errors():
    with pytest.raises(DomainError):
        lipschitz_envelope(10, 5, 5)
    with pytest.raises(DomainError):
        lipschitz_upper(10, 6, 5)
    with pytest.raises(DegeneracyError):
        lipschitz_envelope(1, 3, 50)  # smooth branch ends at h = 2 < h_lo


def test_entropy_bound_examples():
    assert entropy_bound(0.3, 0, 7) == 0
    assert entropy_bound(1.7, 1.7, 4) == pytest.approx(math.log(2))
    assert entropy_bound(0.5, 1, 4) == pytest.approx(math.log(3))
    with pytest.raises(DomainError):
        entropy_bound(0, 1, 1)
    with pytest.raises(DomainError):
        entropy_bound(1, -1, 1)


@settings(max_examples=50)
@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0, 10), st.floats(0.01, 10))
def test_entropy_bound_monotone(e1, e2, tau, cp):
    lo, hi = sorted((e1, e2))
    assert entropy_bound(lo, tau, cp) >= entropy_bound(hi, tau, cp)
    assert entropy_bound(lo, tau + 1, cp) >= entropy_bound(lo, tau, cp)
