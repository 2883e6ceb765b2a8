"""Least-squares fit of the VC dimension to simulated deviations.

The estimate is the h in [0, M] whose curve Phi_h is closest to the mean
deviations in the root-mean-square norm over the k design points. The
objective is piecewise smooth and flat once h >= 2 * max(n), so the search is a
coarse scan for the global basin followed by golden-section refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .phi import phi_curve

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQ = (3 - math.sqrt(5)) / 2


def weighted_norm_k(values) -> float:
    """sqrt((1/k) * sum(v^2))."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DomainError("norm of an empty vector is undefined")
    return math.sqrt(float(np.mean(v * v)))


def inner_product_k(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.size == 0 or u.shape != v.shape:
        raise DomainError(f"need two non-empty vectors of equal length, got {u.shape} and {v.shape}")
    return float(np.mean(u * v))


@dataclass(frozen=True)
class FitConfig:
    M: float = 50.0
    coarse_step: float = 0.25
    tol: float = 1e-4

    def __post_init__(self):
        if not 0 < self.tol < self.coarse_step < self.M:
            raise DomainError(
                f"need 0 < tol < coarse_step < M, got tol={self.tol}, "
                f"coarse_step={self.coarse_step}, M={self.M}")


@dataclass(frozen=True)
class FitResult:
    h_hat: float
    residual_norm: float
    points: tuple
    fitted_curve: tuple
    boundary_flag: bool
    on_plateau: bool
    M: float

    def to_dict(self):
        return {
            "h_hat": self.h_hat,
            "residual_norm": self.residual_norm,
            "points": list(self.points),
            "fitted_curve": list(self.fitted_curve),
            "boundary_flag": self.boundary_flag,
            "on_plateau": self.on_plateau,
            "M": self.M,
        }


def _golden_section(f, a, b, tol):
    """Minimise f on [a, b]; ties move the bracket left so plateaus resolve to
    their smallest h."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def fit_h(xi, points=None, cfg: FitConfig = FitConfig()) -> FitResult:
    """Fit h to the mean deviations in `xi` (an XiSamples or a plain array of means).

    `points` defaults to ``xi.points``; when both are given they must agree.
    """
    if hasattr(xi, "means"):
        means = np.asarray(xi.means, dtype=float)
        if points is None:
            points = xi.points
        elif tuple(int(p) for p in _grid_points(points)) != tuple(xi.points):
            raise DomainError(f"samples cover {list(xi.points)} but grid is {list(_grid_points(points))}")
    else:
        means = np.asarray(xi, dtype=float)
        if points is None:
            raise DomainError("design points are required when passing raw means")
    ns = np.asarray(_grid_points(points), dtype=float)
    if ns.shape != means.shape or ns.size == 0:
        raise DomainError(f"{means.size} means do not match {ns.size} design points")

    def objective(h):
        return weighted_norm_k(means - phi_curve(h, ns))

    M = cfg.M
    n_steps = int(math.floor(M / cfg.coarse_step + 1e-9))
    scan = [i * cfg.coarse_step for i in range(n_steps + 1)]
    if scan[-1] < M:
        scan.append(M)
    values = [objective(h) for h in scan]
    best = int(np.argmin(values))
    lo = scan[max(best - 1, 0)]
    hi = scan[min(best + 1, len(scan) - 1)]
    h_ref, v_ref = _golden_section(objective, lo, hi, cfg.tol)
    # never worse than the coarse optimum; ties keep the smaller h
    if values[best] < v_ref or (values[best] == v_ref and scan[best] < h_ref):
        h_hat, residual = scan[best], values[best]
    else:
        h_hat, residual = h_ref, v_ref
    h_hat = float(min(max(h_hat, 0.0), M))
    fitted = phi_curve(h_hat, ns)
    boundary = h_hat <= cfg.coarse_step or h_hat >= M - cfg.coarse_step
    return FitResult(
        h_hat=h_hat,
        residual_norm=float(residual),
        points=tuple(int(v) for v in ns),
        fitted_curve=tuple(float(v) for v in fitted),
        boundary_flag=bool(boundary),
        on_plateau=bool(h_hat >= 2 * ns.max()),
        M=float(M),
    )


def _grid_points(points):
    return getattr(points, "points", points)


def objective_value(means, points, h) -> float:
    ns = np.asarray(_grid_points(points), dtype=float)
    return weighted_norm_k(np.asarray(means, dtype=float) - phi_curve(h, ns))


def residual_curve(fit: FitResult, xi) -> np.ndarray:
    """Per-point residual mean deviation minus fitted curve."""
    means = np.asarray(getattr(xi, "means", xi), dtype=float)
    if means.shape != (len(fit.fitted_curve),):
        raise DomainError(f"{means.size} means do not match {len(fit.fitted_curve)} fitted points")
    if hasattr(xi, "points") and tuple(xi.points) != fit.points:
        raise DomainError("samples and fit cover different design points")
    return means - np.asarray(fit.fitted_curve)
