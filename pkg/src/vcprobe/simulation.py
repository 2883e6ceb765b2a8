"""Flipped-label simulation of the maximum-deviation statistic.

For each design point n and repetition i, a fresh sample of 2n labelled points
is drawn, split into halves W and W', the labels of W' are flipped and one model
is trained on the merged set. The observation is

    xi_i(n) = |R(f, W) - R(f, W')|

with both risks measured against the original labels.

Seeding
-------
Every (design point index l, repetition i) job gets its own 64-bit seed::

    run_seed = mix64(mix64(mix64(master_seed) ^ l) ^ i)

where ``mix64(z)`` is the SplitMix64 output function applied to
``z + 0x9E3779B97F4A7C15`` (all arithmetic mod 2**64)::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

Within a job, the data is drawn with ``numpy.random.default_rng(mix64(run_seed ^ 1))``
and the trainer is seeded with ``mix64(run_seed ^ 2)``. Seeds depend only on
indices, never on scheduling, so results are identical for any worker count.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classifiers import ClassifierFamily, Dataset, empirical_risk, fit_erm
from .errors import ConfigError, DomainError, SimulationError, VCProbeError

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z = (z + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def run_seed(master_seed: int, point_index: int, rep: int) -> int:
    return mix64(mix64(mix64(master_seed & MASK64) ^ point_index) ^ rep)


# data -------------------------------------------------------------------------

DATA_GENERATORS = ("uniform", "gaussian")


@dataclass(frozen=True)
class DataSpec:
    """Feature distribution plus label scheme of the simulated data.

    Labels are independent fair coins (`label_prob` = 0.5 by default), so the
    flipped-label deviation is driven by capacity alone.
    """

    features: str = "uniform"
    label_prob: float = 0.5

    def __post_init__(self):
        if self.features not in DATA_GENERATORS:
            raise ConfigError(f"unknown feature generator {self.features!r}; "
                              f"choose from {list(DATA_GENERATORS)}")
        if not 0.0 <= self.label_prob <= 1.0:
            raise ConfigError(f"label_prob must be in [0, 1], got {self.label_prob!r}")

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, str):
            return cls(features=d)
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad data spec {d!r}: {exc}") from None

    def to_dict(self):
        return {"features": self.features, "label_prob": self.label_prob}


def generate_dataset(data_spec: DataSpec, size: int, p: int, seed: int) -> Dataset:
    """Draw `size` i.i.d. rows of dimension `p` from `data_spec`."""
    if isinstance(data_spec, (str, dict)):
        data_spec = DataSpec.from_dict(data_spec)
    if size < 2:
        raise DomainError(f"need at least 2 rows, got size={size}")
    if p < 1:
        raise DomainError(f"need p >= 1, got {p}")
    rng = np.random.default_rng(seed)
    if data_spec.features == "uniform":
        X = rng.random((size, p))
    else:
        X = rng.standard_normal((size, p))
    y = (rng.random(size) < data_spec.label_prob).astype(np.int8)
    return Dataset(X, y)


# one run ----------------------------------------------------------------------

@dataclass(frozen=True)
class RunOutcome:
    xi: float
    train_risk: float


def xi_run(family: ClassifierFamily, n: int, p: int, data_spec: DataSpec, seed: int) -> RunOutcome:
    """One flipped-label run, also reporting the merged-set training risk."""
    if n < 1:
        raise DomainError(f"design point must be >= 1, got {n}")
    data = generate_dataset(data_spec, 2 * n, p, mix64(seed ^ 1))
    W, W_prime = data.slice(0, n), data.slice(n, 2 * n)
    merged = W.concat(W_prime.with_labels(1 - W_prime.y))
    model = fit_erm(family, merged, mix64(seed ^ 2))
    pred = model.predict(merged.X)
    train_risk = float(np.count_nonzero(pred != merged.y)) / merged.n
    risk_w = float(np.count_nonzero(pred[:n] != W.y)) / n
    risk_w_prime = float(np.count_nonzero(pred[n:] != W_prime.y)) / n
    return RunOutcome(abs(risk_w - risk_w_prime), train_risk)


def xi_single_run(family, n, p, data_spec, seed) -> float:
    return xi_run(family, n, p, data_spec, seed).xi


# whole plan -------------------------------------------------------------------

@dataclass(frozen=True)
class DesignGrid:
    points: tuple

    def __post_init__(self):
        pts = tuple(int(v) for v in self.points)
        if any(float(v) != float(o) for v, o in zip(pts, self.points)):
            raise DomainError(f"design points must be integers, got {list(self.points)}")
        if len(pts) < 2:
            raise DomainError("a design grid needs at least 2 points")
        if pts[0] < 1 or any(b <= a for a, b in zip(pts, pts[1:])):
            raise DomainError(f"design points must be strictly increasing and >= 1, got {list(pts)}")
        object.__setattr__(self, "points", pts)

    @property
    def k(self):
        return len(self.points)

    def as_array(self):
        return np.asarray(self.points, dtype=float)

    @classmethod
    def geometric(cls, h_guess: float = 10.0, k: int = 10):
        """k roughly geometric points over [max(1, h_guess/2), 30 h_guess]."""
        lo = max(1.0, h_guess / 2)
        hi = 30.0 * h_guess
        raw = np.geomspace(lo, hi, k)
        pts = []
        for v in raw:
            v = int(round(v))
            if pts and v <= pts[-1]:
                v = pts[-1] + 1
            pts.append(max(v, 1))
        return cls(tuple(pts))


@dataclass(frozen=True)
class SimulationPlan:
    grid: DesignGrid
    m: int
    family: ClassifierFamily
    p: int = 1
    master_seed: int = 0
    data_spec: DataSpec = field(default_factory=DataSpec)

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"m must be >= 1, got {self.m}")


@dataclass(frozen=True, eq=False)
class XiSamples:
    """k x m matrix of simulated deviations with per-run training risks."""

    points: tuple
    raw: np.ndarray
    train_risk: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=float)
        tr = np.asarray(self.train_risk, dtype=float)
        if raw.ndim != 2 or raw.shape[0] != len(self.points):
            raise DomainError(f"raw matrix shape {raw.shape} does not match {len(self.points)} points")
        if tr.shape != raw.shape:
            raise DomainError("train_risk must have the same shape as raw")
        if np.any(raw < 0) or np.any(raw > 1):
            raise DomainError("deviation samples must lie in [0, 1]")
        raw.setflags(write=False)
        tr.setflags(write=False)
        object.__setattr__(self, "points", tuple(int(v) for v in self.points))
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "train_risk", tr)

    @classmethod
    def from_means(cls, points, means):
        """Single-column samples whose means are exactly `means` (fixtures, refits)."""
        col = np.asarray(means, dtype=float).reshape(-1, 1)
        return cls(tuple(points), col, np.full_like(col, np.nan))

    @property
    def k(self):
        return self.raw.shape[0]

    @property
    def m(self):
        return self.raw.shape[1]

    @property
    def means(self):
        return self.raw.mean(axis=1)

    def summary(self):
        return [
            {"n": n, "mean": float(r.mean()), "std": float(r.std(ddof=1)) if r.size > 1 else 0.0,
             "min": float(r.min()), "max": float(r.max()), "mean_train_risk": float(t.mean())}
            for n, r, t in zip(self.points, self.raw, self.train_risk)
        ]

    def same_as(self, other):
        return (self.points == other.points and self.raw.tobytes() == other.raw.tobytes()
                and self.train_risk.tobytes() == other.train_risk.tobytes())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "rep", "xi", "train_risk"])
        for n, row, trow in zip(self.points, self.raw, self.train_risk):
            for i, (xi, tr) in enumerate(zip(row, trow)):
                w.writerow([n, i, repr(float(xi)), repr(float(tr))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, expected_means=None) -> "XiSamples":
        """Parse the CSV written by :meth:`to_csv`; optionally cross-check means."""
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != ["n", "rep", "xi", "train_risk"]:
            raise DomainError(f"unexpected CSV header {reader.fieldnames}")
        rows: dict = {}
        for rec in reader:
            try:
                n, rep = int(rec["n"]), int(rec["rep"])
                rows.setdefault(n, {})[rep] = (float(rec["xi"]), float(rec["train_risk"]))
            except (TypeError, ValueError) as exc:
                raise DomainError(f"malformed CSV row {rec}: {exc}") from None
        points = tuple(sorted(rows))
        reps = {len(r) for r in rows.values()}
        if len(reps) != 1:
            raise DomainError("every design point must have the same number of repetitions")
        m = reps.pop()
        raw = np.empty((len(points), m))
        tr = np.empty((len(points), m))
        for a, n in enumerate(points):
            if sorted(rows[n]) != list(range(m)):
                raise DomainError(f"repetitions for n={n} are not 0..{m - 1}")
            for i in range(m):
                raw[a, i], tr[a, i] = rows[n][i]
        out = cls(points, raw, tr)
        if expected_means is not None and not np.allclose(out.means, expected_means, rtol=0, atol=1e-12):
            raise DomainError("recomputed means disagree with the recorded means")
        return out


def _job(args):
    family, n, p, data_spec, seed, a, i = args
    try:
        out = xi_run(family, n, p, data_spec, seed)
    except VCProbeError as exc:
        return a, i, exc
    except Exception as exc:  # noqa: BLE001 - re-raised with the job index attached
        return a, i, SimulationError(f"{type(exc).__name__}: {exc}")
    return a, i, out


def resolve_workers(workers=None) -> int:
    if workers is None:
        env = os.environ.get("VCPROBE_WORKERS")
        workers = int(env) if env else 1
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    return workers


def simulate_xi(plan: SimulationPlan, workers=None) -> XiSamples:
    """Run every (design point, repetition) job of `plan` and collect the matrix."""
    workers = resolve_workers(workers)
    k, m = plan.grid.k, plan.m
    jobs = [(plan.family, n, plan.p, plan.data_spec, run_seed(plan.master_seed, a, i), a, i)
            for a, n in enumerate(plan.grid.points) for i in range(m)]
    if workers == 1:
        results = map(_job, jobs)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        chunk = max(1, math.ceil(len(jobs) / (4 * workers)))
        results = pool.map(_job, jobs, chunksize=chunk)
    raw = np.empty((k, m))
    tr = np.empty((k, m))
    try:
        for a, i, out in results:
            if isinstance(out, Exception):
                n = plan.grid.points[a]
                if isinstance(out, SimulationError):
                    raise SimulationError(f"run (n={n}, rep={i}) failed: {out}", a, i) from out
                out.args = (f"run (n={n}, rep={i}) failed: {out}",) + out.args[1:]
                raise out
            raw[a, i] = out.xi
            tr[a, i] = out.train_risk
    finally:
        if workers > 1:
            pool.shutdown(cancel_futures=True)
    return XiSamples(plan.grid.points, raw, tr)
