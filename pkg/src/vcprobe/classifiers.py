"""Classifier families, trained models and empirical risk.

Every family exposes ``fit(data, seed) -> model`` and every model exposes a
vectorised ``predict(X) -> array of {0, 1}``. Models are immutable once fitted.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .errors import DomainError


class LabeledSample(NamedTuple):
    features: tuple
    label: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``X`` (n x p) with binary labels ``y``. Row order matters."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.int8))
        if X.ndim != 2:
            raise DomainError(f"features must be a 2-d array, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DomainError(f"label vector shape {y.shape} does not match {X.shape[0]} rows")
        if y.size and not np.all((y == 0) | (y == 1)):
            raise DomainError("labels must be 0 or 1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_samples(cls, samples, p=None):
        samples = list(samples)
        if p is None:
            if not samples:
                raise DomainError("cannot infer dimension of an empty sample list")
            p = len(samples[0][0])
        for s in samples:
            if len(s[0]) != p:
                raise DomainError(f"sample {s!r} does not have dimension {p}")
        X = np.array([s[0] for s in samples], dtype=float).reshape(len(samples), p)
        y = np.array([s[1] for s in samples], dtype=np.int8)
        return cls(X, y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def __len__(self):
        return self.n

    def __iter__(self) -> Iterator[LabeledSample]:
        for x, label in zip(self.X, self.y):
            yield LabeledSample(tuple(float(v) for v in x), int(label))

    def with_labels(self, y):
        return Dataset(self.X, y)

    def slice(self, start, stop):
        return Dataset(self.X[start:stop], self.y[start:stop])

    def concat(self, other):
        if other.p != self.p:
            raise DomainError(f"cannot merge datasets of dimension {self.p} and {other.p}")
        return Dataset(np.vstack([self.X, other.X]), np.concatenate([self.y, other.y]))

    def tobytes(self):
        return self.X.tobytes() + self.y.tobytes()


class TrainedModel(ABC):
    dimension: int

    @abstractmethod
    def predict(self, X) -> np.ndarray:
        ...

    def predict_one(self, features) -> int:
        return int(self.predict(np.asarray(features, dtype=float).reshape(1, -1))[0])

    def params(self) -> dict:
        return {}


class ClassifierFamily(ABC):
    name: str = "abstract"
    known_vc_dimension: Optional[float] = None

    @abstractmethod
    def fit(self, data: Dataset, seed: int = 0) -> TrainedModel:
        ...

    def check_dimension(self, p):
        pass

    def hyperparameters(self) -> dict:
        return {}

    def descriptor(self) -> dict:
        return {"name": self.name, **self.hyperparameters()}


def _check_rows(model, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.dimension:
        raise DomainError(f"model expects {model.dimension} features, got shape {X.shape}")
    return X


def empirical_risk(model: TrainedModel, data: Dataset) -> float:
    """Fraction of rows of `data` that `model` mislabels."""
    if data.n == 0:
        raise DomainError("empirical risk of an empty dataset is undefined")
    if data.p != model.dimension:
        raise DomainError(f"model dimension {model.dimension} != data dimension {data.p}")
    pred = model.predict(data.X)
    return float(np.count_nonzero(pred != data.y)) / data.n


def fit_erm(family: ClassifierFamily, data: Dataset, seed: int = 0) -> TrainedModel:
    """Run the family's (exact or approximate) empirical risk minimiser."""
    if data.n == 0:
        raise DomainError("cannot fit on an empty dataset")
    family.check_dimension(data.p)
    return family.fit(data, seed)


# constant ---------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantModel(TrainedModel):
    label: int
    dimension: int

    def predict(self, X):
        X = _check_rows(self, X)
        return np.full(X.shape[0], self.label, dtype=np.int8)

    def params(self):
        return {"label": self.label}


@dataclass(frozen=True)
class ConstantFamily(ClassifierFamily):
    """Always predicts the same label; VC dimension 0. Useful as a null baseline."""

    label: int = 0
    name: str = field(default="constant", init=False)
    known_vc_dimension: float = field(default=0.0, init=False)

    def fit(self, data, seed=0):
        return ConstantModel(self.label, data.p)

    def hyperparameters(self):
        return {"label": self.label}


# memorizer --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MemorizerModel(TrainedModel):
    table: dict
    dimension: int
    default_label: int = 0

    def predict(self, X):
        X = _check_rows(self, X)
        X = np.ascontiguousarray(X)
        get = self.table.get
        return np.fromiter((get(row.tobytes(), self.default_label) for row in X),
                           dtype=np.int8, count=X.shape[0])

    def params(self):
        return {"stored_points": len(self.table)}


@dataclass(frozen=True)
class ShatterOracle(ClassifierFamily):
    """Memorises the training set, so it shatters every finite set of distinct points.

    Conflicting labels on a repeated feature vector resolve to the majority
    label of that vector (ties to 0). Unseen points get label 0.
    """

    name: str = field(default="shatter", init=False)
    known_vc_dimension: float = field(default=math.inf, init=False)

    def fit(self, data, seed=0):
        votes: dict = {}
        X = np.ascontiguousarray(data.X)
        for row, label in zip(X, data.y):
            key = row.tobytes()
            votes[key] = votes.get(key, 0) + (1 if label else -1)
        table = {k: int(v > 0) for k, v in votes.items()}
        return MemorizerModel(table, data.p)


# intervals on the line ----------------------------------------------------------

@dataclass(frozen=True)
class IntervalModel(TrainedModel):
    """Predicts `inside_label` on [left, right] and the other label elsewhere.

    An empty interval is encoded as left = right = +inf.
    """

    left: float
    right: float
    inside_label: int = 1
    dimension: int = 1

    def predict(self, X):
        x = _check_rows(self, X)[:, 0]
        inside = (x >= self.left) & (x <= self.right)
        return np.where(inside, self.inside_label, 1 - self.inside_label).astype(np.int8)

    def params(self):
        return {"left": self.left, "right": self.right, "inside_label": self.inside_label}


def _best_segment(weights):
    """Maximum-sum contiguous segment of `weights`, preferring the smallest
    start index and then the shortest length among ties. Returns (sum, i, j)
    with inclusive indices, or (0, -1, -1) when no segment beats empty."""
    prefix = np.concatenate([[0], np.cumsum(weights)])
    # suffix_max[i] = max(prefix[i:]); best segment starting at i is suffix_max[i+1] - prefix[i]
    suffix_max = np.maximum.accumulate(prefix[::-1])[::-1]
    gains = suffix_max[1:] - prefix[:-1]
    best = gains.max()
    if best <= 0:
        return 0, -1, -1
    i = int(np.argmax(gains == best))
    target = prefix[i] + best
    j = i + int(np.argmax(prefix[i + 1:] == target))
    return int(best), i, j


@dataclass(frozen=True)
class Interval1D(ClassifierFamily):
    """Indicators of a closed interval on the real line, exact ERM in O(n log n).

    With ``polarity="both"`` the family also contains interval complements
    (VC dimension 3); ``polarity="inside"`` keeps plain intervals (VC dimension 2).
    Ties between optimal hypotheses go to the smallest left endpoint, then the
    smallest width, then to the inside polarity; an empty interval is chosen
    only when no non-empty one does strictly better.
    """

    polarity: str = "both"
    name: str = field(default="interval1d", init=False)

    def __post_init__(self):
        if self.polarity not in ("both", "inside"):
            raise DomainError(f"polarity must be 'both' or 'inside', got {self.polarity!r}")

    @property
    def known_vc_dimension(self):
        return 3.0 if self.polarity == "both" else 2.0

    def check_dimension(self, p):
        if p != 1:
            raise DomainError(f"Interval1D needs 1-d features, got p={p}")

    def hyperparameters(self):
        return {"polarity": self.polarity}

    def fit(self, data, seed=0):
        self.check_dimension(data.p)
        x = data.X[:, 0]
        values, inverse = np.unique(x, return_inverse=True)
        signs = np.where(data.y == 1, 1, -1)
        # net vote for label 1 at each distinct x
        votes = np.bincount(inverse, weights=signs, minlength=values.size).astype(np.int64)
        ones = int(np.count_nonzero(data.y))

        candidates = []
        for inside_label in ((1, 0) if self.polarity == "both" else (1,)):
            w = votes if inside_label == 1 else -votes
            gain, i, j = _best_segment(w)
            # errors: labels disagreeing with the outside label, corrected by the segment gain
            base = ones if inside_label == 1 else data.n - ones
            candidates.append((base - gain, i, j, inside_label))
        errors, i, j, inside_label = min(
            candidates, key=lambda c: (c[0], c[1] if c[1] >= 0 else math.inf, c[2] - c[1]))
        if i < 0:
            return IntervalModel(math.inf, math.inf, inside_label)
        left = -math.inf if i == 0 else 0.5 * (values[i - 1] + values[i])
        right = math.inf if j == values.size - 1 else 0.5 * (values[j] + values[j + 1])
        # midpoints can collapse onto a neighbouring value when values are adjacent floats
        if i > 0 and left >= values[i]:
            left = values[i]
        if j < values.size - 1 and right <= values[j]:
            right = values[j]
        return IntervalModel(float(left), float(right), inside_label)


# affine half-spaces -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HalfspaceModel(TrainedModel):
    """Label 1 where w . ((x - center) / scale) + b > 0."""

    weights: np.ndarray
    bias: float
    center: np.ndarray
    scale: np.ndarray
    train_risk: float = float("nan")

    @property
    def dimension(self):
        return self.weights.shape[0]

    def predict(self, X):
        X = _check_rows(self, X)
        Z = (X - self.center) / self.scale
        return (Z @ self.weights + self.bias > 0).astype(np.int8)

    def params(self):
        return {"weights": self.weights.tolist(), "bias": self.bias,
                "center": self.center.tolist(), "scale": self.scale.tolist()}


@dataclass(frozen=True)
class LinearHalfspace(ClassifierFamily):
    """Affine half-spaces in R^p (VC dimension p + 1), fitted by a pocket perceptron.

    The pocket perceptron with ratchet is restarted `restarts` times from
    random weights, each for at most `epochs` shuffled passes; the restart with
    the lowest training error wins. Features are standardised first, which
    leaves the hypothesis class unchanged.
    """

    p: int = 1
    restarts: int = 32
    epochs: int = 200
    name: str = field(default="halfspace", init=False)

    def __post_init__(self):
        if self.p < 1 or self.restarts < 1 or self.epochs < 1:
            raise DomainError("p, restarts and epochs must all be >= 1")

    @property
    def known_vc_dimension(self):
        return float(self.p + 1)

    def check_dimension(self, p):
        if p != self.p:
            raise DomainError(f"half-space family built for p={self.p}, got p={p}")

    def hyperparameters(self):
        return {"p": self.p, "restarts": self.restarts, "epochs": self.epochs}

    def fit(self, data, seed=0):
        from ._pocket import pocket_perceptron

        self.check_dimension(data.p)
        center = data.X.mean(axis=0)
        scale = data.X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        Z = (data.X - center) / scale
        Za = np.hstack([Z, np.ones((data.n, 1))])
        signs = np.where(data.y == 1, 1.0, -1.0)
        rng = np.random.default_rng(seed)
        inits = rng.standard_normal((self.restarts, data.p + 1))
        shuffle_seeds = rng.integers(0, 2**31 - 1, size=self.restarts)
        w, errors = pocket_perceptron(Za, signs, inits, shuffle_seeds, self.epochs)
        # both constant labelings are half-spaces too; never return anything worse
        ones = int(np.count_nonzero(data.y))
        for const_errors, bias in ((data.n - ones, 1.0), (ones, -1.0)):
            if const_errors < errors:
                w = np.zeros(data.p + 1)
                w[-1] = bias
                errors = const_errors
        return HalfspaceModel(w[:-1].copy(), float(w[-1]), center, scale,
                              train_risk=errors / data.n)


FAMILIES = {
    "constant": ConstantFamily,
    "shatter": ShatterOracle,
    "interval1d": Interval1D,
    "halfspace": LinearHalfspace,
}


def make_family(spec: dict) -> ClassifierFamily:
    """Build a family from a descriptor such as ``{"name": "halfspace", "p": 4}``."""
    spec = dict(spec)
    name = spec.pop("name", None)
    if name == "external":
        from .adapter import ExternalFamily

        return ExternalFamily(**spec)
    if name not in FAMILIES:
        raise DomainError(f"unknown classifier family {name!r}; "
                          f"choose from {sorted(FAMILIES) + ['external']}")
    try:
        return FAMILIES[name](**spec)
    except TypeError as exc:
        raise DomainError(f"bad hyperparameters for {name!r}: {exc}") from None
