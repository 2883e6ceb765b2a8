"""Plug in an arbitrary classifier running in a child process.

Line protocol (UTF-8, one message per invocation)::

    parent -> child   TRAIN <n> <p> <seed>
                      n rows   x1,...,xp,y
                      PREDICT <q>
                      q rows   x1,...,xp
    child -> parent   q lines, each "0" or "1"
                      OK

The child is started fresh for every prediction request, trains on the
TRAIN block and exits. Anything else on stdout is a protocol violation.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass, field

import numpy as np

from .classifiers import ClassifierFamily, Dataset, TrainedModel
from .errors import AdapterError, DomainError

DEFAULT_TIMEOUT = 60.0


def _fmt_row(values):
    return ",".join(repr(float(v)) for v in values)


def encode_request(train: Dataset, query: np.ndarray, seed: int) -> str:
    lines = [f"TRAIN {train.n} {train.p} {int(seed)}"]
    lines.extend(_fmt_row(x) + f",{int(y)}" for x, y in zip(train.X, train.y))
    lines.append(f"PREDICT {query.shape[0]}")
    lines.extend(_fmt_row(x) for x in query)
    return "\n".join(lines) + "\n"


def decode_reply(stdout: str, q: int) -> np.ndarray:
    lines = stdout.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or lines[-1].strip() != "OK":
        raise AdapterError("reply does not end with OK")
    labels = [s.strip() for s in lines[:-1]]
    if len(labels) != q:
        raise AdapterError(f"expected {q} labels, got {len(labels)}")
    bad = [s for s in labels if s not in ("0", "1")]
    if bad:
        raise AdapterError(f"invalid label line {bad[0]!r}")
    return np.array([int(s) for s in labels], dtype=np.int8)


def _argv(command):
    if isinstance(command, str):
        return shlex.split(command)
    return [str(c) for c in command]


def external_adapter_fit_predict(command, data: Dataset, query, seed: int,
                                 timeout: float = DEFAULT_TIMEOUT) -> np.ndarray:
    """Train the external classifier on `data` and label every row of `query`."""
    Q = np.asarray(getattr(query, "X", query), dtype=float)
    if Q.ndim != 2 or Q.shape[1] != data.p:
        raise DomainError(f"query must have {data.p} columns, got shape {Q.shape}")
    payload = encode_request(data, Q, seed)
    try:
        proc = subprocess.run(_argv(command), input=payload, capture_output=True,
                              text=True, encoding="utf-8", timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        err = exc.stderr or b""
        if isinstance(err, bytes):
            err = err.decode("utf-8", "replace")
        raise AdapterError(f"external classifier timed out after {timeout} s", stderr=err) from None
    except OSError as exc:
        raise AdapterError(f"cannot launch external classifier {command!r}: {exc}") from None
    if proc.returncode != 0:
        raise AdapterError(f"external classifier exited with status {proc.returncode}",
                           stderr=proc.stderr, returncode=proc.returncode)
    try:
        return decode_reply(proc.stdout, Q.shape[0])
    except AdapterError as exc:
        raise AdapterError(f"protocol violation: {exc}", stderr=proc.stderr) from None


@dataclass(frozen=True, eq=False)
class ExternalModel(TrainedModel):
    command: tuple
    train: Dataset
    seed: int
    timeout: float

    @property
    def dimension(self):
        return self.train.p

    def predict(self, X):
        return external_adapter_fit_predict(self.command, self.train, X, self.seed, self.timeout)

    def params(self):
        return {"command": list(self.command), "train_rows": self.train.n}


@dataclass(frozen=True)
class ExternalFamily(ClassifierFamily):
    """A classifier family implemented by an external executable.

    Fitting only records the training block; the child process trains and
    predicts when the model is first asked for labels.
    """

    command: tuple = ()
    timeout: float = DEFAULT_TIMEOUT
    vc_dimension: float | None = None
    name: str = field(default="external", init=False)

    def __post_init__(self):
        argv = tuple(_argv(self.command))
        if not argv:
            raise DomainError("external family needs a non-empty command")
        object.__setattr__(self, "command", argv)
        if not self.timeout > 0:
            raise DomainError(f"timeout must be positive, got {self.timeout!r}")

    @property
    def known_vc_dimension(self):
        return self.vc_dimension

    def hyperparameters(self):
        return {"command": list(self.command), "timeout": self.timeout,
                "vc_dimension": self.vc_dimension}

    def fit(self, data, seed=0):
        return ExternalModel(self.command, data, int(seed), self.timeout)
