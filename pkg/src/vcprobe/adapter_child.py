"""Reference child for the external-classifier protocol.

Serves one of the built-in families over stdin/stdout, e.g.::

    python -m vcprobe.adapter_child '{"name": "interval1d"}'

It doubles as a template for wrapping other libraries.
"""

import json
import sys

import numpy as np

from .classifiers import Dataset, fit_erm, make_family


def _rows(lines, count, width):
    out = np.empty((count, width))
    for r in range(count):
        out[r] = [float(v) for v in next(lines).split(",")]
    return out


def serve(family, stdin, stdout):
    lines = iter(stdin.read().splitlines())
    tag, n, p, seed = next(lines).split()
    if tag != "TRAIN":
        raise ValueError(f"expected TRAIN header, got {tag!r}")
    n, p, seed = int(n), int(p), int(seed)
    block = _rows(lines, n, p + 1)
    train = Dataset(block[:, :p], block[:, p].astype(np.int8))
    tag, q = next(lines).split()
    if tag != "PREDICT":
        raise ValueError(f"expected PREDICT header, got {tag!r}")
    query = _rows(lines, int(q), p)
    model = fit_erm(family, train, seed)
    for label in model.predict(query):
        stdout.write(f"{int(label)}\n")
    stdout.write("OK\n")


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    spec = json.loads(argv[0]) if argv else {"name": "interval1d"}
    serve(make_family(spec), sys.stdin, sys.stdout)


if __name__ == "__main__":
    main()
