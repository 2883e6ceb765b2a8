"""Compiled inner loop of the pocket perceptron."""

import numpy as np
from numba import njit


@njit(cache=True)
def _count_errors(Z, signs, w):
    errors = 0
    for r in range(Z.shape[0]):
        if signs[r] * np.dot(Z[r], w) <= 0.0:
            errors += 1
    return errors


@njit(cache=True)
def _pocket_single(Z, signs, w0, shuffle_seed, epochs):
    n = Z.shape[0]
    w = w0.copy()
    best_w = w.copy()
    best_err = _count_errors(Z, signs, w)
    best_run = 0
    run = 0
    np.random.seed(shuffle_seed)
    order = np.arange(n)
    for _ in range(epochs):
        if best_err == 0:
            break
        np.random.shuffle(order)
        for t in range(n):
            r = order[t]
            if signs[r] * np.dot(Z[r], w) > 0.0:
                run += 1
                # ratchet: only pay for a full error count when the streak is a record
                if run > best_run:
                    best_run = run
                    err = _count_errors(Z, signs, w)
                    if err < best_err:
                        best_err = err
                        best_w[:] = w
                        if err == 0:
                            break
            else:
                w += signs[r] * Z[r]
                run = 0
    return best_w, best_err


@njit(cache=True)
def pocket_perceptron(Z, signs, inits, shuffle_seeds, epochs):
    """Best weights over all restarts and their training error count.

    `Z` carries a trailing column of ones for the intercept; `signs` are +-1.
    Ties between restarts keep the earliest restart.
    """
    best_w = inits[0].copy()
    best_err = Z.shape[0] + 1
    for k in range(inits.shape[0]):
        w, err = _pocket_single(Z, signs, inits[k], shuffle_seeds[k], epochs)
        if err < best_err:
            best_err = err
            best_w = w
    return best_w, best_err
