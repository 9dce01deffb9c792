"""Truncated Taylor jets in one scalar parameter.

A jet is an ndarray whose leading axis indexes Taylor orders 0..J-1 of a
quantity depending on a parameter t; all remaining axes are pointwise values.
Products truncate at order J-1. These suffice to push first and second
parameter derivatives through every pointwise operation in the geometry
pipeline (multiplication, reciprocal, square root); linear operations act
order by order and need no special handling.
"""

import numpy as np


def jet_const(value, jet_len):
    """Promote a parameter-independent array to a jet (zeros above order 0)."""
    value = np.asarray(value, dtype=float)
    out = np.zeros((jet_len,) + value.shape)
    out[0] = value
    return out


def jet_mul(a, b):
    """Cauchy product truncated to the shorter jet length."""
    J = min(a.shape[0], b.shape[0])
    out = np.zeros((J,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]))
    for j in range(J):
        for i in range(j + 1):
            out[j] += a[i] * b[j - i]
    return out


def jet_reciprocal(a):
    """Jet of 1/a; order-0 values must be nonzero."""
    J = a.shape[0]
    out = np.zeros_like(np.asarray(a, dtype=float))
    out[0] = 1.0 / a[0]
    for j in range(1, J):
        acc = np.zeros_like(out[0])
        for i in range(1, j + 1):
            acc += a[i] * out[j - i]
        out[j] = -out[0] * acc
    return out


def jet_sqrt(a):
    """Jet of sqrt(a); order-0 values must be positive."""
    J = a.shape[0]
    out = np.zeros_like(np.asarray(a, dtype=float))
    out[0] = np.sqrt(a[0])
    inv2s = 0.5 / out[0]
    for j in range(1, J):
        acc = np.zeros_like(out[0])
        for i in range(1, j):
            acc += out[i] * out[j - i]
        out[j] = (a[j] - acc) * inv2s
    return out


def jet_power(a, k, cache=None):
    """Jet of a**k for integer k >= 0, with an optional memo dict."""
    if cache is not None and k in cache:
        return cache[k]
    if k == 0:
        out = jet_const(np.ones(a.shape[1:]), a.shape[0])
    elif k == 1:
        out = a
    else:
        out = jet_mul(jet_power(a, k - 1, cache), a)
    if cache is not None:
        cache[k] = out
    return out
