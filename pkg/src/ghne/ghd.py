"""Scalar generalized hamming distance and its direct derivatives.

The generalized hamming distance (GHD) of two reals is

    a (+) b = a + b - 2*a*b,

a real-valued extension of XOR: 0 is the identity, 1 negates, and 0.5
absorbs everything.  Under the substitution t(x) = 1 - 2x it is plain
multiplication (t(a (+) b) = t(a) * t(b)), which is why it is commutative
and associative.

All functions here are pure and broadcast over numpy arrays.  Inputs are
assumed finite; non-finite values are rejected at the container
construction boundaries (epitomes, banks, file loads), not here, so the
kernels stay branch-free.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ghd",
    "ghd_fold",
    "mean_ghd",
    "analytic_bias",
    "fuzziness",
]


def ghd(a, b):
    """Generalized hamming distance a + b - 2ab.

    Evaluated as ``a + b*(1 - 2*a)`` so that the identity, negation and
    absorption laws (ghd(0,b)=b, ghd(1,b)=1-b, ghd(0.5,b)=0.5) hold
    bitwise exactly for every finite b, not just up to rounding.
    Broadcasts elementwise over array inputs.
    """
    return a + b * (1.0 - 2.0 * a)


def ghd_fold(values):
    """Left fold of ghd over a non-empty sequence.

    The fold is associative and permutation-invariant in exact
    arithmetic (GHD is multiplication in disguise), so the left fold is
    canonical.  No identity element is assumed: an empty sequence is an
    error.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("ghd_fold of an empty sequence (GHD has no assumed identity)")
    flat = values.ravel()
    acc = flat[0]
    for v in flat[1:]:
        acc = ghd(acc, v)
    return float(acc)


def mean_ghd(w, x):
    """Arithmetic mean of elementwise GHDs between equal-length w and x.

    This is the quantity a GHN neuron computes (negated); see
    ``analytic_bias`` for the bias that realizes it as 2/L * (w.x + b).
    """
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w.shape != x.shape:
        raise ValueError(f"length mismatch: w has shape {w.shape}, x has shape {x.shape}")
    if w.size == 0:
        raise ValueError("mean_ghd of empty sequences")
    return float(np.mean(ghd(w, x)))


def analytic_bias(w, x):
    """Bias b = -(sum(w) + sum(x)) / 2.

    With this bias, (2/L) * (w.x + b) equals -mean_ghd(w, x) exactly up
    to rounding, which is what makes a convolution layer compute a
    (negative) mean GHD instead of an arbitrary affine map.
    """
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w.shape != x.shape:
        raise ValueError(f"length mismatch: w has shape {w.shape}, x has shape {x.shape}")
    return float(-0.5 * (w.sum() + x.sum()))


def fuzziness(u):
    """Self-distance ghd(u, u) = 2u(1-u).

    Maximal (0.5) at u = 0.5 and strictly decreasing as u moves away
    from 0.5; zero at the crisp points 0 and 1.  Low fuzziness marks
    prominent weights.  Broadcasts over arrays.
    """
    u = np.asarray(u, dtype=np.float64)
    out = 2.0 * u * (1.0 - u)
    return float(out) if out.ndim == 0 else out
