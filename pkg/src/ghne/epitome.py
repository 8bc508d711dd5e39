"""Epitomes: grids of (g, s) pairs closed under hamming convolution.

A raw hamming convolution output loses the individual GHD summands; what
makes stacked convolutions mergeable is keeping, next to every
accumulated sum g, the number s of summands it came from.  An *epitome*
is exactly that bookkeeping: an N-dimensional grid of pairs (g, s).
Convolving two epitomes merges entries with the closed form

    merge((g, s), (g', s')) = (g (+) g' + (s'-1)g + (s-1)g',  s*s')

summed over the anti-diagonal index sets of a full convolution.  The
pair (g, s) algebra is associative even though summing plain GHD values
is not, which is the whole point: a stack of layers collapses into one
bank without touching any input.

Counts are kept as int64, never floats, so they stay exact; g values are
float64.  Epitomes are immutable after construction and every operation
returns a new one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve as _nd_convolve

from .ghd import fuzziness as _scalar_fuzziness
from .ghd import ghd

__all__ = [
    "Epitome",
    "Histogram",
    "make_normalized",
    "normalize",
    "merged_pair",
    "convolve",
    "add",
    "mean_fuzziness",
    "histogram",
]


class Epitome:
    """An N-dimensional grid of (g, s) pairs.

    g accumulates GHD sums, s counts the summands behind each g.  A
    normalized epitome has s = 1 everywhere; its g values are the mean
    GHDs and read as fuzzy grades of fitness.
    """

    __slots__ = ("g", "s")

    def __init__(self, g, s):
        g = np.array(g, dtype=np.float64)
        s = np.array(s)
        if not (np.issubdtype(s.dtype, np.integer) or np.issubdtype(s.dtype, np.bool_)):
            # reject silent float counts; exact integer arithmetic is load-bearing
            raise TypeError(f"counts must be integers, got dtype {s.dtype}")
        s = s.astype(np.int64)
        if g.ndim < 1:
            raise ValueError("epitome rank must be >= 1 (got a bare scalar)")
        if g.shape != s.shape:
            raise ValueError(f"g shape {g.shape} != s shape {s.shape}")
        if g.size == 0:
            raise ValueError("epitome must have at least one entry per axis")
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite g value in epitome")
        if np.any(s < 1):
            raise ValueError("every summand count must be >= 1")
        g.setflags(write=False)
        s.setflags(write=False)
        self.g = g
        self.s = s

    @property
    def shape(self) -> tuple[int, ...]:
        return self.g.shape

    @property
    def rank(self) -> int:
        return self.g.ndim

    @property
    def is_normalized(self) -> bool:
        return bool(np.all(self.s == 1))

    def values(self) -> np.ndarray:
        """Normalized entries g/s (the mean GHDs)."""
        return self.g / self.s

    def __eq__(self, other):
        if not isinstance(other, Epitome):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.g, other.g)
            and np.array_equal(self.s, other.s)
        )

    __hash__ = None

    def __repr__(self):
        return f"Epitome(shape={self.shape}, normalized={self.is_normalized})"


@dataclass(frozen=True, eq=False)
class Histogram:
    """Histogram of normalized epitome entries.

    Bins are half-open [lo, hi) with the top edge closed; counts sum to
    the number of entries that fell inside the range.
    """

    bin_edges: np.ndarray
    counts: np.ndarray


def make_normalized(values, shape=None) -> Epitome:
    """Wrap a grid of plain values (weights or inputs) as a normalized epitome.

    Raw data not yet involved in any convolution is an epitome with
    g = value and s = 1 everywhere.  If ``shape`` is given it must match
    the grid.
    """
    g = np.asarray(values, dtype=np.float64)
    if shape is not None and tuple(shape) != g.shape:
        raise ValueError(f"values shape {g.shape} does not match declared shape {tuple(shape)}")
    return Epitome(g, np.ones(g.shape, dtype=np.int64))


def normalize(e: Epitome) -> Epitome:
    """Replace every entry (g, s) with (g/s, 1).  Idempotent."""
    return Epitome(e.g / e.s, np.ones(e.shape, dtype=np.int64))


def merged_pair(gn, sn, gm, sm):
    """Merge two (g, s) entries into the pair covering all sn*sm GHD terms.

    Returns (ghd(gn, gm) + (sm-1)*gn + (sn-1)*gm, sn*sm): the sum of all
    pairwise GHDs of any decomposition of gn into sn summands and gm
    into sm summands, which is computable without knowing the summands.
    """
    sn = int(sn)
    sm = int(sm)
    if sn < 1 or sm < 1:
        raise ValueError(f"counts must be >= 1, got ({sn}, {sm})")
    return float(ghd(gn, gm) + (sm - 1) * gn + (sn - 1) * gm), sn * sm


def _full_convolve(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # direct method: exact for int64, deterministic for float64
    return _nd_convolve(u, v, mode="full", method="direct")


def convolve(a: Epitome, b: Epitome) -> Epitome:
    """Full hamming convolution of two epitomes.

    Output extent per axis is Na + Nb - 1.  Entry c sums merged_pair
    over the anti-diagonal set S(c) = {(n, m) | n + m = c} (0-based per
    axis), and counts are summed likewise, so

        g_out = conv(g_a, s_b) + conv(s_a, g_b) - 2 conv(g_a, g_b)
        s_out = conv(s_a, s_b)

    with plain full convolutions.  Counts stay exact int64.
    """
    if a.rank != b.rank:
        raise ValueError(f"rank mismatch: {a.rank} vs {b.rank}")
    sa = a.s.astype(np.float64)
    sb = b.s.astype(np.float64)
    g = (
        _full_convolve(a.g, sb)
        + _full_convolve(sa, b.g)
        - 2.0 * _full_convolve(a.g, b.g)
    )
    s = _full_convolve(a.s, b.s)
    return Epitome(g, s)


def add(a: Epitome, b: Epitome) -> Epitome:
    """Entrywise summation of two same-shaped epitomes: (ga+gb, sa+sb).

    Folding extends it to any number of epitomes; this is how channels
    are merged.
    """
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return Epitome(a.g + b.g, a.s + b.s)


def mean_fuzziness(e: Epitome) -> float:
    """Arithmetic mean over entries of fuzziness(g/s)."""
    return float(np.mean(_scalar_fuzziness(e.values())))


def histogram(e: Epitome, bins: int, value_range=None) -> Histogram:
    """Histogram the normalized entries g/s.

    Default range is the data min/max; an explicit (lo, hi) fixes it
    (entries outside it are dropped, numpy semantics).  Values exactly
    at hi land in the last bin.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if value_range is not None:
        lo, hi = value_range
        if not lo < hi:
            raise ValueError(f"empty histogram range: ({lo}, {hi})")
    counts, edges = np.histogram(e.values().ravel(), bins=bins, range=value_range)
    return Histogram(bin_edges=edges, counts=counts)
