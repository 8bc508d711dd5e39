"""Reference implementations used only for verification.

Everything here recomputes results the slow, obvious way so the fast
paths in epitome/banks have something independent to be checked
against: explicit hamming outer products, raw tuple convolution (no
summand counts, which is exactly what makes it non-associative),
layer-by-layer forward evaluation, and random generators for models,
banks, and inputs.  Clarity beats speed throughout; none of this is
benchmarked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .banks import Bank, LayerSpec, Model, apply, collapse, composite_convolve, layer_to_bank
from .epitome import Epitome, convolve, make_normalized
from .ghd import ghd

__all__ = [
    "OuterProduct",
    "EquivalenceReport",
    "NonAssocReport",
    "outer_product",
    "raw_convolve",
    "raw_convolve_with_counts",
    "layered_forward",
    "compare_banks",
    "check_equivalence",
    "find_nonassoc_witness",
    "random_epitome",
    "random_normalized_epitome",
    "random_bank",
    "random_input",
    "random_model",
    "suite_pairwise_sum_identity",
    "suite_epitome_associativity",
    "suite_collapse_equivalence",
    "suite_raw_nonassociativity",
]


@dataclass(frozen=True, eq=False)
class OuterProduct:
    """Dense grid of iterated GHDs, one axis per input factor.

    Entry (k, l, ..., m) is ghd_fold of the k-th element of the first
    factor, the l-th of the second, and so on.
    """

    factor_lengths: tuple[int, ...]
    entries: np.ndarray


@dataclass(frozen=True)
class EquivalenceReport:
    """Outcome of comparing a candidate bank against a reference.

    Relative error uses a max(1, |reference|) denominator so entries
    near zero do not blow it up.  passed means every summand count
    matched exactly and the error measure stayed within tol.
    """

    max_abs_error: float
    max_rel_error: float
    count_mismatches: int
    entries_compared: int
    tol: float
    passed: bool


@dataclass(frozen=True, eq=False)
class NonAssocReport:
    """A found witness that raw tuple convolution is not associative.

    raw_discrepancy is the largest entry difference between the two
    groupings of the raw (count-free) convolution; epitome_discrepancy
    is the same comparison with counts carried, which associativity
    keeps at rounding level.  passed means the witness is genuine: a
    large raw gap and a negligible epitome gap.
    """

    x: tuple
    y: tuple
    z: tuple
    raw_discrepancy: float
    epitome_discrepancy: float
    trials_used: int
    passed: bool


def outer_product(factors) -> OuterProduct:
    """Full grid of iterated GHDs over two or more non-empty tuples."""
    arrays = [np.asarray(f, dtype=np.float64) for f in factors]
    if len(arrays) < 2:
        raise ValueError(f"outer product needs at least 2 factors, got {len(arrays)}")
    for a in arrays:
        if a.ndim != 1 or a.size == 0:
            raise ValueError("every factor must be a non-empty 1-D tuple")
    grids = np.meshgrid(*arrays, indexing="ij")
    acc = grids[0]
    for grid in grids[1:]:
        acc = ghd(acc, grid)
    return OuterProduct(tuple(a.size for a in arrays), acc)


def raw_convolve(factors) -> np.ndarray:
    """Count-free hamming convolution of plain tuples.

    Groups the outer-product entries whose 0-based indices sum to the
    same output position and adds each group up.  Output length is
    K + sum(L_i - 1).  Because the summand counts are discarded,
    re-convolving an output with a further tuple is NOT associative;
    see find_nonassoc_witness.
    """
    return raw_convolve_with_counts(factors)[0]


def raw_convolve_with_counts(factors):
    """raw_convolve plus the group sizes |S(n)| it summed over."""
    op = outer_product(factors)
    out_len = sum(op.factor_lengths) - (len(op.factor_lengths) - 1)
    sums = np.zeros(out_len)
    counts = np.zeros(out_len, dtype=np.int64)
    for idx in np.ndindex(op.entries.shape):
        n = sum(idx)
        sums[n] += op.entries[idx]
        counts[n] += 1
    return sums, counts


def layered_forward(model: Model, input_bank: Bank, fill: str = "replicate") -> Bank:
    """Evaluate a model the conventional way, one layer at a time.

    Left fold of composite_convolve starting from the input bank,
    carrying raw (g, s) pairs between layers with no intermediate
    normalization.  This is the reference the one-step deep-epitome
    path must match entry for entry.
    """
    first = model.layers[0]
    if input_bank.m != first.in_channels:
        raise ValueError(
            f"input provides m={input_bank.m} epitomes but layer "
            f"'{first.name}' expects {first.in_channels} channels"
        )
    bank = input_bank
    for layer in model.layers:
        bank = composite_convolve(bank, layer_to_bank(layer, fill))
    return bank


def compare_banks(reference: Bank, candidate: Bank, tol: float) -> EquivalenceReport:
    """Entrywise comparison; reports mismatches instead of raising."""
    if reference.g.shape != candidate.g.shape:
        raise ValueError(
            f"cannot compare banks of different shape: "
            f"{reference.g.shape} vs {candidate.g.shape}"
        )
    abs_err = np.abs(reference.g - candidate.g)
    max_abs = float(abs_err.max())
    max_rel = float((abs_err / np.maximum(1.0, np.abs(reference.g))).max())
    count_mismatches = int(np.count_nonzero(reference.s != candidate.s))
    return EquivalenceReport(
        max_abs_error=max_abs,
        max_rel_error=max_rel,
        count_mismatches=count_mismatches,
        entries_compared=int(reference.g.size),
        tol=float(tol),
        passed=count_mismatches == 0 and max_rel <= tol,
    )


def check_equivalence(
    model: Model, input_bank: Bank, tol: float = 1e-9, fill: str = "replicate"
) -> EquivalenceReport:
    """Layered evaluation vs one-step application of the collapsed model."""
    if tol < 0:
        raise ValueError(f"tolerance must be non-negative, got {tol}")
    reference = layered_forward(model, input_bank, fill)
    candidate = apply(input_bank, collapse(model, fill=fill), crop="full")
    return compare_banks(reference, candidate, tol)


def find_nonassoc_witness(seed: int, trials: int = 1000, threshold: float = 0.1):
    """Search random small tuples for (x * y) * z != x * (y * z) raw.

    Both groupings have the same final length, so entries compare
    like-indexed.  Returns (x, y, z, discrepancy) with discrepancy >
    threshold; raises if the trial budget runs out (it should not,
    witnesses are dense).  All-0.5 tuples are skipped: absorption makes
    them agree trivially.
    """
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        lengths = rng.integers(2, 5, size=3)
        x, y, z = (rng.uniform(0.0, 1.0, size=int(n)) for n in lengths)
        if np.all(x == 0.5) and np.all(y == 0.5) and np.all(z == 0.5):
            continue
        left = raw_convolve([raw_convolve([x, y]), z])
        right = raw_convolve([x, raw_convolve([y, z])])
        discrepancy = float(np.max(np.abs(left - right)))
        if discrepancy > threshold:
            return x, y, z, discrepancy
    raise RuntimeError(f"no non-associativity witness found in {trials} trials")


def random_epitome(rng, max_extent=8, max_count=5, g_range=(-2.0, 2.0), rank=1) -> Epitome:
    shape = tuple(int(rng.integers(1, max_extent + 1)) for _ in range(rank))
    g = rng.uniform(g_range[0], g_range[1], size=shape)
    s = rng.integers(1, max_count + 1, size=shape)
    return Epitome(g, s)


def random_normalized_epitome(rng, shape, value_range=(0.0, 1.0)) -> Epitome:
    return make_normalized(rng.uniform(value_range[0], value_range[1], size=tuple(shape)))


def random_bank(rng, m, c, shape, max_count=5, g_range=(-2.0, 2.0)) -> Bank:
    full = (m, c) + tuple(shape)
    g = rng.uniform(g_range[0], g_range[1], size=full)
    s = rng.integers(1, max_count + 1, size=full)
    return Bank(g, s)


def random_input(rng, channels, shape, value_range=(0.0, 1.0)) -> Bank:
    """A normalized input bank: one epitome per channel, c = 1."""
    g = rng.uniform(value_range[0], value_range[1], size=(channels, 1) + tuple(shape))
    return Bank(g, np.ones(g.shape, dtype=np.int64))


def random_model(
    rng,
    max_layers=3,
    max_channels=4,
    max_kernel=5,
    strides=(1, 2),
    rank=2,
    weight_range=(0.0, 1.0),
) -> Model:
    n_layers = int(rng.integers(1, max_layers + 1))
    widths = [int(rng.integers(1, max_channels + 1)) for _ in range(n_layers + 1)]
    layers = []
    for i in range(n_layers):
        kernel = tuple(int(rng.integers(1, max_kernel + 1)) for _ in range(rank))
        stride = tuple(int(rng.choice(strides)) for _ in range(rank))
        w = rng.uniform(
            weight_range[0], weight_range[1], size=(widths[i + 1], widths[i]) + kernel
        )
        layers.append(LayerSpec(f"conv{i + 1}", w, stride))
    return Model(layers)


def suite_pairwise_sum_identity(rng, trials: int = 100, tol: float = 1e-12) -> EquivalenceReport:
    """All-pairs GHD sum vs its closed form, on random tuple pairs.

    The closed form ghd(sum x, sum y) + (L-1) sum x + (K-1) sum y is
    what lets merged epitome entries stand in for their summands; here
    it is checked against the brute-force double sum at absolute
    tolerance (the sums are O(10), so relative would be weaker).
    """
    max_abs = 0.0
    max_rel = 0.0
    for _ in range(trials):
        x = rng.uniform(0.0, 1.0, size=int(rng.integers(1, 9)))
        y = rng.uniform(0.0, 1.0, size=int(rng.integers(1, 9)))
        brute = float(ghd(x[:, np.newaxis], y[np.newaxis, :]).sum())
        sx, sy = float(x.sum()), float(y.sum())
        closed = ghd(sx, sy) + (y.size - 1) * sx + (x.size - 1) * sy
        err = abs(brute - closed)
        max_abs = max(max_abs, err)
        max_rel = max(max_rel, err / max(1.0, abs(brute)))
    return EquivalenceReport(
        max_abs_error=max_abs,
        max_rel_error=max_rel,
        count_mismatches=0,
        entries_compared=trials,
        tol=float(tol),
        passed=max_abs <= tol,
    )


def suite_epitome_associativity(rng, trials: int = 100, tol: float = 1e-9) -> EquivalenceReport:
    """(a * b) * c vs a * (b * c) on random epitomes, counts carried."""
    max_abs = 0.0
    max_rel = 0.0
    count_mismatches = 0
    entries = 0
    for _ in range(trials):
        a = random_epitome(rng)
        b = random_epitome(rng)
        c = random_epitome(rng)
        left = convolve(convolve(a, b), c)
        right = convolve(a, convolve(b, c))
        abs_err = np.abs(left.g - right.g)
        max_abs = max(max_abs, float(abs_err.max()))
        max_rel = max(max_rel, float((abs_err / np.maximum(1.0, np.abs(left.g))).max()))
        count_mismatches += int(np.count_nonzero(left.s != right.s))
        entries += int(left.g.size)
    return EquivalenceReport(
        max_abs_error=max_abs,
        max_rel_error=max_rel,
        count_mismatches=count_mismatches,
        entries_compared=entries,
        tol=float(tol),
        passed=count_mismatches == 0 and max_rel <= tol,
    )


def suite_collapse_equivalence(
    rng,
    trials: int = 100,
    tol: float = 1e-9,
    model: Model | None = None,
    weight_range=(0.0, 1.0),
) -> EquivalenceReport:
    """apply(input, collapse(model)) vs layered_forward on random trials.

    With a fixed model, each trial draws a fresh random input; without
    one, each trial also draws a fresh random model.
    """
    max_abs = 0.0
    max_rel = 0.0
    count_mismatches = 0
    entries = 0
    for _ in range(trials):
        m = model if model is not None else random_model(rng, weight_range=weight_range)
        rank = m.layers[0].rank
        shape = tuple(int(rng.integers(1, 17)) for _ in range(rank))
        input_bank = random_input(rng, m.layers[0].in_channels, shape)
        report = check_equivalence(m, input_bank, tol)
        max_abs = max(max_abs, report.max_abs_error)
        max_rel = max(max_rel, report.max_rel_error)
        count_mismatches += report.count_mismatches
        entries += report.entries_compared
    return EquivalenceReport(
        max_abs_error=max_abs,
        max_rel_error=max_rel,
        count_mismatches=count_mismatches,
        entries_compared=entries,
        tol=float(tol),
        passed=count_mismatches == 0 and max_rel <= tol,
    )


def suite_raw_nonassociativity(
    seed: int, trials: int = 1000, threshold: float = 0.1, tol: float = 1e-9
) -> NonAssocReport:
    """Find a raw-convolution witness and confirm epitomes fix it.

    The witness triple must disagree by more than threshold under raw
    (count-free) re-convolution, while the same triple under epitome
    convolution, with counts carried, agrees to within tol.
    """
    x, y, z, raw_disc = find_nonassoc_witness(seed, trials, threshold)
    ex, ey, ez = (make_normalized(v) for v in (x, y, z))
    left = convolve(convolve(ex, ey), ez)
    right = convolve(ex, convolve(ey, ez))
    epi_disc = float(np.max(np.abs(left.g - right.g)))
    counts_match = bool(np.array_equal(left.s, right.s))
    return NonAssocReport(
        x=tuple(float(v) for v in x),
        y=tuple(float(v) for v in y),
        z=tuple(float(v) for v in z),
        raw_discrepancy=raw_disc,
        epitome_discrepancy=epi_disc,
        trials_used=trials,
        passed=raw_disc > threshold and counts_match and epi_disc <= tol,
    )
