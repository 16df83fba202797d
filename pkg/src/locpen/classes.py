"""Hypothesis families with exact ERM and dichotomy enumeration.

Four families are supported:

* ``thresholds``  -- one-sided rules 1{x >= t} on the line,
* ``intervals``   -- unions of at most k closed intervals on the line,
* ``stumps``      -- per-coordinate threshold rules with direction in R^d,
* ``fixed``       -- a single frozen interval-union classifier.

Everything downstream (shatter counts, Rademacher averages, penalties)
depends on hypotheses only through their error vectors on a sample, so this
module is the single place that knows how prediction patterns are generated
and canonicalized. Tied x values form a block that every hypothesis labels
uniformly; all pattern work happens on blocks and is expanded to points at
the end.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import IntervalClassifier, LabeledSample

ENUMERATION_GUARD = 1 << 24

_FAMILIES = ("thresholds", "intervals", "stumps", "fixed")


class EnumerationInfeasible(Exception):
    """Raised when the predicted dichotomy count exceeds the guard."""

    def __init__(self, predicted: int, guard: int = ENUMERATION_GUARD):
        self.predicted = predicted
        self.guard = guard
        super().__init__(
            f"predicted dichotomy count {predicted} exceeds the enumeration guard {guard}"
        )


@dataclass(frozen=True)
class ModelClass:
    """A hypothesis family, plus the structural budget where applicable.

    ``k`` is the interval budget for the intervals family, ``dim`` the input
    dimension for stumps, ``regions`` the frozen region for the fixed family.
    """

    family: str
    k: int = 0
    dim: int = 1
    regions: tuple = ()

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "intervals" and self.k < 1:
            raise ValueError("interval budget must be >= 1")
        if self.family == "stumps" and self.dim < 1:
            raise ValueError("stump dimension must be >= 1")

    @property
    def vc_dim(self) -> int:
        """VC dimension (thresholds, intervals) or a documented upper bound.

        Stumps: at most 2*dim*m + 2 dichotomies are achievable on m points
        (m+1 suffixes and m+1 prefixes per coordinate, all-zeros/all-ones
        shared), so the VC dimension is at most the largest m with
        2^m <= 2*dim*m + 2; that bound is reported. The fixed family shatters
        nothing; 1 is reported as the smallest value the interfaces accept.
        """
        if self.family == "thresholds":
            return 1
        if self.family == "intervals":
            return 2 * self.k
        if self.family == "fixed":
            return 1
        m = 1
        while 2 ** (m + 1) <= 2 * self.dim * (m + 1) + 2:
            m += 1
        return m

    @property
    def label(self) -> str:
        if self.family == "intervals":
            return f"intervals:{self.k}"
        if self.family == "stumps":
            return f"stumps:{self.dim}"
        return self.family

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.label


def parse_class_token(token: str) -> ModelClass:
    """Parse a single class token: thresholds | intervals:k | stumps:d."""
    tok = token.strip()
    if tok == "thresholds":
        return ModelClass("thresholds")
    if tok.startswith("intervals:"):
        return ModelClass("intervals", k=int(tok.split(":", 1)[1]))
    if tok.startswith("stumps:"):
        return ModelClass("stumps", dim=int(tok.split(":", 1)[1]))
    raise ValueError(f"cannot parse class token {token!r}")


def parse_hierarchy(spec: str) -> tuple[ModelClass, ...]:
    """Parse a comma-separated class list.

    ``intervals:1..K`` expands to the nested hierarchy intervals:1, ...,
    intervals:K. The 1-based position in the resulting list is the index k
    used in log(nk) penalty terms.
    """
    out: list[ModelClass] = []
    for piece in spec.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if piece.startswith("intervals:") and ".." in piece:
            lo, hi = piece[len("intervals:"):].split("..")
            lo_i, hi_i = int(lo), int(hi)
            if not 1 <= lo_i <= hi_i:
                raise ValueError(f"bad interval range in {piece!r}")
            out.extend(ModelClass("intervals", k=j) for j in range(lo_i, hi_i + 1))
        else:
            out.append(parse_class_token(piece))
    if not out:
        raise ValueError("empty class list")
    return tuple(out)


@dataclass(frozen=True)
class ThresholdClassifier:
    """One-sided rule 1{x >= threshold}; threshold=inf gives the empty set."""

    threshold: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        vals = np.atleast_1d(np.asarray(x, dtype=np.float64))
        return (vals >= self.threshold).astype(np.uint8)


@dataclass(frozen=True)
class StumpClassifier:
    """Per-coordinate threshold rule with direction.

    direction +1 predicts 1{x_coord >= threshold}, direction -1 predicts
    1{x_coord <= threshold}.
    """

    coord: int
    threshold: float
    direction: int

    def predict(self, points: np.ndarray) -> np.ndarray:
        col = np.asarray(points, dtype=np.float64)[:, self.coord]
        if self.direction > 0:
            return (col >= self.threshold).astype(np.uint8)
        return (col <= self.threshold).astype(np.uint8)


def predict_labels(f, s: LabeledSample) -> np.ndarray:
    """Evaluate any supported classifier on a sample's points."""
    if isinstance(f, StumpClassifier):
        return f.predict(s.points)
    return f.predict(s.x1d())


def empirical_loss(f, s: LabeledSample) -> float:
    """Fraction of sample points misclassified by ``f`` (an exact count / n)."""
    return int(np.sum(predict_labels(f, s) != s.labels)) / s.n


@dataclass(frozen=True)
class ErrorVectorSet:
    """Distinct error vectors of a class on a sample, in canonical row order."""

    vectors: np.ndarray  # (count, n) uint8, unique rows, lexicographically sorted

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    def means(self) -> np.ndarray:
        return self.vectors.mean(axis=1)

    def packed(self) -> tuple[np.ndarray, np.ndarray]:
        """Bit-packed rows for popcount kernels: (count, ceil(n/64)) uint64
        words plus per-row population counts."""
        cnt, n = self.vectors.shape
        words = (n + 63) // 64
        out = np.zeros((cnt, words), dtype=np.uint64)
        for b in range(n):
            out[:, b // 64] |= self.vectors[:, b].astype(np.uint64) << np.uint64(b % 64)
        return out, self.vectors.sum(axis=1).astype(np.int64)


@dataclass(frozen=True)
class ErmResult:
    classifier: object
    empirical_loss: float
    error_vector: np.ndarray


@dataclass(frozen=True)
class BlockStructure:
    """Sample reordered by x with tied points grouped into blocks."""

    order: np.ndarray        # argsort of x, stable
    values: np.ndarray       # (B,) distinct sorted x values
    starts: np.ndarray       # (B+1,) int64 block boundaries in sorted order
    y_sorted: np.ndarray     # (n,) uint8 labels in sorted order
    ones: np.ndarray         # (B,) int64 count of label-1 points per block
    sizes: np.ndarray        # (B,) int64 block sizes

    @property
    def n(self) -> int:
        return self.y_sorted.shape[0]

    @property
    def num_blocks(self) -> int:
        return self.values.shape[0]

    @property
    def n1(self) -> int:
        return int(self.ones.sum())


def block_structure(s: LabeledSample) -> BlockStructure:
    x = s.x1d()
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = s.labels[order]
    values, first = np.unique(xs, return_index=True)
    starts = np.append(first, s.n).astype(np.int64)
    csum = np.concatenate(([0], np.cumsum(ys, dtype=np.int64)))
    ones = csum[starts[1:]] - csum[starts[:-1]]
    sizes = np.diff(starts)
    return BlockStructure(order, values, starts, ys, ones, sizes)


def _block_patterns_to_error_vectors(
    patterns: np.ndarray, bs: BlockStructure
) -> ErrorVectorSet:
    # expand block patterns to point predictions, xor with labels, canonicalize
    point_pred = np.repeat(patterns, bs.sizes, axis=1)
    errs_sorted = point_pred ^ bs.y_sorted[None, :]
    errs = np.empty_like(errs_sorted)
    errs[:, bs.order] = errs_sorted
    return ErrorVectorSet(np.unique(errs, axis=0))


def _interval_block_patterns(nb: int, k: int) -> np.ndarray:
    """All binary block patterns with at most k maximal runs of ones.

    Bijection: a pattern with r runs corresponds to 2r strictly increasing
    cut positions in {0..nb}, runs covering blocks [c_1, c_2), [c_3, c_4), ...
    """
    rows = [np.zeros(nb, dtype=np.uint8)]
    for r in range(1, k + 1):
        for cuts in itertools.combinations(range(nb + 1), 2 * r):
            row = np.zeros(nb, dtype=np.uint8)
            for j in range(r):
                row[cuts[2 * j]:cuts[2 * j + 1]] = 1
            rows.append(row)
    return np.stack(rows)


def interval_pattern_count(num_blocks: int, k: int) -> int:
    """Exact number of block patterns with at most k runs: sum C(B+1, 2r)."""
    return sum(math.comb(num_blocks + 1, 2 * r) for r in range(k + 1))


def predicted_dichotomy_count(c: ModelClass, s: LabeledSample) -> int:
    """Upper bound on (for stumps) or exact (otherwise) dichotomy count."""
    if c.family == "fixed":
        return 1
    if c.family == "stumps":
        return 2 * c.dim * s.n + 2
    bs = block_structure(s)
    if c.family == "thresholds":
        return bs.num_blocks + 1
    return interval_pattern_count(bs.num_blocks, c.k)


def enumerate_error_vectors(c: ModelClass, s: LabeledSample) -> ErrorVectorSet:
    """The exact set of achievable error vectors of class ``c`` on sample ``s``.

    Refuses (EnumerationInfeasible) when the predicted count exceeds 2^24.
    Note the memory cost is count * n bytes before deduplication.
    """
    predicted = predicted_dichotomy_count(c, s)
    if predicted > ENUMERATION_GUARD:
        raise EnumerationInfeasible(predicted)
    if c.family == "fixed":
        pred = IntervalClassifier(c.regions).predict(s.x1d())
        return ErrorVectorSet((pred ^ s.labels)[None, :].astype(np.uint8))
    if c.family == "stumps":
        pats = {tuple(np.zeros(s.n, dtype=np.uint8)), tuple(np.ones(s.n, dtype=np.uint8))}
        for j in range(c.dim):
            col = s.points[:, j]
            for t in np.unique(col):
                pats.add(tuple((col >= t).astype(np.uint8)))
                pats.add(tuple((col <= t).astype(np.uint8)))
        pred = np.array(sorted(pats), dtype=np.uint8)
        return ErrorVectorSet(np.unique(pred ^ s.labels[None, :], axis=0))
    bs = block_structure(s)
    if c.family == "thresholds":
        nb = bs.num_blocks
        pats = np.zeros((nb + 1, nb), dtype=np.uint8)
        for j in range(nb):
            pats[j, j:] = 1  # threshold at values[j]; row nb is the empty rule
        return _block_patterns_to_error_vectors(pats, bs)
    pats = _interval_block_patterns(bs.num_blocks, c.k)
    return _block_patterns_to_error_vectors(pats, bs)


def _runs_to_intervals(pattern: np.ndarray, values: np.ndarray) -> tuple:
    """Canonical region of a block pattern: one closed interval per run,
    spanning the run's first and last block values (degenerate allowed)."""
    regions = []
    b = 0
    nb = pattern.shape[0]
    while b < nb:
        if pattern[b]:
            e = b
            while e + 1 < nb and pattern[e + 1]:
                e += 1
            regions.append((float(values[b]), float(values[e])))
            b = e + 1
        else:
            b += 1
    return tuple(regions)


def _error_vector_of_block_pattern(pattern: np.ndarray, bs: BlockStructure) -> np.ndarray:
    pred_sorted = np.repeat(pattern.astype(np.uint8), bs.sizes)
    errs_sorted = pred_sorted ^ bs.y_sorted
    out = np.empty_like(errs_sorted)
    out[bs.order] = errs_sorted
    return out


def erm(c: ModelClass, s: LabeledSample) -> ErmResult:
    """Exact empirical risk minimizer of class ``c`` on sample ``s``.

    Intervals are solved in O(n k) by dynamic programming over blocks x
    runs-used x open/closed state. Ties are broken to the fewest intervals,
    then the lexicographically smallest region endpoint list; for thresholds,
    the smallest threshold (the empty rule ranks last); for stumps, the
    smallest (coordinate, direction with >= first, threshold) triple.
    """
    if c.family == "fixed":
        clf = IntervalClassifier(c.regions)
        ev = (clf.predict(s.x1d()) ^ s.labels).astype(np.uint8)
        return ErmResult(clf, float(ev.mean()), ev)
    if c.family == "stumps":
        return _erm_stumps(c, s)
    bs = block_structure(s)
    if c.family == "thresholds":
        return _erm_thresholds(bs)
    w = (2 * bs.ones - bs.sizes).astype(np.int64)  # per-block n1 - n0
    best, pats = _kernels.erm_lex_patterns(w, c.k)
    pattern = pats[c.k]
    errors = bs.n1 - int(best[c.k])
    clf = IntervalClassifier(_runs_to_intervals(pattern, bs.values))
    ev = _error_vector_of_block_pattern(pattern, bs)
    assert int(ev.sum()) == errors
    return ErmResult(clf, errors / bs.n, ev)


def _erm_thresholds(bs: BlockStructure) -> ErmResult:
    nb = bs.num_blocks
    ones_csum = np.concatenate(([0], np.cumsum(bs.ones)))
    sizes_csum = np.concatenate(([0], np.cumsum(bs.sizes)))
    # threshold at values[j]: errors = ones below block j + zeros at/after j
    zeros_after = (sizes_csum[nb] - sizes_csum) - (ones_csum[nb] - ones_csum)
    errors = ones_csum[:nb] + zeros_after[:nb]
    errors = np.append(errors, bs.n1)  # empty rule, threshold +inf, ranks last
    j = int(np.argmin(errors))  # argmin takes the first minimum: smallest t
    thr = float(bs.values[j]) if j < nb else math.inf
    clf = ThresholdClassifier(thr)
    pattern = np.zeros(nb, dtype=np.uint8)
    if j < nb:
        pattern[j:] = 1
    ev = _error_vector_of_block_pattern(pattern, bs)
    return ErmResult(clf, int(errors[j]) / bs.n, ev)


def _erm_stumps(c: ModelClass, s: LabeledSample) -> ErmResult:
    best: tuple | None = None  # (errors, coord, dir_rank, threshold)
    n1 = int(s.labels.sum())
    for j in range(c.dim):
        col = s.points[:, j]
        order = np.argsort(col, kind="stable")
        ys = s.labels[order].astype(np.int64)
        values, first = np.unique(col[order], return_index=True)
        starts = np.append(first, s.n)
        csum = np.concatenate(([0], np.cumsum(ys)))
        for bi, t in enumerate(values):
            lo, hi = starts[bi], starts[-1]
            # direction >=: predict 1 on [lo, n); errors = ones below + zeros at/after
            ones_below = csum[lo]
            zeros_geq = (hi - lo) - (csum[hi] - csum[lo])
            cands = [(int(ones_below + zeros_geq), j, 0, float(t))]
            # direction <=: predict 1 on [0, end of t's block)
            hi2 = starts[bi + 1]
            zeros_leq = hi2 - csum[hi2]
            ones_above = csum[s.n] - csum[hi2]
            cands.append((int(zeros_leq + ones_above), j, 1, float(t)))
            for cand in cands:
                if best is None or cand < best:
                    best = cand
    # the empty rule (threshold +inf, direction >=) as the final fallback
    if best is None or n1 < best[0]:
        best = (n1, 0, 0, math.inf)
    errors, coord, dr, thr = best
    clf = StumpClassifier(coord, thr, +1 if dr == 0 else -1)
    ev = (clf.predict(s.points) ^ s.labels).astype(np.uint8)
    assert int(ev.sum()) == errors
    return ErmResult(clf, errors / s.n, ev)


def worst_case_log_shatter(c: ModelClass, m: int) -> float:
    """Natural log of the worst-case shatter coefficient on m points.

    Exact where the extremal configuration is known (all-distinct points):
    m+1 for thresholds, sum_{r<=k} C(m+1, 2r) for interval unions. Stumps
    fall back to the Sauer bound sum_{i<=V} C(m, i) with the documented VC
    bound; python integers never overflow, so no log-form cap is needed.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if c.family == "fixed":
        return 0.0
    if c.family == "thresholds":
        return math.log(m + 1)
    if c.family == "intervals":
        return math.log(interval_pattern_count(m, c.k))
    v = c.vc_dim
    return math.log(sum(math.comb(m, i) for i in range(v + 1)))
