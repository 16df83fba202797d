"""Synthetic one-dimensional classification data with exactly computable risks.

The sampling model is deliberately rigid: features are uniform on [0, 1] and
the positive region A* is a finite union of disjoint closed intervals. Labels
equal the region indicator, flipped independently with probability
eta < 1/2. Under this model the true loss of any interval classifier f with
region A has the closed form

    L(f) = eta + (1 - 2*eta) * lambda(A symdiff A*)

with lambda the Lebesgue measure on [0, 1]. Bayes risk, the best loss
attainable with at most k intervals, and the excess risk of any selected
classifier are therefore exact, which lets the experiment harnesses check
oracle bounds without a Monte Carlo test-set layer.

All sampling is driven by a stateless 64-bit mixing function, so the i-th
observation depends only on (seed, i) and samples are reproducible bit for
bit regardless of evaluation order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LabeledSample",
    "NoisyRegionDistribution",
    "IntervalClassifier",
    "generate_sample",
    "bayes_risk",
    "true_loss",
    "class_optimal_loss",
    "class_optimal_region",
    "max_class_loss",
    "symmetric_difference_measure",
    "write_sample_csv",
    "read_sample_csv",
    "mix64",
    "sub_seed",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_C1 = 0xBF58476D1CE4E5B9
_MIX_C2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """Finalizer of the splitmix64 generator: 64-bit multiply-xor-shift mixing.

    Bijective on 64-bit words; used everywhere a value must be scrambled into
    an independent-looking stream seed.
    """
    z &= _MASK64
    z ^= z >> 30
    z = (z * _MIX_C1) & _MASK64
    z ^= z >> 27
    z = (z * _MIX_C2) & _MASK64
    z ^= z >> 31
    return z


def sub_seed(seed: int, index: int) -> int:
    """Seed of the index-th child stream of ``seed``.

    Stateless, so child streams can be created in any order (or in parallel)
    with identical results: ``mix64(seed + (index + 1) * golden)``.
    """
    if index < 0:
        raise ValueError("stream index must be nonnegative")
    return mix64((seed + (index + 1) * _GOLDEN) & _MASK64)


def _stream_outputs(seed: int, count: int, n: int) -> np.ndarray:
    """count x n matrix of uniform [0,1) floats; row j is output j of stream i."""
    idx = np.arange(1, n + 1, dtype=np.uint64)
    base = np.uint64(seed & _MASK64) + idx * np.uint64(_GOLDEN)  # wraps mod 2^64
    sub = _mix64_np(base)
    rows = []
    for j in range(count):
        bits = _mix64_np(sub + np.uint64(((j + 1) * _GOLDEN) & _MASK64))
        rows.append((bits >> np.uint64(11)).astype(np.float64) * 2.0**-53)
    return np.stack(rows)


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX_C1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX_C2)
    z ^= z >> np.uint64(31)
    return z


def _validate_intervals(intervals) -> tuple[tuple[float, float], ...]:
    out = []
    for pair in intervals:
        a, b = float(pair[0]), float(pair[1])
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError("interval endpoints must be finite")
        if a > b:
            raise ValueError(f"interval [{a}, {b}] is reversed")
        out.append((a, b))
    out.sort()
    for (a0, b0), (a1, _) in zip(out, out[1:]):
        if b0 >= a1:
            raise ValueError("intervals must be pairwise disjoint (closed)")
    return tuple(out)


@dataclass(frozen=True)
class NoisyRegionDistribution:
    """Uniform marginal on [0, 1] with positive region ``intervals`` and label
    noise ``eta`` in [0, 1/2).

    Attributes:
        intervals: disjoint sorted closed intervals inside [0, 1], the region
            where the clean label is 1.
        eta: probability that an observed label is flipped.
    """

    intervals: tuple[tuple[float, float], ...]
    eta: float

    def __post_init__(self):
        ivs = _validate_intervals(self.intervals)
        for a, b in ivs:
            if a < 0.0 or b > 1.0:
                raise ValueError("target region must lie inside [0, 1]")
        if not (0.0 <= self.eta < 0.5):
            raise ValueError("noise rate must satisfy 0 <= eta < 1/2")
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "eta", float(self.eta))

    @property
    def target_measure(self) -> float:
        return sum(b - a for a, b in self.intervals)


@dataclass(frozen=True)
class IntervalClassifier:
    """Predicts 1 inside a disjoint sorted union of closed intervals."""

    regions: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "regions", _validate_intervals(self.regions))

    @property
    def num_intervals(self) -> int:
        return len(self.regions)

    def predict(self, points: np.ndarray) -> np.ndarray:
        """Indicator of membership in the region union, per row of ``points``."""
        x = np.asarray(points, dtype=np.float64)
        if x.ndim == 2:
            if x.shape[1] != 1:
                raise ValueError("interval classifiers are one-dimensional")
            x = x[:, 0]
        if not self.regions:
            return np.zeros(x.shape[0], dtype=np.uint8)
        flat = np.array([e for pair in self.regions for e in pair])
        right = np.searchsorted(flat, x, side="right")
        left = np.searchsorted(flat, x, side="left")
        inside = (right % 2 == 1) | ((left < flat.size) & (flat[np.minimum(left, flat.size - 1)] == x))
        return inside.astype(np.uint8)

    @property
    def endpoint_vector(self) -> tuple[float, ...]:
        return tuple(e for pair in self.regions for e in pair)


@dataclass(frozen=True, eq=False)
class LabeledSample:
    """n observations: feature rows ``points`` (n x d) and labels in {0, 1}."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("points must be a nonempty n x d array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        lab = np.asarray(self.labels)
        if lab.shape != (pts.shape[0],):
            raise ValueError("labels must have one entry per point")
        if not np.isin(lab, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab.astype(np.uint8))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def x1d(self) -> np.ndarray:
        if self.dim != 1:
            raise ValueError("sample is not one-dimensional")
        return self.points[:, 0]


def region_indicator(x: np.ndarray, intervals) -> np.ndarray:
    """Membership indicator of values ``x`` in a sorted disjoint closed union."""
    vals = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return IntervalClassifier(tuple(intervals)).predict(vals)


def generate_sample(dist: NoisyRegionDistribution, n: int, seed: int) -> LabeledSample:
    """Draw n i.i.d. observations from ``dist``.

    X_i is uniform on [0, 1); Y_i equals the region indicator of X_i flipped
    with probability eta. Observation i consumes only the i-th child stream of
    ``seed``, so the result is bitwise deterministic in (dist, n, seed) and
    independent of any partitioning of the index range.

    Args:
        dist: sampling distribution.
        n: sample size, at least 1.
        seed: 64-bit stream seed (wider ints are reduced mod 2^64).

    Returns:
        A LabeledSample with shape (n, 1) points.
    """
    if n < 1:
        raise ValueError("sample size must be at least 1")
    u = _stream_outputs(int(seed), 2, n)
    x = u[0]
    clean = region_indicator(x, dist.intervals)
    flip = (u[1] < dist.eta).astype(np.uint8)
    return LabeledSample(points=x[:, None], labels=clean ^ flip)


def bayes_risk(dist: NoisyRegionDistribution) -> float:
    """Minimal achievable loss: the flip rate eta (attained by the region rule)."""
    return dist.eta


def _intersection_measure(a, b) -> float:
    total = 0.0
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if hi > lo:
            total += hi - lo
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return total


def symmetric_difference_measure(a, b) -> float:
    """Lebesgue measure of the symmetric difference of two closed unions."""
    a = _validate_intervals(a)
    b = _validate_intervals(b)
    la = sum(hi - lo for lo, hi in a)
    lb = sum(hi - lo for lo, hi in b)
    return la + lb - 2.0 * _intersection_measure(a, b)


def true_loss(f: IntervalClassifier, dist: NoisyRegionDistribution) -> float:
    """Exact misclassification probability of ``f`` under ``dist``.

    Uses the closed form eta + (1 - 2*eta) * lambda(A symdiff A*). Requires
    the classifier's regions to lie inside [0, 1], where the marginal lives.
    """
    for a, b in f.regions:
        if a < 0.0 or b > 1.0:
            raise ValueError("classifier regions must lie inside [0, 1]")
    lam = symmetric_difference_measure(f.regions, dist.intervals)
    return dist.eta + (1.0 - 2.0 * dist.eta) * lam


def true_loss_of_regions(regions, dist: NoisyRegionDistribution) -> float:
    lam = symmetric_difference_measure(regions, dist.intervals)
    return dist.eta + (1.0 - 2.0 * dist.eta) * lam


def cumulative_target_measure(dist: NoisyRegionDistribution, v: np.ndarray) -> np.ndarray:
    """Measure of the target region below each value: lambda(A* cap [0, v])."""
    vals = np.atleast_1d(np.asarray(v, dtype=np.float64))
    out = np.zeros_like(vals)
    for a, b in dist.intervals:
        out += np.clip(vals - a, 0.0, b - a)
    return out


_OPTIMAL_REGION_GUARD = 14


def _range_families(m: int, kmax: int):
    """All families of at most kmax disjoint index ranges over 0..m-1.

    Adjacent ranges stay distinct (that is the whole point: covering two
    neighboring target intervals with two regions is different from bridging
    them with one). Families come out with ranges in increasing order.
    """
    acc: list[tuple[int, int]] = []

    def rec(start: int, left: int):
        yield tuple(acc)
        if left == 0:
            return
        for i in range(start, m):
            for j in range(i, m):
                acc.append((i, j))
                yield from rec(j + 1, left - 1)
                acc.pop()

    yield from rec(0, kmax)


def class_optimal_region(dist: NoisyRegionDistribution, k: int) -> tuple[IntervalClassifier, float]:
    """Best classifier among unions of at most k intervals, with its true loss.

    The symmetric-difference measure is piecewise linear in the endpoints with
    breakpoints only at endpoints of A*, so an optimal union consists of
    regions spanning whole runs of consecutive target intervals (bridging the
    gaps inside a run, leaving the rest uncovered). The search enumerates all
    families of at most k disjoint runs. Ties are broken toward fewer
    intervals, then the lexicographically smallest endpoint vector.
    """
    if k < 0:
        raise ValueError("interval budget must be nonnegative")
    ivs = dist.intervals
    m = len(ivs)
    if m > _OPTIMAL_REGION_GUARD:
        raise ValueError("too many target intervals for exhaustive search")
    best = None
    best_regions: tuple = ()
    for family in _range_families(m, k):
        regions = tuple((ivs[i][0], ivs[j][1]) for i, j in family)
        lam = symmetric_difference_measure(regions, ivs)
        key = (lam, len(regions), tuple(e for pair in regions for e in pair))
        if best is None or key < best:
            best = key
            best_regions = regions
    clf = IntervalClassifier(best_regions)
    return clf, dist.eta + (1.0 - 2.0 * dist.eta) * best[0]


def class_optimal_loss(dist: NoisyRegionDistribution, k: int) -> float:
    """Minimal true loss over unions of at most k intervals."""
    return class_optimal_region(dist, k)[1]


def max_class_loss(dist: NoisyRegionDistribution, k: int) -> float:
    """Maximal true loss over unions of at most k intervals (k >= 1).

    The region A maximizing lambda(A symdiff A*) can be taken with endpoints
    among {0, 1} and the endpoints of A*. Splitting [0, 1] at those points
    into alternating complement/target segments, each candidate interval of A
    is a contiguous window of segments contributing +length for complement
    segments and -length for target segments, on top of the baseline
    lambda(A*). Maximizing over at most k windows is the usual best-sum-of-
    at-most-k-runs recursion on the segment weights.
    """
    if k < 1:
        raise ValueError("need at least one interval")
    cuts = sorted({0.0, 1.0, *(e for pair in dist.intervals for e in pair)})
    weights = []
    for lo, hi in zip(cuts, cuts[1:]):
        if hi == lo:
            continue
        mid_inside = _intersection_measure(((lo, hi),), dist.intervals) > 0.0
        weights.append(-(hi - lo) if mid_inside else (hi - lo))
    neg = float("-inf")
    inside = [neg] * (k + 1)   # best total with an open window, r windows used
    outside = [0.0] * (k + 1)  # best total with no open window
    for w in weights:
        new_inside = inside[:]
        for r in range(k, 0, -1):
            new_inside[r] = w + max(inside[r], outside[r - 1])
        for r in range(1, k + 1):
            outside[r] = max(outside[r], new_inside[r])
        inside = new_inside
    gain = max(0.0, max(outside[1:k + 1], default=0.0),
               max((v for v in inside[1:k + 1]), default=neg))
    lam = dist.target_measure + gain
    return dist.eta + (1.0 - 2.0 * dist.eta) * lam


def write_sample_csv(sample: LabeledSample, path) -> None:
    """Write a sample as CSV with header x1,...,xd,y (UTF-8, LF endings)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{j + 1}" for j in range(sample.dim)] + ["y"])
        for row, lab in zip(sample.points, sample.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(lab)])


def read_sample_csv(path) -> LabeledSample:
    """Read a sample written by :func:`write_sample_csv` (or any conforming CSV)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1] != "y" or any(
            h != f"x{j + 1}" for j, h in enumerate(header[:-1])
        ):
            raise ValueError(f"{path}: expected header x1,...,xd,y")
        d = len(header) - 1
        xs, ys = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise ValueError(f"{path}:{line_no}: expected {d + 1} fields")
            xs.append([float(v) for v in row[:-1]])
            y = row[-1].strip()
            if y not in ("0", "1"):
                raise ValueError(f"{path}:{line_no}: label must be 0 or 1")
            ys.append(int(y))
    if not xs:
        raise ValueError(f"{path}: no observations")
    return LabeledSample(points=np.array(xs), labels=np.array(ys))
