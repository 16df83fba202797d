"""Random shatter coefficients, Rademacher averages, and localization radii.

Notes
-----
All logarithms are natural; the one place the base could matter structurally
(the shatter-concentration chain inequality) is checked under both natural
and binary logs by the concentration module.

Rademacher averages here are conditional on the sample and have no absolute
value inside the supremum. Exact evaluation enumerates all 2^n sign vectors
and is capped at n = 20; Monte Carlo estimation is deterministic in the seed
and independent of how draws are batched, because each draw's signs come from
a per-draw substream of a stateless mixer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .classes import (
    BlockStructure,
    ErrorVectorSet,
    ModelClass,
    enumerate_error_vectors,
    interval_pattern_count,
)
from .data import LabeledSample, NoisyRegionDistribution, generate_sample, sub_seed, _mix64_np

EXACT_RADEMACHER_CAP = 20
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@dataclass(frozen=True)
class RademacherEstimate:
    """Conditional Rademacher average, exact or Monte Carlo.

    Parameters
    ----------
    value : float
        The estimate; exact mode is the true conditional expectation.
    std_error : float
        Sample standard deviation of per-draw suprema over sqrt(draws);
        zero in exact mode.
    mode : str
        ``"exact"`` or ``"monte_carlo"``.
    draws : int
        Monte Carlo draw count; zero in exact mode.
    """

    value: float
    std_error: float
    mode: str
    draws: int


@dataclass(frozen=True)
class LocalizationResult:
    """Empirical localization of a class around its ERM.

    ``subset`` holds the error vectors surviving the loss threshold when the
    full set was materialized; it is None when the threshold is >= 1 and the
    subset provably equals the full class, in which case ``subset_count`` is
    the closed-form full count.
    """

    u_hat: float
    threshold: float
    subset: ErrorVectorSet | None
    subset_count: int


@dataclass(frozen=True)
class ConstantProfile:
    """Numeric constants used by the localization pipeline.

    ``paper`` keeps the published constants (16/15 in the loss threshold,
    8/20/2 in the penalty). ``exploratory`` multiplies the outer constants by
    ``scale`` so the localization effect is visible at desk-scale n; the
    multiplier of the ERM loss in the threshold is floored at 1 so the ERM
    error vector always survives. Non-paper profiles are flagged in every
    output that carries penalty values.
    """

    name: str
    scale: float = 1.0

    @classmethod
    def paper(cls) -> "ConstantProfile":
        return cls("paper", 1.0)

    @classmethod
    def exploratory(cls, scale: float = 0.25) -> "ConstantProfile":
        if not 0.0 < scale:
            raise ValueError("profile scale must be positive")
        return cls("exploratory", float(scale))

    @classmethod
    def parse(cls, token: str) -> "ConstantProfile":
        tok = token.strip()
        if tok == "paper":
            return cls.paper()
        if tok == "exploratory":
            return cls.exploratory()
        if tok.startswith("exploratory:"):
            return cls.exploratory(float(tok.split(":", 1)[1]))
        raise ValueError(f"unknown profile {token!r}")

    @property
    def is_paper(self) -> bool:
        return self.name == "paper"

    @property
    def label(self) -> str:
        return "paper" if self.is_paper else f"exploratory:{self.scale:g}"

    # threshold = threshold_loss_mult * erm_loss + threshold_u_mult * u_hat,
    # where u_hat itself already carries the scale via u_hat_mult.
    @property
    def u_hat_mult(self) -> float:
        return 16.0 * self.scale

    @property
    def threshold_loss_mult(self) -> float:
        return max(1.0, 16.0 * self.scale)

    @property
    def threshold_u_mult(self) -> float:
        return 15.0

    @property
    def penalty_rad_mult(self) -> float:
        return 8.0 * self.scale

    @property
    def penalty_log_mult(self) -> float:
        return 20.0 * self.scale

    @property
    def penalty_cross_mult(self) -> float:
        return 2.0 * self.scale


PAPER_PROFILE = ConstantProfile.paper()


def random_shatter(c: ModelClass, s: LabeledSample) -> int:
    """Number of distinct dichotomies the class achieves on the sample points.

    For the one-dimensional families the count has a closed form in the
    number B of distinct x values (B+1 for thresholds, sum_{r<=k} C(B+1, 2r)
    for interval unions), which equals |enumerate_error_vectors| without the
    feasibility limit. Stumps have no closed form and are enumerated, so the
    guard can propagate.
    """
    if c.family == "fixed":
        return 1
    if c.family == "stumps":
        return enumerate_error_vectors(c, s).count
    nb = np.unique(s.x1d()).shape[0]
    if c.family == "thresholds":
        return nb + 1
    return interval_pattern_count(nb, c.k)


def rademacher_exact(ev: ErrorVectorSet, n: int) -> RademacherEstimate:
    """Exact conditional Rademacher average by full sign enumeration (n <= 20)."""
    if n != ev.n:
        raise ValueError("n does not match the error-vector length")
    if n > EXACT_RADEMACHER_CAP:
        raise ValueError(f"exact mode capped at n = {EXACT_RADEMACHER_CAP}")
    words, pops = ev.packed()
    value = _kernels.rademacher_exact_masks(
        np.ascontiguousarray(words[:, 0]), pops, n, _kernels.POP16
    )
    return RademacherEstimate(float(value), 0.0, "exact", 0)


def _sign_words(seed: int, start: int, stop: int, words: int) -> np.ndarray:
    # row d = the 64-bit sign words of draw start+d; bit i set means sigma_i = +1
    dseeds = _mix64_np(
        np.uint64(seed) + np.arange(start + 1, stop + 1, dtype=np.uint64) * _GOLDEN
    )
    return _mix64_np(
        dseeds[:, None] + (np.arange(1, words + 1, dtype=np.uint64))[None, :] * _GOLDEN
    )


def rademacher_mc(ev: ErrorVectorSet, n: int, draws: int, seed: int) -> RademacherEstimate:
    """Monte Carlo Rademacher average over an explicit error-vector set.

    Per draw, the supremum over vectors of (1/n) sum_i sigma_i e_i is exact;
    only the expectation over signs is sampled. std_error is the sample
    standard deviation of the per-draw suprema divided by sqrt(draws).
    """
    if n != ev.n:
        raise ValueError("n does not match the error-vector length")
    if draws < 1:
        raise ValueError("draws must be >= 1")
    masks, pops = ev.packed()
    nwords = masks.shape[1]
    sups = np.empty(draws)
    # chunk the draws so the (chunk, count, words) popcount tensor stays small
    chunk = max(1, min(draws, (1 << 22) // max(1, ev.count * nwords)))
    for lo in range(0, draws, chunk):
        hi = min(draws, lo + chunk)
        sw = _sign_words(seed, lo, hi, nwords)
        hits = np.bitwise_count(masks[None, :, :] & sw[:, None, :]).sum(axis=2)
        sups[lo:hi] = (2 * hits - pops[None, :]).max(axis=1) / n
    se = float(sups.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return RademacherEstimate(float(sups.mean()), se, "monte_carlo", draws)


def rademacher_mc_interval_sups(
    bs: BlockStructure, kmax: int, draws: int, seed: int
) -> np.ndarray:
    """Per-draw Rademacher suprema for the whole intervals hierarchy.

    Column j holds the exact per-draw supremum over IntervalUnions(j+1) run
    patterns, computed by dynamic programming on blocks, so one pass serves
    every class of the hierarchy. Shape (draws, kmax).
    """
    return _kernels.rademacher_mc_runs(
        np.uint64(seed), draws, bs.y_sorted, bs.starts, kmax
    )


def rademacher_mc_interval_sups_budgeted(
    bs: BlockStructure, kmax: int, draws: int, seed: int, max_errors: int
) -> np.ndarray:
    """Like rademacher_mc_interval_sups, restricted to patterns with at most
    ``max_errors`` misclassified points (the localized subclass at scale)."""
    return _kernels.rademacher_mc_runs_budgeted(
        np.uint64(seed), draws, bs.y_sorted, bs.starts, kmax, max_errors
    )


def estimate_from_sups(sups: np.ndarray) -> RademacherEstimate:
    """Wrap a vector of per-draw suprema as a monte_carlo RademacherEstimate."""
    draws = sups.shape[0]
    se = float(sups.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return RademacherEstimate(float(sups.mean()), se, "monte_carlo", draws)


def u_hat(
    shatter_count: int, n: int, k: int, profile: ConstantProfile = PAPER_PROFILE
) -> float:
    """Empirical localization radius: 16(4 log S_k(X_1^n) + 9 log(nk))/n."""
    if shatter_count < 1 or n < 1 or k < 1:
        raise ValueError("shatter_count, n, k must all be >= 1")
    return profile.u_hat_mult * (4.0 * math.log(shatter_count) + 9.0 * math.log(n * k)) / n


def localization_threshold(
    erm_loss: float, uh: float, profile: ConstantProfile = PAPER_PROFILE
) -> float:
    """Empirical-loss cutoff defining the localized subclass."""
    return profile.threshold_loss_mult * erm_loss + profile.threshold_u_mult * uh


def localized_subclass(
    full: ErrorVectorSet,
    erm_loss: float,
    uh: float,
    profile: ConstantProfile = PAPER_PROFILE,
) -> LocalizationResult:
    """Filter a materialized error-vector set to the localized subclass.

    The subset keeps every vector whose empirical loss is at most
    threshold_loss_mult * erm_loss + 15 * u_hat; with the paper profile that
    is 16 L-hat(erm) + 15 u-hat, so the ERM vector always survives.
    """
    thr = localization_threshold(erm_loss, uh, profile)
    keep = full.means() <= thr
    subset = ErrorVectorSet(full.vectors[keep])
    return LocalizationResult(uh, thr, subset, subset.count)


def u_bar(expected_log_shatter: float, n: int, k: int) -> float:
    """Expectation-level radius 16(8 E log S_k(X_1^n) + 17 log(nk))/n.

    Reporting-only (feeds the expectation-side rows of the experiment
    report); always uses the headline constants.
    """
    if expected_log_shatter < 0 or n < 1 or k < 1:
        raise ValueError("bad u_bar arguments")
    return 16.0 * (8.0 * expected_log_shatter + 17.0 * math.log(n * k)) / n


def u_pop(expected_shatter: float, n: int, k: int) -> float:
    """Population localization radius 8(2 log E S_k(X_1^n) + 2 log(nk))/n."""
    if expected_shatter < 1 or n < 1 or k < 1:
        raise ValueError("bad u_pop arguments")
    return 8.0 * (2.0 * math.log(expected_shatter) + 2.0 * math.log(n * k)) / n


def epsilon_k(n: int, k: int) -> float:
    """The per-class slack 2 log(nk)/n."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    return 2.0 * math.log(n * k) / n


def localized_subset_count(
    bs: BlockStructure, kmax: int, max_errors: int
) -> list[int]:
    """Exact count of run patterns with at most k runs misclassifying at most
    ``max_errors`` points, for each k = 1..kmax.

    Python-integer DP over blocks x runs x error count x open/closed state;
    error counts only accumulate, so states beyond the budget are pruned.
    Intended for moderate n where the full enumeration is refused.
    """
    if max_errors < 0:
        return [0] * kmax
    nb = bs.num_blocks
    cap = max_errors + 1
    d_out = bs.ones            # errors added by an unselected block
    d_in = bs.sizes - bs.ones  # errors added by a selected block
    out = [[0] * cap for _ in range(kmax + 1)]
    inn = [[0] * cap for _ in range(kmax + 1)]
    out[0][0] = 1
    for b in range(nb):
        a0 = int(d_out[b])
        a1 = int(d_in[b])
        new_out = [[0] * cap for _ in range(kmax + 1)]
        new_inn = [[0] * cap for _ in range(kmax + 1)]
        for r in range(kmax + 1):
            row_o, row_i = out[r], inn[r]
            for u in range(cap):
                co = row_o[u]
                ci = row_i[u]
                if co:
                    if u + a0 < cap:
                        new_out[r][u + a0] += co
                    if r < kmax and u + a1 < cap:
                        new_inn[r + 1][u + a1] += co
                if ci:
                    if u + a0 < cap:
                        new_out[r][u + a0] += ci
                    if u + a1 < cap:
                        new_inn[r][u + a1] += ci
        out, inn = new_out, new_inn
    totals = []
    running = 0
    for r in range(kmax + 1):
        running += sum(out[r]) + sum(inn[r])
        if r >= 1:
            totals.append(running)
    return totals


@dataclass(frozen=True)
class ShatterMoments:
    """Replicate-averaged shatter statistics of a class at sample size n."""

    mean_log: float
    se_log: float
    mean_count: float
    se_count: float
    replicates: int


def estimate_expected_log_shatter(
    c: ModelClass,
    dist: NoisyRegionDistribution,
    n: int,
    replicates: int = 200,
    seed: int = 0,
) -> ShatterMoments:
    """Estimate E log S and E S by averaging over replicate samples.

    Per-replicate shatter counts use the closed forms of random_shatter, so
    this is cheap at any n for the one-dimensional families.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    logs = np.empty(replicates)
    counts = np.empty(replicates)
    for r in range(replicates):
        s = generate_sample(dist, n, sub_seed(seed, r))
        cnt = random_shatter(c, s)
        counts[r] = float(cnt)
        logs[r] = math.log(cnt)
    se_l = float(logs.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
    se_c = float(counts.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
    return ShatterMoments(float(logs.mean()), se_l, float(counts.mean()), se_c, replicates)
