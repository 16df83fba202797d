"""The four penalty families and the penalized model selector.

Each penalty op follows the same shape: gather its ingredients (ERM loss,
shatter statistics, a Rademacher estimate where needed), hand them to a pure
assembly function, and wrap the result in a PenaltyBreakdown with every
intermediate recorded. The assembly functions are exposed so the experiment
harness can reuse one Monte Carlo pass across a whole hierarchy without
duplicating any formula.

Values are clamped at 1 uniformly; the pre-clamp value is kept in
``raw_value``. Only the localized pipeline reacts to the constant profile;
the simple and Vapnik penalties always use their published constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .classes import (
    EnumerationInfeasible,
    ErmResult,
    ModelClass,
    block_structure,
    enumerate_error_vectors,
    erm,
    worst_case_log_shatter,
)
from .complexity import (
    EXACT_RADEMACHER_CAP,
    ConstantProfile,
    LocalizationResult,
    PAPER_PROFILE,
    RademacherEstimate,
    estimate_from_sups,
    localization_threshold,
    localized_subclass,
    localized_subset_count,
    rademacher_exact,
    rademacher_mc,
    rademacher_mc_interval_sups,
    rademacher_mc_interval_sups_budgeted,
    random_shatter,
    u_hat,
)
from .data import LabeledSample, sub_seed

KINDS = ("vapnik", "global", "simple", "localized")

# kind token (config/CLI) -> PenaltyBreakdown.kind
KIND_NAMES = {
    "vapnik": "vapnik",
    "global": "global_rademacher",
    "simple": "simple",
    "localized": "localized",
}

# budget for the run-pattern DP that serves localized Rademacher estimation
# when the subclass is proper but not materializable: blocks * k * n * draws
_BUDGETED_WORK_CAP = 2 * 10**9


@dataclass(frozen=True)
class PenaltyOptions:
    """Knobs shared by the penalty ops and the selector."""

    gamma: float = 1.0        # Vapnik multiplier
    gamma1: float = 2.0       # global Rademacher multiplier
    gamma2: float = 1.0       # global sqrt(log k / n) multiplier
    mc_draws: int = 10_000
    seed: int = 0
    profile: ConstantProfile = field(default_factory=ConstantProfile.paper)


@dataclass(frozen=True)
class PenaltyBreakdown:
    kind: str
    value: float
    raw_value: float
    terms: dict
    k: int
    n: int


@dataclass(frozen=True)
class ScoreRow:
    k: int
    class_label: str
    emp_loss: float
    penalty: PenaltyBreakdown
    score: float


@dataclass(frozen=True)
class SelectionResult:
    chosen_k: int
    chosen_classifier: object
    table: tuple[ScoreRow, ...]


class SelectModelError(Exception):
    """A per-class penalty failed; carries the rows computed so far."""

    def __init__(self, k: int, cause: Exception, partial_table: tuple):
        self.k = k
        self.cause = cause
        self.partial_table = partial_table
        super().__init__(f"penalty computation failed at class index {k}: {cause}")


def _clamp(raw: float) -> float:
    return min(raw, 1.0)


# ---------------------------------------------------------------------------
# assembly cores: pure formula evaluation, shared with the harness


def vapnik_terms(log_shatter_2n: float, n: int, k: int, gamma: float) -> tuple[float, dict]:
    raw = gamma * math.sqrt((log_shatter_2n + math.log(k)) / n)
    return raw, {"log_shatter_2n": log_shatter_2n, "gamma": gamma}


def global_terms(
    rad: RademacherEstimate, n: int, k: int, gamma1: float, gamma2: float
) -> tuple[float, dict]:
    tail = gamma2 * math.sqrt(math.log(k) / n)
    raw = gamma1 * rad.value + tail
    return raw, {
        "rademacher": rad.value,
        "rademacher_se": rad.std_error,
        "rademacher_mode": rad.mode,
        "rademacher_draws": rad.draws,
        "index_term": tail,
        "gamma1": gamma1,
        "gamma2": gamma2,
    }


def simple_terms(
    erm_loss: float, log_shatter_2n: float, n: int, k: int
) -> tuple[float, dict]:
    rate = (log_shatter_2n + 2.0 * math.log(n * k)) / n
    raw = 2.0 * math.sqrt(2.0 * erm_loss + 8.0 * rate) * math.sqrt(rate)
    return raw, {"erm_loss": erm_loss, "log_shatter_2n": log_shatter_2n, "rate": rate}


def localized_terms(
    rad: RademacherEstimate,
    erm_loss: float,
    uh: float,
    n: int,
    k: int,
    profile: ConstantProfile,
) -> tuple[float, dict]:
    lognk = math.log(n * k)
    rad_term = profile.penalty_rad_mult * rad.value
    log_term = profile.penalty_log_mult * lognk / n
    cross = (
        profile.penalty_cross_mult
        * math.sqrt(lognk / n)
        * math.sqrt(8.0 * erm_loss + 7.0 * uh)
    )
    raw = rad_term + log_term + cross
    return raw, {
        "rademacher": rad.value,
        "rademacher_se": rad.std_error,
        "rademacher_mode": rad.mode,
        "rademacher_draws": rad.draws,
        "u_hat": uh,
        "erm_loss": erm_loss,
        "rad_term": rad_term,
        "log_term": log_term,
        "cross_term": cross,
        "profile": profile.label,
    }


# ---------------------------------------------------------------------------
# Rademacher routing


def _full_class_rademacher(
    c: ModelClass, s: LabeledSample, options: PenaltyOptions, mc_seed: int
) -> tuple[RademacherEstimate, str]:
    """Exact when n is small and the class enumerable; interval families past
    the exact cap go straight to the run-pattern DP (per-draw exact suprema
    without materializing the count x n vector matrix); everything else is
    Monte Carlo over the explicit vectors."""
    if c.family == "intervals" and s.n > EXACT_RADEMACHER_CAP:
        bs = block_structure(s)
        sups = rademacher_mc_interval_sups(bs, c.k, options.mc_draws, mc_seed)
        return estimate_from_sups(sups[:, c.k - 1]), "interval-dp"
    ev = enumerate_error_vectors(c, s)
    if s.n <= EXACT_RADEMACHER_CAP:
        return rademacher_exact(ev, s.n), "exact-enumeration"
    return rademacher_mc(ev, s.n, options.mc_draws, mc_seed), "mc-enumeration"


def _localized_rademacher(
    c: ModelClass,
    s: LabeledSample,
    res: ErmResult,
    uh: float,
    options: PenaltyOptions,
    mc_seed: int,
) -> tuple[RademacherEstimate, LocalizationResult, str]:
    thr = localization_threshold(res.empirical_loss, uh, options.profile)
    if thr >= 1.0:
        # every empirical loss is <= 1, so the subclass is the whole class
        rad, route = _full_class_rademacher(c, s, options, mc_seed)
        loc = LocalizationResult(uh, thr, None, random_shatter(c, s))
        return rad, loc, route + " (threshold saturated)"
    if c.family == "intervals" and s.n > EXACT_RADEMACHER_CAP:
        bs = block_structure(s)
        max_errors = math.floor(thr * s.n)
        work = bs.num_blocks * c.k * (max_errors + 1) * options.mc_draws
        if work > _BUDGETED_WORK_CAP:
            raise EnumerationInfeasible(work, _BUDGETED_WORK_CAP)
        sups = rademacher_mc_interval_sups_budgeted(
            bs, c.k, options.mc_draws, mc_seed, max_errors
        )
        count = localized_subset_count(bs, c.k, max_errors)[c.k - 1]
        loc = LocalizationResult(uh, thr, None, count)
        return estimate_from_sups(sups[:, c.k - 1]), loc, "interval-dp (budgeted)"
    ev = enumerate_error_vectors(c, s)
    loc = localized_subclass(ev, res.empirical_loss, uh, options.profile)
    if s.n <= EXACT_RADEMACHER_CAP:
        return rademacher_exact(loc.subset, s.n), loc, "exact-enumeration"
    return rademacher_mc(loc.subset, s.n, options.mc_draws, mc_seed), loc, "mc-enumeration"


# ---------------------------------------------------------------------------
# penalty ops


def penalty_vapnik(c: ModelClass, n: int, k: int, gamma: float = 1.0) -> PenaltyBreakdown:
    """Worst-case structural penalty gamma * sqrt((log S_k(2n) + log k)/n)."""
    if n < 1 or k < 1 or gamma <= 0:
        raise ValueError("need n, k >= 1 and gamma > 0")
    ls = worst_case_log_shatter(c, 2 * n)
    raw, terms = vapnik_terms(ls, n, k, gamma)
    terms["shatter_source"] = _shatter_source(c)
    return PenaltyBreakdown("vapnik", _clamp(raw), raw, terms, k, n)


def penalty_global_rademacher(
    c: ModelClass, s: LabeledSample, k: int, options: PenaltyOptions | None = None
) -> PenaltyBreakdown:
    """Full-class Rademacher penalty gamma1 * R_hat + gamma2 * sqrt(log k / n)."""
    options = options or PenaltyOptions()
    rad, route = _full_class_rademacher(c, s, options, sub_seed(options.seed, k))
    raw, terms = global_terms(rad, s.n, k, options.gamma1, options.gamma2)
    terms["rademacher_route"] = route
    return PenaltyBreakdown("global_rademacher", _clamp(raw), raw, terms, k, s.n)


def penalty_simple(c: ModelClass, s: LabeledSample, k: int) -> PenaltyBreakdown:
    """Shatter-based penalty 2 sqrt(2 L-hat + 8 rate) sqrt(rate) with
    rate = (log S_k(2n) + 2 log(nk))/n."""
    res = erm(c, s)
    ls = worst_case_log_shatter(c, 2 * s.n)
    raw, terms = simple_terms(res.empirical_loss, ls, s.n, k)
    terms["shatter_source"] = _shatter_source(c)
    return PenaltyBreakdown("simple", _clamp(raw), raw, terms, k, s.n)


def penalty_localized(
    c: ModelClass, s: LabeledSample, k: int, options: PenaltyOptions | None = None
) -> PenaltyBreakdown:
    """Localized Rademacher penalty of the subclass around the ERM.

    Pipeline: erm -> random_shatter -> u_hat -> localized subclass ->
    Rademacher over the subclass -> assembly. All intermediates land in
    ``terms``.
    """
    options = options or PenaltyOptions()
    res = erm(c, s)
    shatter = random_shatter(c, s)
    uh = u_hat(shatter, s.n, k, options.profile)
    rad, loc, route = _localized_rademacher(
        c, s, res, uh, options, sub_seed(options.seed, k)
    )
    raw, terms = localized_terms(rad, res.empirical_loss, uh, s.n, k, options.profile)
    terms.update(
        {
            "shatter_count": shatter,
            "threshold": loc.threshold,
            "subset_count": loc.subset_count,
            "subset_materialized": loc.subset is not None,
            "rademacher_route": route,
        }
    )
    return PenaltyBreakdown("localized", _clamp(raw), raw, terms, k, s.n)


def _shatter_source(c: ModelClass) -> str:
    if c.family in ("thresholds", "intervals", "fixed"):
        return "exact-worst-case"
    return "sauer"


def compute_penalty(
    kind: str,
    c: ModelClass,
    s: LabeledSample,
    k: int,
    options: PenaltyOptions,
) -> PenaltyBreakdown:
    if kind == "vapnik":
        return penalty_vapnik(c, s.n, k, options.gamma)
    if kind == "global":
        return penalty_global_rademacher(c, s, k, options)
    if kind == "simple":
        return penalty_simple(c, s, k)
    if kind == "localized":
        return penalty_localized(c, s, k, options)
    raise ValueError(f"unknown penalty kind {kind!r}")


def select_model(
    classes: tuple[ModelClass, ...],
    s: LabeledSample,
    kind: str,
    options: PenaltyOptions | None = None,
) -> SelectionResult:
    """Minimize L-hat(erm_k) + penalty_k over the hierarchy.

    Ties go to the smallest index. If any per-class penalty fails, the error
    carries the rows computed before the failure.
    """
    if not classes:
        raise ValueError("need at least one class")
    options = options or PenaltyOptions()
    rows: list[ScoreRow] = []
    classifiers = []
    for k, c in enumerate(classes, start=1):
        try:
            res = erm(c, s)
            pen = compute_penalty(kind, c, s, k, options)
        except Exception as exc:  # surface partial progress
            raise SelectModelError(k, exc, tuple(rows)) from exc
        rows.append(ScoreRow(k, c.label, res.empirical_loss, pen, res.empirical_loss + pen.value))
        classifiers.append(res.classifier)
    best = 0
    for i in range(1, len(rows)):
        if rows[i].score < rows[best].score:
            best = i
    return SelectionResult(rows[best].k, classifiers[best], tuple(rows))
