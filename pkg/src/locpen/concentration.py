"""Empirical verification suites for the tail and expectation bounds.

Every check follows the same discipline. The right-hand side of a bound that
involves an expectation (E S, E log S, E R-hat, E sup|Lhat - L|) is estimated
on a replicate batch that is seed-disjoint from the batch producing the
left-hand statistic, so no replicate is reused across the two sides. A check
"passes" when the observed violation rate does not exceed the bound by more
than three binomial standard errors; these are one-sided inequalities, so
large positive margins are the expected outcome, not a problem.

Suprema over a class are taken over one canonical representative per
achievable error vector: for interval families, the minimal closed region
consistent with the prediction pattern (endpoints at sample points). The
empirical loss depends on a hypothesis only through its error vector, and the
representative pins down a concrete true loss, so the representative supremum
is a valid (if slightly smaller) version of the class supremum and must obey
the same bound. This is unit-tested against a fine grid of hypotheses.

Expectation-level reports (4.6, 4.7, 4.8) reuse the TailCheckReport shape:
``violation_rate`` holds the left-hand expectation estimate, ``bound`` the
right-hand one, and ``margin`` their gap; ``epsilon`` is 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .classes import (
    BlockStructure,
    ModelClass,
    block_structure,
    enumerate_error_vectors,
)
from .complexity import (
    EXACT_RADEMACHER_CAP,
    estimate_expected_log_shatter,
    random_shatter,
    rademacher_exact,
    u_pop,
)
from .data import (
    IntervalClassifier,
    LabeledSample,
    NoisyRegionDistribution,
    class_optimal_loss,
    cumulative_target_measure,
    generate_sample,
    max_class_loss,
    sub_seed,
    true_loss,
)


@dataclass(frozen=True)
class TailCheckReport:
    proposition: str
    n: int
    k: int
    reps: int
    epsilon: float
    violation_rate: float
    bound: float
    margin: float
    passed: bool
    side: str = ""
    extras: dict = field(default_factory=dict)


def _binomial_se(rate: float, reps: int) -> float:
    return math.sqrt(max(rate * (1.0 - rate), 0.0) / reps)


def _tail_report(
    proposition: str,
    side: str,
    n: int,
    k: int,
    reps: int,
    epsilon: float,
    violations: int,
    bound: float,
    extras: dict,
) -> TailCheckReport:
    rate = violations / reps
    se = _binomial_se(rate, reps)
    extras = dict(extras)
    extras["rate_se"] = se
    return TailCheckReport(
        proposition=proposition,
        n=n,
        k=k,
        reps=reps,
        epsilon=epsilon,
        violation_rate=rate,
        bound=bound,
        margin=bound - rate,
        passed=rate <= bound + 3.0 * se,
        side=side,
        extras=extras,
    )


def _class_k(c: ModelClass) -> int:
    return c.k if c.family == "intervals" else 1


def _require_true_loss_family(c: ModelClass) -> None:
    if c.family not in ("intervals", "thresholds", "fixed"):
        raise ValueError(
            "true-loss suites need a family with closed-form losses "
            "(intervals, thresholds, or fixed)"
        )


# ---------------------------------------------------------------------------
# per-replicate suprema of a*L(f) + b*Lhat(f) over canonical representatives


def _interval_sup(
    bs: BlockStructure, dist: NoisyRegionDistribution, k: int, a: float, b: float
) -> float:
    """sup over patterns with <= k runs (empty included) of a*L + b*Lhat,
    each pattern represented by its minimal closed region."""
    n = bs.n
    scale = 1.0 - 2.0 * dist.eta
    const = a * (dist.eta + scale * dist.target_measure) + b * bs.n1 / n
    pw = b * (bs.sizes - 2 * bs.ones) / n
    msr = cumulative_target_measure(dist, bs.values)
    gaps = np.diff(bs.values) - 2.0 * np.diff(msr)
    gw = a * scale * gaps
    if gw.size == 0:
        gw = np.zeros(1)
    best = _kernels.max_runs_float(pw, np.ascontiguousarray(gw), k)
    return const + float(best[k])


def _threshold_sup(
    bs: BlockStructure, dist: NoisyRegionDistribution, a: float, b: float
) -> float:
    """Same statistic over suffix rules 1{x >= values[j]} plus the empty rule,
    representative region [values[j], 1]."""
    n = bs.n
    scale = 1.0 - 2.0 * dist.eta
    lam_star = dist.target_measure
    msr = cumulative_target_measure(dist, bs.values)
    total_m = dist.target_measure
    lam = lam_star + (1.0 - bs.values) - 2.0 * (total_m - msr)
    losses = dist.eta + scale * lam
    diff = bs.sizes - 2 * bs.ones
    suffix = np.concatenate((np.cumsum(diff[::-1])[::-1], [0]))
    emp = (bs.n1 + suffix) / n  # entry j: rule at values[j]; last: empty rule
    losses = np.append(losses, dist.eta + scale * lam_star)
    return float((a * losses + b * emp).max())


def _fixed_sup(
    s: LabeledSample, dist: NoisyRegionDistribution, c: ModelClass, a: float, b: float
) -> float:
    f = IntervalClassifier(c.regions)
    lv = true_loss(f, dist)
    lh = float((f.predict(s.x1d()) != s.labels).mean())
    return a * lv + b * lh


def _relative_sup(
    s: LabeledSample, dist: NoisyRegionDistribution, c: ModelClass, a: float, b: float
) -> float:
    if c.family == "fixed":
        return _fixed_sup(s, dist, c, a, b)
    bs = block_structure(s)
    if c.family == "thresholds":
        return _threshold_sup(bs, dist, a, b)
    return _interval_sup(bs, dist, c.k, a, b)


# ---------------------------------------------------------------------------
# Prop 3.2: relative deviations against the expected shatter coefficient


def check_relative_vc(
    dist: NoisyRegionDistribution,
    c: ModelClass,
    n: int,
    epsilon: float,
    reps: int,
    seed: int,
) -> tuple[TailCheckReport, TailCheckReport]:
    """Two-sided relative-deviation tails.

    P{sup_f (L - 2 Lhat) >= 2 eps} and P{sup_f (Lhat - 2 L) >= 2 eps} are both
    bounded by 4 E S_k(X_1^{2n}) exp(-n eps / 4). The expectation is estimated
    on an independent 200-replicate batch of 2n-point samples.
    """
    _require_true_loss_family(c)
    if reps < 1 or epsilon < 0:
        raise ValueError("need reps >= 1 and epsilon >= 0")
    moments = estimate_expected_log_shatter(c, dist, 2 * n, replicates=200, seed=sub_seed(seed, 0))
    bound = min(4.0 * moments.mean_count * math.exp(-n * epsilon / 4.0), 1.0)
    main = sub_seed(seed, 1)
    v_up = v_dn = 0
    sup_up_max = sup_dn_max = -math.inf
    for r in range(reps):
        s = generate_sample(dist, n, sub_seed(main, r))
        s_up = _relative_sup(s, dist, c, 1.0, -2.0)
        s_dn = _relative_sup(s, dist, c, -2.0, 1.0)
        v_up += s_up >= 2.0 * epsilon
        v_dn += s_dn >= 2.0 * epsilon
        sup_up_max = max(sup_up_max, s_up)
        sup_dn_max = max(sup_dn_max, s_dn)
    k = _class_k(c)
    extras = {
        "expected_shatter_2n": moments.mean_count,
        "expected_shatter_se": moments.se_count,
        "class": c.label,
    }
    up = _tail_report(
        "3.2", "L-2Lhat", n, k, reps, epsilon, v_up, bound,
        {**extras, "max_sup": sup_up_max},
    )
    dn = _tail_report(
        "3.2", "Lhat-2L", n, k, reps, epsilon, v_dn, bound,
        {**extras, "max_sup": sup_dn_max},
    )
    return up, dn


# ---------------------------------------------------------------------------
# Prop 3.3: shatter-coefficient concentration and the log/exp chain


def check_shatter_concentration(
    dist: NoisyRegionDistribution,
    c: ModelClass,
    n: int,
    epsilon: float,
    reps: int,
    seed: int,
    grid: int | None = None,
) -> tuple[TailCheckReport, TailCheckReport]:
    """Both tails of log S_k(X_1^n) around its mean, plus the chain
    E log S <= log E S <= (1/ln 2) E log S.

    With a continuous marginal the point count is n almost surely and S is
    constant, making the tails trivially satisfied; pass ``grid`` to snap
    points to an equispaced grid so ties occur and S genuinely varies. The
    tails are also evaluated under base-2 logs (extras) so the verdict does
    not hinge on a log-base convention; the chain inequality itself is
    base-invariant.
    """
    if c.family == "stumps":
        raise ValueError("shatter suite supports the one-dimensional families")
    if reps < 1 or epsilon < 0:
        raise ValueError("need reps >= 1 and epsilon >= 0")

    def one_batch(batch_seed: int) -> tuple[np.ndarray, np.ndarray]:
        logs = np.empty(reps)
        counts = np.empty(reps)
        for r in range(reps):
            s = generate_sample(dist, n, sub_seed(batch_seed, r))
            if grid is not None:
                snapped = np.ceil(s.x1d() * grid) / grid
                s = LabeledSample(snapped.reshape(-1, 1), s.labels)
            cnt = random_shatter(c, s)
            counts[r] = float(cnt)
            logs[r] = math.log(cnt)
        return logs, counts

    ref_logs, ref_counts = one_batch(sub_seed(seed, 0))
    logs, _ = one_batch(sub_seed(seed, 1))
    e_log = float(ref_logs.mean())
    se_log = float(ref_logs.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    e_cnt = float(ref_counts.mean())
    se_cnt = float(ref_counts.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0

    bound = min(math.exp(-epsilon), 1.0)
    v_up = int(np.sum(logs > 2.0 * e_log + 2.0 * epsilon))
    v_dn = int(np.sum(e_log > 2.0 * logs + 2.0 * epsilon))
    # same events under base-2 logs: divide statistics by ln 2
    ln2 = math.log(2.0)
    v_up2 = int(np.sum(logs / ln2 > 2.0 * e_log / ln2 + 2.0 * epsilon))
    v_dn2 = int(np.sum(e_log / ln2 > 2.0 * logs / ln2 + 2.0 * epsilon))

    # chain: the lower step is Jensen and holds exactly per batch; the upper
    # step compares noisy estimates, so allow 3 propagated standard errors
    chain_lo_ok = e_log <= math.log(e_cnt) + 1e-12
    chain_se = math.hypot(se_cnt / e_cnt, se_log / ln2)
    chain_hi_ok = math.log(e_cnt) <= e_log / ln2 + 3.0 * chain_se
    extras = {
        "e_log_shatter": e_log,
        "e_log_shatter_se": se_log,
        "e_shatter": e_cnt,
        "e_shatter_se": se_cnt,
        "chain_lower_ok": bool(chain_lo_ok),
        "chain_upper_ok": bool(chain_hi_ok),
        "degenerate": bool(np.ptp(ref_logs) == 0.0 and np.ptp(logs) == 0.0),
        "grid": grid,
        "class": c.label,
    }
    k = _class_k(c)
    up = _tail_report(
        "3.3", "upper", n, k, reps, epsilon, v_up, bound,
        {**extras, "violations_base2": v_up2},
    )
    dn = _tail_report(
        "3.3", "lower", n, k, reps, epsilon, v_dn, bound,
        {**extras, "violations_base2": v_dn2},
    )
    if not (chain_lo_ok and chain_hi_ok):
        up = replace(up, passed=False)
        dn = replace(dn, passed=False)
    return up, dn


# ---------------------------------------------------------------------------
# Prop 4.4: Rademacher-average concentration (exact mode only)


def check_rademacher_concentration(
    dist: NoisyRegionDistribution,
    c: ModelClass,
    n: int,
    epsilon: float,
    reps: int,
    seed: int,
) -> tuple[TailCheckReport, TailCheckReport]:
    """P[R >= 2 E R + eps] <= exp(-6 n eps / 5) and
    P[R <= E R / 2 - eps] <= exp(-n eps).

    Exact Rademacher averages only (n <= 20), so no Monte Carlo noise enters
    the tail statistic; E R is estimated on an independent batch.
    """
    if n > EXACT_RADEMACHER_CAP:
        raise ValueError(f"exact Rademacher suite needs n <= {EXACT_RADEMACHER_CAP}")
    if reps < 1 or epsilon < 0:
        raise ValueError("need reps >= 1 and epsilon >= 0")

    def one_batch(batch_seed: int) -> np.ndarray:
        vals = np.empty(reps)
        for r in range(reps):
            s = generate_sample(dist, n, sub_seed(batch_seed, r))
            ev = enumerate_error_vectors(c, s)
            vals[r] = rademacher_exact(ev, n).value
        return vals

    ref = one_batch(sub_seed(seed, 0))
    vals = one_batch(sub_seed(seed, 1))
    e_rad = float(ref.mean())
    se_rad = float(ref.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    v_up = int(np.sum(vals >= 2.0 * e_rad + epsilon))
    v_dn = int(np.sum(vals <= 0.5 * e_rad - epsilon))
    extras = {"e_rademacher": e_rad, "e_rademacher_se": se_rad, "class": c.label}
    k = _class_k(c)
    up = _tail_report(
        "4.4", "upper", n, k, reps, epsilon, v_up,
        min(math.exp(-6.0 * n * epsilon / 5.0), 1.0), extras,
    )
    dn = _tail_report(
        "4.4", "lower", n, k, reps, epsilon, v_dn,
        min(math.exp(-n * epsilon), 1.0), extras,
    )
    return up, dn


# ---------------------------------------------------------------------------
# Prop 4.5: Talagrand-type deviation over the population-localized class


def _achievable_loss_range(
    dist: NoisyRegionDistribution, c: ModelClass
) -> tuple[float, float]:
    """Range of true losses over the class; the class is connected under
    endpoint deformation, so every value in between is achieved."""
    if c.family == "fixed":
        lv = true_loss(IntervalClassifier(c.regions), dist)
        return lv, lv
    if c.family != "intervals":
        raise ValueError("loss-range computation supports interval and fixed classes")
    return class_optimal_loss(dist, c.k), max_class_loss(dist, c.k)


def sigma_over_loss_cap(
    dist: NoisyRegionDistribution, c: ModelClass, loss_cap: float
) -> float:
    """sup of sqrt(L(f)(1 - L(f))) over members with L(f) <= loss_cap.

    L(1-L) is concave with its peak at 1/2, and the achievable losses form an
    interval, so the supremum is attained at the clamp of 1/2 into the
    feasible loss range.
    """
    lo, hi = _achievable_loss_range(dist, c)
    hi = min(hi, loss_cap)
    if hi < lo:
        raise ValueError("empty localized class: loss_cap below the class minimum")
    at = min(max(0.5, lo), hi)
    return math.sqrt(at * (1.0 - at))


def _sup_abs_dev_capped(
    s: LabeledSample, dist: NoisyRegionDistribution, c: ModelClass, loss_cap: float
) -> float:
    """sup of |Lhat - L| over representatives with true loss <= loss_cap."""
    if c.family == "fixed":
        f = IntervalClassifier(c.regions)
        lv = true_loss(f, dist)
        if lv > loss_cap:
            raise ValueError("fixed classifier outside its own localized class")
        lh = float((f.predict(s.x1d()) != s.labels).mean())
        return abs(lh - lv)
    if c.family == "intervals" and c.k == 1:
        bs = block_structure(s)
        msr = cumulative_target_measure(dist, bs.values)
        pref = np.cumsum(bs.sizes - 2 * bs.ones).astype(np.int64)
        sup_a, sup_b, count = _kernels.pair_scan_sup_k1(
            bs.values, msr, pref, bs.n1, bs.n, dist.eta,
            dist.target_measure, loss_cap,
        )
        if count == 0:
            raise ValueError("empty localized class on this replicate")
        return max(sup_a, sup_b)
    raise ValueError("capped suprema implemented for fixed classes and intervals:1")


def check_talagrand(
    dist: NoisyRegionDistribution,
    c: ModelClass,
    n: int,
    epsilon: float,
    reps: int,
    seed: int,
) -> TailCheckReport:
    """Deviation of sup|Lhat - L| over F* = {f : L(f) <= 4 L* + 3 u} around
    twice its mean: P[sup >= 2 E sup + Sigma sqrt(2 eps) + 4 eps/3] <= e^{-n eps}.

    L* is the class-optimal true loss, u the population localization radius
    computed from E S_k(X_1^n) (estimated on its own batch), and Sigma the
    closed-form sup of sqrt(L(1-L)) over the localized class. Population
    quantities come from the known synthetic distribution; they are a
    verification device, never selection inputs.
    """
    if reps < 1 or epsilon < 0:
        raise ValueError("need reps >= 1 and epsilon >= 0")
    k = _class_k(c)
    moments = estimate_expected_log_shatter(c, dist, n, replicates=200, seed=sub_seed(seed, 2))
    u = u_pop(moments.mean_count, n, k)
    l_star = _achievable_loss_range(dist, c)[0]
    cap = 4.0 * l_star + 3.0 * u
    sigma = sigma_over_loss_cap(dist, c, cap)

    ref_seed, main_seed = sub_seed(seed, 0), sub_seed(seed, 1)
    ref = np.empty(reps)
    for r in range(reps):
        s = generate_sample(dist, n, sub_seed(ref_seed, r))
        ref[r] = _sup_abs_dev_capped(s, dist, c, cap)
    e_sup = float(ref.mean())
    se_sup = float(ref.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    cutoff = 2.0 * e_sup + sigma * math.sqrt(2.0 * epsilon) + 4.0 * epsilon / 3.0
    violations = 0
    for r in range(reps):
        s = generate_sample(dist, n, sub_seed(main_seed, r))
        violations += _sup_abs_dev_capped(s, dist, c, cap) >= cutoff
    extras = {
        "loss_cap": cap,
        "sigma": sigma,
        "u_pop": u,
        "expected_shatter": moments.mean_count,
        "e_sup_abs_dev": e_sup,
        "e_sup_abs_dev_se": se_sup,
        "cutoff": cutoff,
        "class": c.label,
    }
    return _tail_report(
        "4.5", "", n, k, reps, epsilon, violations,
        min(math.exp(-n * epsilon), 1.0), extras,
    )


# ---------------------------------------------------------------------------
# (4.7), (4.8), Prop 4.6: expectation-level inequalities


def _expectation_report(
    proposition: str,
    n: int,
    k: int,
    reps: int,
    lhs: float,
    rhs: float,
    combined_se: float,
    extras: dict,
) -> TailCheckReport:
    extras = dict(extras)
    extras["combined_se"] = combined_se
    return TailCheckReport(
        proposition=proposition,
        n=n,
        k=k,
        reps=reps,
        epsilon=0.0,
        violation_rate=lhs,
        bound=rhs,
        margin=rhs - lhs,
        passed=lhs <= rhs + 3.0 * combined_se,
        side="expectation",
        extras=extras,
    )


def check_symmetrization_and_massart(
    dist: NoisyRegionDistribution,
    c: ModelClass,
    n: int,
    reps: int,
    seed: int,
) -> tuple[TailCheckReport, TailCheckReport, TailCheckReport]:
    """Three expectation inequalities, each LHS and RHS on disjoint batches:

    * E sup|Lhat - L| <= 2 E R-hat                               (4.7)
    * E R-hat <= 2 E sup|Lhat - L| + sup_f L(f) / sqrt(n)        (4.8)
    * E sup|Lhat - L| <= 8 m / n + 4 sqrt(2 Sigma^2 m / n),
      m = E log 2 S_k(X_1^{2n}), Sigma = sup_f sqrt(L(1-L))      (Prop 4.6)

    Requires exact Rademacher feasibility (n <= 20) and an interval or fixed
    class so both sides are free of nested estimation error beyond the
    replicate averages.
    """
    if n > EXACT_RADEMACHER_CAP:
        raise ValueError(f"needs exact Rademacher averages, so n <= {EXACT_RADEMACHER_CAP}")
    if c.family not in ("intervals", "fixed"):
        raise ValueError("expectation suite supports interval and fixed classes")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    k = _class_k(c)

    def batch(batch_seed: int) -> tuple[np.ndarray, np.ndarray]:
        sups = np.empty(reps)
        rads = np.empty(reps)
        for r in range(reps):
            s = generate_sample(dist, n, sub_seed(batch_seed, r))
            if c.family == "fixed":
                sups[r] = _sup_abs_dev_capped(s, dist, c, 2.0)
            else:
                up = _relative_sup(s, dist, c, -1.0, 1.0)
                dn = _relative_sup(s, dist, c, 1.0, -1.0)
                sups[r] = max(up, dn)
            ev = enumerate_error_vectors(c, s)
            rads[r] = rademacher_exact(ev, n).value
        return sups, rads

    sups_a, rads_a = batch(sub_seed(seed, 0))
    sups_b, rads_b = batch(sub_seed(seed, 1))
    log2s = np.empty(reps)
    two_n_seed = sub_seed(seed, 2)
    for r in range(reps):
        s = generate_sample(dist, n * 2, sub_seed(two_n_seed, r))
        log2s[r] = math.log(2 * random_shatter(c, s))

    def mean_se(x: np.ndarray) -> tuple[float, float]:
        se = float(x.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        return float(x.mean()), se

    e_sup_a, se_sup_a = mean_se(sups_a)
    e_sup_b, se_sup_b = mean_se(sups_b)
    e_rad_a, se_rad_a = mean_se(rads_a)
    e_rad_b, se_rad_b = mean_se(rads_b)
    m, se_m = mean_se(log2s)

    rep_47 = _expectation_report(
        "4.7", n, k, reps,
        lhs=e_sup_a, rhs=2.0 * e_rad_b,
        combined_se=math.hypot(se_sup_a, 2.0 * se_rad_b),
        extras={"class": c.label},
    )
    sup_loss = _achievable_loss_range(dist, c)[1]
    rep_48 = _expectation_report(
        "4.8", n, k, reps,
        lhs=e_rad_a, rhs=2.0 * e_sup_b + sup_loss / math.sqrt(n),
        combined_se=math.hypot(se_rad_a, 2.0 * se_sup_b),
        extras={"sup_loss": sup_loss, "class": c.label},
    )
    sigma = sigma_over_loss_cap(dist, c, 1.0)
    rhs_46 = 8.0 * m / n + 4.0 * math.sqrt(2.0 * sigma * sigma * m / n)
    # delta method through m for the RHS standard error
    drhs_dm = 8.0 / n + 2.0 * math.sqrt(2.0 * sigma * sigma / (n * m)) if m > 0 else 8.0 / n
    rep_46 = _expectation_report(
        "4.6", n, k, reps,
        lhs=e_sup_a, rhs=rhs_46,
        combined_se=math.hypot(se_sup_a, drhs_dm * se_m),
        extras={"sigma": sigma, "e_log_2shatter_2n": m, "class": c.label},
    )
    return rep_47, rep_48, rep_46
