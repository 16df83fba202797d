"""Monte Carlo oracle-inequality experiments, penalty-hypothesis suites, and
report emission.

One replicate engine serves both experiment flavors. Per replicate it draws a
sample, runs ERM once per class, runs a single Rademacher Monte Carlo pass
whose dynamic program covers every interval class in the hierarchy at once,
and assembles all requested penalty kinds from those shared ingredients; this
keeps a four-penalty comparison at the cost of roughly one localized run.

Replicates are processed in fixed-size chunks. Chunks may execute on worker
processes, but partial sums are reduced on the parent in chunk order, so the
report is bit-identical for any worker count. Every replicate's randomness
descends from sub_seed(seed, replicate_index) and nothing else.

True losses come from the closed forms in data; no test set exists anywhere.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .classes import (
    ModelClass,
    block_structure,
    enumerate_error_vectors,
    erm,
    interval_pattern_count,
    worst_case_log_shatter,
)
from .complexity import (
    ConstantProfile,
    epsilon_k,
    estimate_from_sups,
    localization_threshold,
    rademacher_exact,
    rademacher_mc_interval_sups,
    random_shatter,
    u_bar,
    u_hat,
)
from .concentration import TailCheckReport
from .data import (
    IntervalClassifier,
    NoisyRegionDistribution,
    bayes_risk,
    class_optimal_region,
    generate_sample,
    sub_seed,
    true_loss,
    true_loss_of_regions,
)
from .penalties import (
    KINDS,
    PenaltyOptions,
    _localized_rademacher,
    localized_terms,
    global_terms,
    simple_terms,
    vapnik_terms,
)

REPLICATE_CHUNK = 25

# additive constant of the expectation oracle bound, per penalty kind: the
# simple penalty's guarantee carries 16/n^2, the localized one 22/n^2; the
# comparison kinds are held to the localized statement's constant
_ORACLE_ADD = {"vapnik": 22.0, "global": 22.0, "simple": 16.0, "localized": 22.0}
_HP_CONSTANT = 44.0


@dataclass(frozen=True)
class ExperimentConfig:
    dist: NoisyRegionDistribution
    hierarchy: tuple[ModelClass, ...]
    n: int
    reps: int
    kinds: tuple[str, ...] = KINDS
    seed: int = 0
    profile: ConstantProfile = field(default_factory=ConstantProfile.paper)
    mc_draws: int = 10_000
    gamma: float = 1.0
    gamma1: float = 2.0
    gamma2: float = 1.0

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not self.hierarchy:
            raise ValueError("hierarchy must be nonempty")
        if self.n < 1 or self.mc_draws < 1:
            raise ValueError("n and mc_draws must be >= 1")
        for kind in self.kinds:
            if kind not in KINDS:
                raise ValueError(f"unknown penalty kind {kind!r}")
        if not self.kinds:
            raise ValueError("need at least one penalty kind")
        for c in self.hierarchy:
            if c.family not in ("intervals", "fixed"):
                raise ValueError(
                    "experiments need closed-form true losses; use interval or fixed classes"
                )

    def options(self) -> PenaltyOptions:
        return PenaltyOptions(
            gamma=self.gamma,
            gamma1=self.gamma1,
            gamma2=self.gamma2,
            mc_draws=self.mc_draws,
            seed=self.seed,
            profile=self.profile,
        )


@dataclass(frozen=True)
class ClassDiagnostics:
    k: int
    class_label: str
    mean_emp_loss: float
    mean_penalty_raw: float
    mean_penalty_clamped: float
    se_penalty_clamped: float
    mean_u_hat: float
    mean_subset_count: float
    selection_freq: float
    mean_true_loss: float
    se_true_loss: float


@dataclass(frozen=True)
class KindSummary:
    kind: str
    mean_excess: float
    se_excess: float
    oracle_bound: float
    oracle_add: float
    hp_violations: int
    hp_bound: float
    hp_vacuous: bool
    rows: tuple[ClassDiagnostics, ...]


@dataclass(frozen=True)
class ExpectationSideRow:
    """Per-class side of the localized expectation bound:
    8 E R(F-bar_k) + 15 eps_k + 16 sqrt(L_k* + u-bar_k) sqrt(2 eps_k)."""

    k: int
    l_star: float
    u_bar: float
    eps: float
    mean_rad: float
    se_rad: float
    side: float


@dataclass(frozen=True)
class ExperimentReport:
    n: int
    reps: int
    seed: int
    mc_draws: int
    profile_label: str
    bayes_risk: float
    class_labels: tuple[str, ...]
    l_star: tuple[float, ...]
    kinds: tuple[str, ...]
    summaries: tuple[KindSummary, ...]
    expectation_sides: tuple[ExpectationSideRow, ...]
    expectation_bound: float
    se_defined: bool
    partial: bool = False

    def summary(self, kind: str) -> KindSummary:
        for s in self.summaries:
            if s.kind == kind:
                return s
        raise KeyError(kind)


class ExperimentAborted(RuntimeError):
    """A replicate failed; carries the report over the completed prefix."""

    def __init__(self, cause: Exception, report: ExperimentReport | None):
        self.cause = cause
        self.report = report
        super().__init__(f"experiment aborted: {cause}")


# ---------------------------------------------------------------------------
# replicate engine


class _Engine:
    """Per-config constants plus the single-replicate computation.

    ``need_rad`` skips the Monte Carlo sign pass when no requested penalty
    consumes a Rademacher average (the estimates then stay zero and unused).
    """

    def __init__(self, cfg: ExperimentConfig, need_rad: bool = True):
        self.cfg = cfg
        self.need_rad = need_rad or any(
            kind in ("global", "localized") for kind in cfg.kinds
        )
        self.options = cfg.options()
        self.bayes = bayes_risk(cfg.dist)
        self.kcount = len(cfg.hierarchy)
        self.kmax = max((c.k for c in cfg.hierarchy if c.family == "intervals"), default=0)
        self.star_clf = []
        self.l_star = []
        self.vap = []
        self.wc_log_2n = []
        for pos, c in enumerate(cfg.hierarchy, start=1):
            if c.family == "fixed":
                clf = IntervalClassifier(c.regions)
                self.star_clf.append(clf)
                self.l_star.append(true_loss(clf, cfg.dist))
            else:
                clf, loss = class_optimal_region(cfg.dist, c.k)
                self.star_clf.append(clf)
                self.l_star.append(loss)
            ls2n = worst_case_log_shatter(c, 2 * cfg.n)
            self.wc_log_2n.append(ls2n)
            self.vap.append(vapnik_terms(ls2n, cfg.n, pos, cfg.gamma)[0])

    def replicate(self, rep_index: int) -> dict:
        cfg = self.cfg
        rep_seed = sub_seed(cfg.seed, rep_index)
        s = generate_sample(cfg.dist, cfg.n, sub_seed(rep_seed, 0))
        mc_seed = sub_seed(rep_seed, 1)
        bs = block_structure(s)
        K = self.kcount
        if self.need_rad and self.kmax > 0:
            sups = rademacher_mc_interval_sups(bs, self.kmax, cfg.mc_draws, mc_seed)
        emp = np.empty(K)
        tru = np.empty(K)
        rad = np.empty(K)
        uhat = np.empty(K)
        shatter = np.empty(K)
        locc = np.empty(K)
        emp_star = np.empty(K)
        raw = np.zeros((len(cfg.kinds), K))
        structure = {"checked": 0, "erm_in": 0, "subset_in": 0, "rad_le": 0}
        erm_results = []
        rad_estimates = []
        for i, c in enumerate(cfg.hierarchy):
            pos = i + 1
            res = erm(c, s)
            erm_results.append(res)
            emp[i] = res.empirical_loss
            tru[i] = true_loss_of_regions(res.classifier.regions, cfg.dist)
            if c.family == "intervals":
                est = (
                    estimate_from_sups(sups[:, c.k - 1])
                    if self.need_rad
                    else estimate_from_sups(np.zeros(1))
                )
                count = interval_pattern_count(bs.num_blocks, c.k)
            else:
                # singleton class: the supremum is a centered sign average
                est = estimate_from_sups(np.zeros(1))
                count = 1
            rad_estimates.append(est)
            rad[i] = est.value
            shatter[i] = float(count)
            uhat[i] = u_hat(count, cfg.n, pos, self.options.profile)
            locc[i] = float(count)
            emp_star[i] = float(
                (self.star_clf[i].predict(s.x1d()) != s.labels).mean()
            )
        for j, kind in enumerate(cfg.kinds):
            for i, c in enumerate(cfg.hierarchy):
                pos = i + 1
                if kind == "vapnik":
                    raw[j, i] = self.vap[i]
                elif kind == "global":
                    raw[j, i] = global_terms(
                        rad_estimates[i], cfg.n, pos, cfg.gamma1, cfg.gamma2
                    )[0]
                elif kind == "simple":
                    raw[j, i] = simple_terms(emp[i], self.wc_log_2n[i], cfg.n, pos)[0]
                else:
                    raw[j, i] = self._localized(
                        c, s, erm_results[i], rad_estimates[i],
                        uhat[i], pos, i, locc, structure, mc_seed,
                    )
        clamp = np.minimum(raw, 1.0)
        scores = emp[None, :] + clamp
        sel = scores.argmin(axis=1)
        excess = tru[sel] - self.bayes
        hp_cut = (np.asarray(self.l_star) - self.bayes)[None, :] + 2.0 * clamp
        hp_viol = excess > hp_cut.min(axis=1)
        return {
            "emp": emp, "tru": tru, "rad": rad, "uhat": uhat,
            "shatter": shatter, "locc": locc, "raw": raw, "clamp": clamp,
            "sel": sel, "excess": excess, "hp_viol": hp_viol,
            "viol_erm": clamp <= (tru - emp)[None, :],
            "viol_star": clamp <= (emp_star - np.asarray(self.l_star))[None, :],
            "structure": structure,
        }

    def _localized(
        self, c, s, res, full_est, uh, pos, i, locc, structure, mc_seed
    ) -> float:
        thr = localization_threshold(res.empirical_loss, uh, self.options.profile)
        if thr >= 1.0 or c.family == "fixed":
            # nothing is excluded: reuse the shared full-class estimate (for
            # a singleton class the subclass always contains its only member)
            est = full_est
            structure["checked"] += 1
            structure["erm_in"] += bool(res.empirical_loss <= thr)
            structure["subset_in"] += 1
            structure["rad_le"] += 1
        else:
            est, loc, route = _localized_rademacher(
                c, s, res, uh, self.options, mc_seed
            )
            locc[i] = float(loc.subset_count)
            structure["checked"] += 1
            structure["erm_in"] += bool(res.empirical_loss <= thr)
            structure["subset_in"] += bool(loc.subset_count <= random_shatter(c, s))
            if route.startswith("exact"):
                full_exact = rademacher_exact(enumerate_error_vectors(c, s), s.n)
                ok = est.value <= full_exact.value + 1e-12
            elif route.startswith("interval-dp"):
                # the budgeted DP consumed the same per-draw signs as the
                # shared full pass, so domination holds draw by draw
                ok = est.value <= full_est.value + 1e-12
            else:
                ok = (
                    est.value
                    <= full_est.value + 3.0 * (est.std_error + full_est.std_error) + 1e-12
                )
            structure["rad_le"] += bool(ok)
        return localized_terms(
            est, res.empirical_loss, uh, self.cfg.n, pos, self.options.profile
        )[0]


# ---------------------------------------------------------------------------
# chunked execution


def _zero_acc(K: int, nk: int) -> dict:
    return {
        "emp_sum": np.zeros(K), "true_sum": np.zeros(K), "true_sq": np.zeros(K),
        "uhat_sum": np.zeros(K), "shatter_sum": np.zeros(K), "locc_sum": np.zeros(K),
        "rad_sum": np.zeros(K), "rad_sq": np.zeros(K),
        "raw_sum": np.zeros((nk, K)), "clamp_sum": np.zeros((nk, K)),
        "clamp_sq": np.zeros((nk, K)),
        "sel": np.zeros((nk, K), dtype=np.int64),
        "excess_sum": np.zeros(nk), "excess_sq": np.zeros(nk),
        "hp_viol": np.zeros(nk, dtype=np.int64),
        "viol_erm": np.zeros((nk, K), dtype=np.int64),
        "viol_star": np.zeros((nk, K), dtype=np.int64),
        "union_erm": np.zeros(nk, dtype=np.int64),
        "union_star": np.zeros(nk, dtype=np.int64),
        "structure": {"checked": 0, "erm_in": 0, "subset_in": 0, "rad_le": 0},
        "count": 0,
    }


def _chunk_worker(cfg: ExperimentConfig, start: int, stop: int, need_rad: bool = True) -> dict:
    engine = _Engine(cfg, need_rad)
    K, nk = engine.kcount, len(cfg.kinds)
    acc = _zero_acc(K, nk)
    for r in range(start, stop):
        out = engine.replicate(r)
        acc["emp_sum"] += out["emp"]
        acc["true_sum"] += out["tru"]
        acc["true_sq"] += out["tru"] ** 2
        acc["uhat_sum"] += out["uhat"]
        acc["shatter_sum"] += out["shatter"]
        acc["locc_sum"] += out["locc"]
        acc["rad_sum"] += out["rad"]
        acc["rad_sq"] += out["rad"] ** 2
        acc["raw_sum"] += out["raw"]
        acc["clamp_sum"] += out["clamp"]
        acc["clamp_sq"] += out["clamp"] ** 2
        for j in range(nk):
            acc["sel"][j, out["sel"][j]] += 1
        acc["excess_sum"] += out["excess"]
        acc["excess_sq"] += out["excess"] ** 2
        acc["hp_viol"] += out["hp_viol"]
        acc["viol_erm"] += out["viol_erm"]
        acc["viol_star"] += out["viol_star"]
        acc["union_erm"] += out["viol_erm"].any(axis=1)
        acc["union_star"] += out["viol_star"].any(axis=1)
        for key in acc["structure"]:
            acc["structure"][key] += out["structure"][key]
        acc["count"] += 1
    return acc


def _merge(total: dict, part: dict) -> None:
    for key, val in part.items():
        if key == "structure":
            for s_key in val:
                total["structure"][s_key] += val[s_key]
        elif key == "count":
            total["count"] += val
        else:
            total[key] += val


def _run_chunks(
    cfg: ExperimentConfig, workers: int, need_rad: bool = True
) -> tuple[dict, Exception | None]:
    """Fixed chunk grid over replicates; parent-side in-order reduction.

    Returns the accumulator over the chunk prefix before the first failure,
    plus that failure (None when everything succeeded).
    """
    engine_dims = (len(cfg.hierarchy), len(cfg.kinds))
    total = _zero_acc(*engine_dims)
    bounds = [
        (lo, min(lo + REPLICATE_CHUNK, cfg.reps))
        for lo in range(0, cfg.reps, REPLICATE_CHUNK)
    ]
    if workers <= 1:
        for lo, hi in bounds:
            try:
                part = _chunk_worker(cfg, lo, hi, need_rad)
            except Exception as exc:
                return total, exc
            _merge(total, part)
        return total, None
    with ProcessPoolExecutor(
        max_workers=workers, mp_context=get_context("fork")
    ) as pool:
        futures = [
            pool.submit(_chunk_worker, cfg, lo, hi, need_rad) for lo, hi in bounds
        ]
        for fut in futures:
            try:
                part = fut.result()
            except Exception as exc:
                for other in futures:
                    other.cancel()
                return total, exc
            _merge(total, part)
    return total, None


# ---------------------------------------------------------------------------
# report assembly


def _mean_se(total_sum: np.ndarray, total_sq: np.ndarray, reps: int):
    mean = total_sum / reps
    if reps < 2:
        return mean, np.full_like(mean, math.nan)
    var = np.maximum(total_sq - reps * mean**2, 0.0) / (reps - 1)
    return mean, np.sqrt(var / reps)


def _build_report(cfg: ExperimentConfig, acc: dict, partial: bool) -> ExperimentReport:
    reps = acc["count"]
    if reps == 0:
        raise ExperimentAborted(RuntimeError("no replicates completed"), None)
    engine = _Engine(cfg)
    K = engine.kcount
    bayes = engine.bayes
    mean_true, se_true = _mean_se(acc["true_sum"], acc["true_sq"], reps)
    mean_clamp, se_clamp = _mean_se(acc["clamp_sum"], acc["clamp_sq"], reps)
    mean_excess, se_excess = _mean_se(acc["excess_sum"], acc["excess_sq"], reps)
    mean_rad, se_rad = _mean_se(acc["rad_sum"], acc["rad_sq"], reps)
    summaries = []
    hp_bound = _HP_CONSTANT / cfg.n**2
    for j, kind in enumerate(cfg.kinds):
        add = _ORACLE_ADD[kind]
        bound = min(
            engine.l_star[i] - bayes + mean_clamp[j, i] for i in range(K)
        ) + add / cfg.n**2
        rows = tuple(
            ClassDiagnostics(
                k=i + 1,
                class_label=cfg.hierarchy[i].label,
                mean_emp_loss=float(acc["emp_sum"][i] / reps),
                mean_penalty_raw=float(acc["raw_sum"][j, i] / reps),
                mean_penalty_clamped=float(mean_clamp[j, i]),
                se_penalty_clamped=float(se_clamp[j, i]),
                mean_u_hat=float(acc["uhat_sum"][i] / reps),
                mean_subset_count=float(
                    (
                        acc["locc_sum"][i]
                        if kind == "localized"
                        else acc["shatter_sum"][i]
                    )
                    / reps
                ),
                selection_freq=float(acc["sel"][j, i] / reps),
                mean_true_loss=float(mean_true[i]),
                se_true_loss=float(se_true[i]),
            )
            for i in range(K)
        )
        summaries.append(
            KindSummary(
                kind=kind,
                mean_excess=float(mean_excess[j]),
                se_excess=float(se_excess[j]),
                oracle_bound=float(bound),
                oracle_add=add,
                hp_violations=int(acc["hp_viol"][j]),
                hp_bound=hp_bound,
                hp_vacuous=hp_bound >= 1.0,
                rows=rows,
            )
        )
    side_rows = []
    for i, c in enumerate(cfg.hierarchy):
        pos = i + 1
        # the marginal is continuous, so the shatter count is deterministic
        # and E log S is closed-form; the F-bar threshold then exceeds 1 and
        # the class-restricted average equals the full one
        e_log_s = (
            math.log(interval_pattern_count(cfg.n, c.k))
            if c.family == "intervals"
            else 0.0
        )
        ub = u_bar(e_log_s, cfg.n, pos)
        if 64.0 * engine.l_star[i] + 63.0 * ub < 1.0:
            raise ValueError(
                "F-bar threshold below 1; the restricted Rademacher average "
                "is not implemented for that regime"
            )
        eps = epsilon_k(cfg.n, pos)
        side = (
            8.0 * float(mean_rad[i])
            + 15.0 * eps
            + 16.0 * math.sqrt(engine.l_star[i] + ub) * math.sqrt(2.0 * eps)
        )
        side_rows.append(
            ExpectationSideRow(
                k=pos,
                l_star=engine.l_star[i],
                u_bar=ub,
                eps=eps,
                mean_rad=float(mean_rad[i]),
                se_rad=float(se_rad[i]),
                side=side,
            )
        )
    expectation_bound = min(r.l_star - bayes + r.side for r in side_rows)
    return ExperimentReport(
        n=cfg.n,
        reps=reps,
        seed=cfg.seed,
        mc_draws=cfg.mc_draws,
        profile_label=cfg.profile.label,
        bayes_risk=bayes,
        class_labels=tuple(c.label for c in cfg.hierarchy),
        l_star=tuple(engine.l_star),
        kinds=cfg.kinds,
        summaries=tuple(summaries),
        expectation_sides=tuple(side_rows),
        expectation_bound=expectation_bound,
        se_defined=reps >= 2,
        partial=partial,
    )


def run_oracle_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Replicated model-selection experiment over the hierarchy.

    Deterministic in cfg.seed for any worker count. If a replicate fails, the
    raised ExperimentAborted carries the report over the completed chunk
    prefix (or None when nothing completed).
    """
    acc, failure = _run_chunks(cfg, workers)
    if failure is not None:
        try:
            report = _build_report(cfg, acc, partial=True)
        except ExperimentAborted:
            report = None
        raise ExperimentAborted(failure, report) from failure
    return _build_report(cfg, acc, partial=False)


def run_lemma_check(
    cfg: ExperimentConfig, gamma: float, workers: int = 1
) -> tuple[TailCheckReport, TailCheckReport]:
    """Frequencies of the two penalty-hypothesis events, against gamma/(n^2 k^2).

    First report: the penalty fails to cover the ERM optimism,
    C_k <= (L - L-hat)(erm_k). Second: it fails to cover the class
    minimizer's pessimism, C_k <= (L-hat - L)(f_k*). Per-class frequencies
    sit in extras; the headline rate is the union over k versus the summed
    bound. Localization-structure facts observed along the way (ERM inside
    its subclass, subclass within the class, localized Rademacher average
    not above the full one) are tallied in extras["structure"].
    """
    if len(cfg.kinds) != 1:
        raise ValueError("lemma check wants exactly one penalty kind")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    # The Monte Carlo sign pass only feeds penalty assembly for the global and
    # localized kinds; the engine re-enables it when cfg.kinds demands it.
    acc, failure = _run_chunks(cfg, workers, need_rad=False)
    if failure is not None:
        raise ExperimentAborted(failure, None) from failure
    reps = acc["count"]
    K = len(cfg.hierarchy)
    per_k_bound = [gamma / (cfg.n**2 * (i + 1) ** 2) for i in range(K)]
    union_bound = min(sum(per_k_bound), 1.0)

    def build(side: str, union: int, per_k: np.ndarray) -> TailCheckReport:
        rate = union / reps
        se = math.sqrt(max(rate * (1 - rate), 0.0) / reps)
        per_k_rate = [int(v) / reps for v in per_k]
        per_k_pass = [
            per_k_rate[i]
            <= per_k_bound[i]
            + 3.0 * math.sqrt(max(per_k_rate[i] * (1 - per_k_rate[i]), 0.0) / reps)
            for i in range(K)
        ]
        passed = rate <= union_bound + 3.0 * se and all(per_k_pass)
        return TailCheckReport(
            proposition="2.1" if side == "erm" else "2.2",
            n=cfg.n,
            k=0,
            reps=reps,
            epsilon=0.0,
            violation_rate=rate,
            bound=union_bound,
            margin=union_bound - rate,
            passed=passed,
            side={"erm": "optimism-at-erm", "star": "pessimism-at-star"}[side],
            extras={
                "gamma": gamma,
                "kind": cfg.kinds[0],
                "per_k_rate": per_k_rate,
                "per_k_bound": per_k_bound,
                "per_k_pass": per_k_pass,
                "rate_se": se,
                "structure": dict(acc["structure"]),
            },
        )

    return (
        build("erm", int(acc["union_erm"][0]), acc["viol_erm"][0]),
        build("star", int(acc["union_star"][0]), acc["viol_star"][0]),
    )


# ---------------------------------------------------------------------------
# emission

_CSV_HEADER = (
    "penalty,k,mean_emp_loss,mean_penalty_raw,mean_penalty_clamped,mean_u_hat,"
    "mean_subset_count,selection_freq,mean_true_loss,se_true_loss,oracle_bound,"
    "violations,reps,seed"
)


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_report(report: ExperimentReport, path: str, format: str = "csv") -> None:
    """Write the report as CSV rows (one per penalty kind and class) or as an
    SVG with the excess-risk and penalty curves. Byte-identical for equal
    reports."""
    if format == "csv":
        lines = [_CSV_HEADER]
        for summary in report.summaries:
            for row in summary.rows:
                lines.append(
                    ",".join(
                        _csv_cell(v)
                        for v in (
                            summary.kind,
                            row.k,
                            row.mean_emp_loss,
                            row.mean_penalty_raw,
                            row.mean_penalty_clamped,
                            row.mean_u_hat,
                            row.mean_subset_count,
                            row.selection_freq,
                            row.mean_true_loss,
                            row.se_true_loss,
                            summary.oracle_bound,
                            summary.hp_violations,
                            report.reps,
                            report.seed,
                        )
                    )
                )
        payload = "\n".join(lines) + "\n"
        _write_text(path, payload)
    elif format == "svg":
        _write_svg(report, path)
    else:
        raise ValueError(f"unknown report format {format!r}")


def _write_text(path: str, payload: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
    except OSError as exc:
        raise RuntimeError(f"cannot write report to {path!r}: {exc}") from exc


def _write_svg(report: ExperimentReport, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    with plt.rc_context({"svg.hashsalt": "locpen"}):
        fig, (ax_risk, ax_pen) = plt.subplots(1, 2, figsize=(9.0, 3.6))
        ks = [row.k for row in report.summaries[0].rows]
        per_k_excess = [
            row.mean_true_loss - report.bayes_risk for row in report.summaries[0].rows
        ]
        ax_risk.plot(ks, per_k_excess, marker="o", color="0.3", label="ERM per class")
        for summary in report.summaries:
            ax_risk.axhline(
                summary.mean_excess, linestyle="--", linewidth=1.0,
                label=f"{summary.kind} selected",
            )
        ax_risk.set_xlabel("class index k")
        ax_risk.set_ylabel("excess risk")
        ax_risk.legend(fontsize=7)
        for summary in report.summaries:
            ax_pen.plot(
                ks,
                [row.mean_penalty_clamped for row in summary.rows],
                marker="o",
                label=summary.kind,
            )
        ax_pen.set_xlabel("class index k")
        ax_pen.set_ylabel("mean penalty (clamped)")
        ax_pen.legend(fontsize=7)
        fig.tight_layout()
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as exc:
            raise RuntimeError(f"cannot write report to {path!r}: {exc}") from exc
        finally:
            plt.close(fig)
