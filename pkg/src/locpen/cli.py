"""Command-line front end: select, penalties, experiment, concentration."""

from __future__ import annotations

import argparse
import sys

from .classes import ModelClass, parse_class_token, parse_hierarchy
from .complexity import ConstantProfile
from .concentration import (
    TailCheckReport,
    check_rademacher_concentration,
    check_relative_vc,
    check_shatter_concentration,
    check_symmetrization_and_massart,
    check_talagrand,
)
from .config import load_experiment, parse_intervals
from .data import NoisyRegionDistribution, read_sample_csv
from .harness import emit_report, run_oracle_experiment
from .penalties import (
    KINDS,
    PenaltyOptions,
    SelectModelError,
    compute_penalty,
    select_model,
)

_CONC_HEADER = "proposition,side,n,k,reps,epsilon,violation_rate,bound,margin,passed"


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _penalty_options(args) -> PenaltyOptions:
    return PenaltyOptions(
        gamma=args.gamma,
        gamma1=args.gamma1,
        gamma2=args.gamma2,
        mc_draws=args.mc_draws,
        seed=args.seed,
        profile=ConstantProfile.parse(args.profile),
    )


def _regions_text(classifier) -> str:
    regions = getattr(classifier, "regions", None)
    if regions is None:
        return repr(classifier)
    if not regions:
        return "(empty set)"
    return " u ".join(f"[{_fmt(a)}, {_fmt(b)}]" for a, b in regions)


def _cmd_select(args) -> int:
    sample = read_sample_csv(args.data)
    hierarchy = parse_hierarchy(args.classes)
    options = _penalty_options(args)
    try:
        result = select_model(hierarchy, sample, args.penalty, options)
    except SelectModelError as exc:
        for row in exc.partial_table:
            print(_score_line(row, chosen=False))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{'':2s}{'k':>2s}  {'class':14s}{'emp_loss':>10s}{'penalty':>10s}{'score':>10s}")
    for row in result.table:
        print(_score_line(row, chosen=row.k == result.chosen_k))
    print(
        f"chosen k = {result.chosen_k}, "
        f"classifier: {_regions_text(result.chosen_classifier)}"
    )
    return 0


def _score_line(row, chosen: bool) -> str:
    marker = "* " if chosen else "  "
    return (
        f"{marker}{row.k:>2d}  {row.class_label:14s}"
        f"{row.emp_loss:>10.5f}{row.penalty.value:>10.5f}{row.score:>10.5f}"
    )


def _cmd_penalties(args) -> int:
    sample = read_sample_csv(args.data)
    hierarchy = parse_hierarchy(args.classes)
    options = _penalty_options(args)
    kinds = KINDS if args.all else (args.penalty,)
    print(f"{'penalty':11s}{'k':>3s}  {'class':14s}{'raw':>12s}{'clamped':>12s}  details")
    for kind in kinds:
        for k, c in enumerate(hierarchy, start=1):
            breakdown = compute_penalty(kind, c, sample, k, options)
            details = _details(breakdown.terms)
            print(
                f"{kind:11s}{k:>3d}  {c.label:14s}"
                f"{breakdown.raw_value:>12.6f}{breakdown.value:>12.6f}  {details}"
            )
    return 0


_DETAIL_KEYS = (
    "rademacher", "u_hat", "threshold", "subset_count", "rate",
    "log_shatter_2n", "erm_loss",
)


def _details(terms: dict) -> str:
    parts = []
    for key in _DETAIL_KEYS:
        if key in terms:
            value = terms[key]
            parts.append(f"{key}={_fmt(value) if isinstance(value, float) else value}")
    return " ".join(parts)


def _cmd_experiment(args) -> int:
    cfg, workers = load_experiment(args.config)
    if args.workers is not None:
        workers = args.workers
    report = run_oracle_experiment(cfg, workers=workers)
    emit_report(report, args.out, "csv")
    if args.svg:
        emit_report(report, args.svg, "svg")
    print(
        f"n={report.n} reps={report.reps} seed={report.seed} "
        f"bayes={_fmt(report.bayes_risk)} profile={report.profile_label}"
    )
    for s in report.summaries:
        status = "vacuous" if s.hp_vacuous else f"bound {_fmt(s.hp_bound)}"
        print(
            f"{s.kind:10s} excess {_fmt(s.mean_excess)} (se {_fmt(s.se_excess)})"
            f"  oracle bound {_fmt(s.oracle_bound)}"
            f"  hp violations {s.hp_violations}/{report.reps} ({status})"
        )
    print(f"report written to {args.out}" + (f" and {args.svg}" if args.svg else ""))
    return 0


def _class_for(token: str, dist: NoisyRegionDistribution) -> ModelClass:
    if token.strip() == "fixed":
        return ModelClass("fixed", regions=dist.intervals)
    return parse_class_token(token)


def _cmd_concentration(args) -> int:
    dist = NoisyRegionDistribution(parse_intervals(args.intervals), args.eta)
    c = _class_for(args.cls, dist)
    if args.prop == "3.2":
        reports = check_relative_vc(dist, c, args.n, args.eps, args.reps, args.seed)
    elif args.prop == "3.3":
        reports = check_shatter_concentration(
            dist, c, args.n, args.eps, args.reps, args.seed, grid=args.grid
        )
    elif args.prop == "4.4":
        reports = check_rademacher_concentration(
            dist, c, args.n, args.eps, args.reps, args.seed
        )
    elif args.prop == "4.5":
        reports = (check_talagrand(dist, c, args.n, args.eps, args.reps, args.seed),)
    else:
        reports = check_symmetrization_and_massart(
            dist, c, args.n, args.reps, args.seed
        )
    if args.out:
        _write_tail_csv(reports, args.out)
    for rep in reports:
        print(_tail_line(rep))
    return 0 if all(rep.passed for rep in reports) else 1


def _tail_line(rep: TailCheckReport) -> str:
    side = f" [{rep.side}]" if rep.side else ""
    return (
        f"prop {rep.proposition}{side} n={rep.n} k={rep.k} reps={rep.reps} "
        f"eps={_fmt(rep.epsilon)}: rate {_fmt(rep.violation_rate)} vs bound "
        f"{_fmt(rep.bound)} (margin {_fmt(rep.margin)}) -> "
        f"{'pass' if rep.passed else 'FAIL'}"
    )


def _write_tail_csv(reports, path: str) -> None:
    lines = [_CONC_HEADER]
    for rep in reports:
        lines.append(
            ",".join(
                str(v) if not isinstance(v, float) else repr(v)
                for v in (
                    rep.proposition, rep.side, rep.n, rep.k, rep.reps,
                    rep.epsilon, rep.violation_rate, rep.bound, rep.margin,
                    rep.passed,
                )
            )
        )
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise RuntimeError(f"cannot write report to {path!r}: {exc}") from exc


def _add_penalty_knobs(sub, with_kind: bool) -> None:
    if with_kind:
        sub.add_argument("--penalty", choices=KINDS, default="localized")
    sub.add_argument("--mc-draws", dest="mc_draws", type=int, default=10_000)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--gamma", type=float, default=1.0)
    sub.add_argument("--gamma1", type=float, default=2.0)
    sub.add_argument("--gamma2", type=float, default=1.0)
    sub.add_argument("--profile", default="paper")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="locpen",
        description="Data-dependent complexity penalties for interval-class model selection.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_select = subs.add_parser("select", help="penalized model selection on a dataset")
    p_select.add_argument("--data", required=True)
    p_select.add_argument("--classes", required=True)
    _add_penalty_knobs(p_select, with_kind=True)
    p_select.set_defaults(func=_cmd_select)

    p_pen = subs.add_parser("penalties", help="per-class penalty breakdowns")
    p_pen.add_argument("--data", required=True)
    p_pen.add_argument("--classes", required=True)
    p_pen.add_argument("--all", action="store_true", help="all four penalty kinds")
    _add_penalty_knobs(p_pen, with_kind=True)
    p_pen.set_defaults(func=_cmd_penalties)

    p_exp = subs.add_parser("experiment", help="replicated oracle-inequality experiment")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--svg", default=None)
    p_exp.add_argument("--workers", type=int, default=None)
    p_exp.set_defaults(func=_cmd_experiment)

    p_conc = subs.add_parser("concentration", help="tail and expectation bound suites")
    p_conc.add_argument("--prop", required=True, choices=("3.2", "3.3", "4.4", "4.5", "4.6"))
    p_conc.add_argument("--n", type=int, required=True)
    p_conc.add_argument("--eps", type=float, default=0.05)
    p_conc.add_argument("--reps", type=int, required=True)
    p_conc.add_argument("--seed", type=int, default=0)
    p_conc.add_argument("--class", dest="cls", default="intervals:1")
    p_conc.add_argument("--out", default=None)
    p_conc.add_argument("--intervals", default="0.2-0.4, 0.6-0.8")
    p_conc.add_argument("--eta", type=float, default=0.1)
    p_conc.add_argument("--grid", type=int, default=None,
                        help="snap points to an equispaced grid (prop 3.3)")
    p_conc.set_defaults(func=_cmd_concentration)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
