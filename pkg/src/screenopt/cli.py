"""Command-line front end.

Subcommands:
    validate   check a parameter file and the diagrams built from it
    segment    solve one (sex, period) segment and export its frontier
    pipeline   full multi-period run plus budget-swept strategy selection
    baseline   no-screening prevalence rollout

All outputs are deterministic: identical inputs produce identical bytes.
Every CSV starts with comment lines carrying the tool version and the
SHA-256 of the parameter file; the manifest carries them as JSON fields.

Exit codes: 0 success, 1 validation failure, 2 infeasible or over capacity,
3 internal cross-check mismatch.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .diagram import strategy_encoding, validate_diagram
from .diagram_io import dumps_canonical
from .errors import (
    CapacityError,
    InfeasibleBudgetError,
    IterationLimitError,
    OracleMismatchError,
    ParameterError,
)
from .phase1 import (
    StrategyHistory,
    baseline_trajectory,
    combined_total_prevalence,
    history_key,
    natural_progression_rollout,
    policy_cell,
    run_phase1,
    segment_problem,
    solve_frontier,
)
from .phase2 import budget_sweep, selection_problem_from_histories
from .screening import (
    CUTOFF,
    EXAM,
    INCENTIVE,
    INVITE,
    ParameterBundle,
    Segment,
    Sex,
    build_segment_diagram,
    load_parameters,
)

OBJECTIVE_COLUMNS = ("cost", "colonoscopy", "benign_found", "large_found",
                     "crc_found")


def default_params_path() -> Path:
    return Path(resources.files("screenopt").joinpath(
        "data/synthetic_default.json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="screenopt",
        description="Pareto-optimal multi-period screening strategies.",
    )
    parser.add_argument("--version", action="version",
                        version=f"screenopt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_out=True):
        p.add_argument("--params", type=Path, default=None,
                       help="parameter JSON file (default: shipped synthetic set)")
        if with_out:
            p.add_argument("--out", type=Path, required=True,
                           help="output directory")

    p_val = sub.add_parser("validate", help="validate a parameter file")
    add_common(p_val, with_out=False)

    p_seg = sub.add_parser("segment", help="solve one segment frontier")
    add_common(p_seg)
    p_seg.add_argument("--sex", choices=["F", "M"], required=True)
    p_seg.add_argument("--period", type=int, required=True,
                       help="screening period (1 = age 60); the prevalence is "
                            "the no-screening rollout to that period")
    _add_model_flags(p_seg)

    p_pipe = sub.add_parser("pipeline", help="full two-phase optimization")
    add_common(p_pipe)
    p_pipe.add_argument("--budgets", required=True,
                        help="comma-separated colonoscopy budgets, e.g. "
                             "8000,12000,16000,20000")
    p_pipe.add_argument("--periods", type=int, default=None,
                        help="number of screening periods (default: all)")
    _add_model_flags(p_pipe)

    p_base = sub.add_parser("baseline", help="no-screening prevalence rollout")
    add_common(p_base)
    p_base.add_argument("--periods", type=int, default=None)

    return parser


def _add_model_flags(p) -> None:
    p.add_argument("--objective-mask", default=None,
                   help="comma-separated subset of objectives to optimize "
                        f"(default: all of {','.join(OBJECTIVE_COLUMNS)})")
    p.add_argument("--fix-exam", action="store_true",
                   help="pin the examination decision to colonoscopy on contact")
    p.add_argument("--no-incentive", action="store_true",
                   help="disable the incentive decision")
    p.add_argument("--cross-check", action="store_true",
                   help="verify every frontier against the brute-force reference")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "segment":
            return _cmd_segment(args)
        if args.command == "pipeline":
            return _cmd_pipeline(args)
        if args.command == "baseline":
            return _cmd_baseline(args)
        raise AssertionError(args.command)
    except ParameterError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except (InfeasibleBudgetError, CapacityError, IterationLimitError) as exc:
        print(f"infeasible or over capacity: {exc}", file=sys.stderr)
        return 2
    except OracleMismatchError as exc:
        print(f"internal cross-check failed: {exc}", file=sys.stderr)
        return 3


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------

def _load(args) -> tuple[ParameterBundle, list[str], list[str], str]:
    path = args.params if args.params is not None else default_params_path()
    raw = Path(path).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    bundle, report = load_parameters(json.loads(raw.decode("utf-8")))
    bundle = _apply_flags(bundle, args)
    return bundle, report.defaults, report.warnings, digest


def _apply_flags(bundle: ParameterBundle, args) -> ParameterBundle:
    options = bundle.options
    if getattr(args, "fix_exam", False):
        options = dataclasses.replace(options, fix_exam_to_colonoscopy=True)
    if getattr(args, "no_incentive", False):
        options = dataclasses.replace(options, incentive_enabled=False)
    if options is not bundle.options:
        bundle = dataclasses.replace(bundle, options=options)
    return bundle


def _mask(args) -> list[str] | None:
    raw = getattr(args, "objective_mask", None)
    if raw is None:
        return None
    names = [part.strip() for part in raw.split(",") if part.strip()]
    for name in names:
        if name not in OBJECTIVE_COLUMNS:
            raise ValueError(f"unknown objective {name!r}; choose from "
                             f"{', '.join(OBJECTIVE_COLUMNS)}")
    if not names:
        raise ValueError("objective mask selects nothing")
    return names


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, digest: str, columns, rows) -> None:
    lines = [f"# tool: screenopt {__version__}",
             f"# input-sha256: {digest}",
             ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _rollout_prevalence(bundle: ParameterBundle, sex: Sex, period: int):
    """Starting prevalence of ``period`` under no screening."""
    rollout = natural_progression_rollout(
        bundle.starting_prevalence(sex),
        bundle.transitions[sex.value], period - 1)
    return rollout[-1]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_validate(args) -> int:
    bundle, defaults, warnings, digest = _load(args)
    print(f"input-sha256: {digest}")
    for line in defaults:
        print(f"default applied: {line}")
    for line in warnings:
        print(f"warning: {line}")

    failures = 0
    for sex in (Sex.F, Sex.M):
        for period in range(1, bundle.periods + 1):
            psi = _rollout_prevalence(bundle, sex, period)
            diagram = build_segment_diagram(Segment(sex, period), bundle, psi)
            for violation in validate_diagram(diagram):
                failures += 1
                print(f"sex={sex.value} period={period}: {violation}",
                      file=sys.stderr)
    if failures:
        print(f"{failures} diagram violations", file=sys.stderr)
        return 1
    print(f"ok: {2 * bundle.periods} segment diagrams validated")
    return 0


def _cmd_segment(args) -> int:
    bundle, _, _, digest = _load(args)
    if not (1 <= args.period <= bundle.periods):
        raise ValueError(f"period must be within 1..{bundle.periods}")
    sex = Sex(args.sex)
    segment = Segment(sex, args.period)
    psi = _rollout_prevalence(bundle, sex, args.period)
    problem = segment_problem(bundle, segment, psi, _mask(args))
    frontier = solve_frontier(problem, cross_check=args.cross_check,
                              label=f"for sex={sex.value} period={args.period}")

    args.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for point in frontier.points:
        encoding = strategy_encoding(problem.diagram, point.strategy)
        rows.append([encoding] + [point.objectives.by_name(name)
                                  for name in OBJECTIVE_COLUMNS])
    out = args.out / f"frontier_{sex.value}_{args.period}.csv"
    _write_csv(out, digest, ("strategy",) + OBJECTIVE_COLUMNS, rows)
    print(f"wrote {out} ({len(rows)} frontier points)")
    return 0


def _parse_budgets(raw: str) -> list[float]:
    try:
        budgets = [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"cannot parse budgets {raw!r}") from None
    if not budgets:
        raise ValueError("no budgets given")
    if any(b <= 0 for b in budgets):
        raise ValueError("budgets must be positive")
    return sorted(budgets)


def _cmd_pipeline(args) -> int:
    bundle, _, _, digest = _load(args)
    budgets = _parse_budgets(args.budgets)
    mask = _mask(args)
    periods = args.periods if args.periods is not None else bundle.periods

    histories = run_phase1(bundle, budget=max(budgets), periods=periods,
                           objective_mask=mask, cross_check=args.cross_check)
    cutoffs = bundle.effective_cutoffs()
    keys = {
        sex: _unique_keys([history_key(h, cutoffs) for h in histories[sex]])
        for sex in (Sex.F, Sex.M)
    }
    problem = selection_problem_from_histories(bundle, histories, keys,
                                               budget=max(budgets))
    results = budget_sweep(problem, budgets)

    args.out.mkdir(parents=True, exist_ok=True)
    _write_manifest(args, bundle, budgets, periods, digest)
    for sex in (Sex.F, Sex.M):
        _write_histories(args.out, digest, sex, histories[sex], keys[sex],
                         cutoffs, periods)
    _write_selection(args.out, digest, results, keys, problem)
    _write_policy_table(args.out, digest, results, histories, keys, cutoffs,
                        periods)
    _write_series(args.out, digest, bundle, results, histories, periods)
    print(f"wrote pipeline outputs to {args.out}")
    return 0


def _unique_keys(keys: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for key in keys:
        if key in seen:
            seen[key] += 1
            out.append(f"{key}#{seen[key]}")
        else:
            seen[key] = 0
            out.append(key)
    return out


def _write_manifest(args, bundle, budgets, periods, digest) -> None:
    manifest = {
        "tool": "screenopt",
        "version": __version__,
        "input_sha256": digest,
        "params": str(args.params) if args.params is not None else "builtin",
        "budgets": budgets,
        "periods": periods,
        "objective_mask": _mask(args) or list(OBJECTIVE_COLUMNS),
        "fix_exam_to_colonoscopy": bundle.options.fix_exam_to_colonoscopy,
        "incentive_enabled": bundle.options.incentive_enabled,
        "cutoffs": list(bundle.effective_cutoffs()),
        "cross_check": bool(args.cross_check),
    }
    (args.out / "manifest.json").write_text(dumps_canonical(manifest),
                                            encoding="utf-8")


def _write_histories(out: Path, digest: str, sex: Sex,
                     histories: list[StrategyHistory], keys: list[str],
                     cutoffs, periods: int) -> None:
    columns = ["index", "key"]
    for k in range(1, periods + 1):
        columns += [f"cutoff_{k}", f"incentive_{k}", f"invite_{k}", f"exam_{k}"]
    for k in range(1, periods + 1):
        columns += [f"normal_{k}", f"benign_{k}", f"large_{k}", f"crc_{k}"]
    columns += ["cumulative_colonoscopies", "total_cancer_prevalence",
                "total_cost"]

    rows = []
    for i, (hist, key) in enumerate(zip(histories, keys)):
        row: list = [i, key]
        for rec in hist.records:
            s = rec.strategy
            row += [
                cutoffs[s.rules[CUTOFF].rule[()]],
                "yes" if s.rules[INCENTIVE].rule[()] == 1 else "no",
                "yes" if s.rules[INVITE].rule[()] == 1 else "no",
                "colonoscopy" if s.rules[EXAM].rule[(1, 1)] == 1 else "none",
            ]
        for rec in hist.records:
            psi = rec.updated_prevalence
            row += [psi.normal, psi.benign, psi.large, psi.crc]
        row += [hist.cumulative_colonoscopies, hist.total_prevalence.crc,
                hist.cumulative_cost]
        rows.append(row)
    _write_csv(out / f"histories_{sex.value}.csv", digest, columns, rows)


def _write_selection(out: Path, digest: str, results, keys, problem) -> None:
    columns = ("budget", "female_index", "female_key", "male_index",
               "male_key", "cancer_prevalence", "total_colonoscopies",
               "total_cost", "feasible")
    rows = []
    for res in results:
        rows.append([
            res.budget,
            res.female_index, problem.female[res.female_index].key,
            res.male_index, problem.male[res.male_index].key,
            res.cancer_share, res.total_colonoscopies, res.total_cost,
            res.feasible,
        ])
    _write_csv(out / "selection.csv", digest, columns, rows)


def _write_policy_table(out: Path, digest: str, results, histories, keys,
                        cutoffs, periods: int) -> None:
    columns = ["case", "budget", "sex"] + [
        f"age_{Segment(Sex.F, k).age}" for k in range(1, periods + 1)]
    rows = []
    for case, res in enumerate(results, start=1):
        for sex, index in ((Sex.F, res.female_index), (Sex.M, res.male_index)):
            hist = histories[sex][index]
            cells = [policy_cell(r.strategy, cutoffs) for r in hist.records]
            rows.append([f"case{case}", res.budget, sex.value] + cells)
    _write_csv(out / "policy_table.csv", digest, columns, rows)


def _write_series(out: Path, digest: str, bundle, results, histories,
                  periods: int) -> None:
    columns = ("case", "budget", "sex", "round", "total_cancer_prevalence")
    rows = []

    base = {sex: baseline_trajectory(bundle, sex, periods)
            for sex in (Sex.F, Sex.M)}
    for k in range(1, periods + 1):
        for sex in (Sex.F, Sex.M):
            rows.append(["baseline", "", sex.value, k,
                         base[sex][k - 1].total_prevalence.crc])
        rows.append(["baseline", "", "combined", k,
                     _combined(bundle, base[Sex.F][k - 1].total_prevalence,
                               base[Sex.M][k - 1].total_prevalence, k)])

    for case, res in enumerate(results, start=1):
        chosen = {Sex.F: histories[Sex.F][res.female_index],
                  Sex.M: histories[Sex.M][res.male_index]}
        running = {sex: _running_totals(bundle, sex, chosen[sex])
                   for sex in (Sex.F, Sex.M)}
        for k in range(1, periods + 1):
            for sex in (Sex.F, Sex.M):
                rows.append([f"case{case}", res.budget, sex.value, k,
                             running[sex][k - 1].crc])
            rows.append([f"case{case}", res.budget, "combined", k,
                         _combined(bundle, running[Sex.F][k - 1],
                                   running[Sex.M][k - 1], k)])
    _write_csv(out / "prevalence_series.csv", digest, columns, rows)


def _running_totals(bundle, sex: Sex, hist: StrategyHistory):
    totals = []
    total = None
    weight = 0.0
    for rec in hist.records:
        cohort = bundle.cohort_size(Segment(sex, rec.period))
        total = combined_total_prevalence(total, weight,
                                          rec.updated_prevalence, cohort)
        weight += cohort
        totals.append(total)
    return totals


def _combined(bundle, psi_f, psi_m, k: int) -> float:
    wf = bundle.total_population(Sex.F, periods=k)
    wm = bundle.total_population(Sex.M, periods=k)
    return (psi_f.crc * wf + psi_m.crc * wm) / (wf + wm)


def _cmd_baseline(args) -> int:
    bundle, _, _, digest = _load(args)
    periods = args.periods if args.periods is not None else bundle.periods
    if not (1 <= periods <= bundle.periods):
        raise ValueError(f"periods must be within 1..{bundle.periods}")
    args.out.mkdir(parents=True, exist_ok=True)
    columns = ("sex", "period", "age",
               "start_normal", "start_benign", "start_large", "start_crc",
               "normal", "benign", "large", "crc", "total_cancer_prevalence")
    rows = []
    for sex in (Sex.F, Sex.M):
        for entry in baseline_trajectory(bundle, sex, periods):
            start = entry.start_prevalence
            psi = entry.updated_prevalence
            rows.append([
                sex.value, entry.period, Segment(sex, entry.period).age,
                start.normal, start.benign, start.large, start.crc,
                psi.normal, psi.benign, psi.large, psi.crc,
                entry.total_prevalence.crc,
            ])
    out = args.out / "baseline.csv"
    _write_csv(out, digest, columns, rows)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
