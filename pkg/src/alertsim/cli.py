"""Command-line interface: ``alertsim <command> --help`` lists each command's flags."""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import estimators
from .core import ConfusionCounts, EvalConfig, Strategy
from .evaluators import evaluate
from .io import (
    IngestError, load_config, load_model, model_to_json, pretty_table, read_any_cohort,
    save_model, threshold_policy, write_cohort, write_report,
)
from .risk_model import AlertPolicy, ConvergenceError, FitConfig, apply_policy_silent
from .simulator import DynamicsConfig, InterventionKind, InterventionSpec, calibrate, generate_cohort
from .study import (
    TRAIN_STREAM, TRIAL_TABLE_COLUMNS, StudyConfig, paired_trial, run_study, train_model, trial_table,
)

METHODS = {"aggregated": Strategy.AGGREGATED_TIME, "fixed": Strategy.FIXED_TIME,
           "first": Strategy.FIRST_ALERT}


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def probability(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not (0.0 < v < 1.0):
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {v}")
    return v


def threshold_list(text: str) -> tuple[float, ...]:
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("need at least one threshold")
    return tuple(probability(p.strip()) for p in parts)


def float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _add_dynamics(p: argparse.ArgumentParser):
    d = DynamicsConfig()
    p.add_argument("--horizon", type=positive_int, default=d.horizon, help="timepoints per patient")
    p.add_argument("--propulsion", type=float, default=d.propulsion,
                   help="constant rightward force per step")
    p.add_argument("--wind-sd", type=float, default=d.wind_sd, help="sd of the Gaussian gusts")
    p.add_argument("--boundary", type=float, default=d.outcome_boundary,
                   help="position beyond which the outcome occurs")


def _add_format(p: argparse.ArgumentParser, default: str = "pretty"):
    p.add_argument("--format", choices=("pretty", "csv", "json"), default=default,
                   help="output format (default: %(default)s)")
    p.add_argument("--out", type=Path, help="write here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alertsim",
        description="Simulate patients, train a risk model, evaluate alert policies "
                    "retrospectively, and run simulated trials.")
    parser.add_argument("--config", type=Path,
                        help="flat key = value file supplying defaults for the command's flags")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", help="write a silent simulated cohort as CSV")
    p.add_argument("--patients", type=positive_int, default=500, help="number of patients")
    p.add_argument("--seed", type=nonneg_int, default=0, help="base seed")
    p.add_argument("--kind", choices=("full", "scores"), default="full",
                   help="full covariate file, or a score stream (needs --model)")
    p.add_argument("--model", type=Path, help="model JSON used to score patients")
    p.add_argument("--out", type=Path, help="output CSV path (stdout if omitted)")
    _add_dynamics(p)

    p = sub.add_parser("train", help="fit the logistic risk model on a simulated cohort")
    p.add_argument("--data", type=Path, help="full cohort CSV from 'simulate'")
    p.add_argument("--lookahead", type=positive_int, default=5,
                   help="label = outcome within this many timepoints")
    p.add_argument("--l2", type=float, default=1e-4, help="ridge penalty")
    p.add_argument("--out", type=Path, help="model JSON path (stdout if omitted)")

    p = sub.add_parser("evaluate", help="confusion counts for one evaluation strategy")
    p.add_argument("--data", type=Path, help="cohort CSV or score stream CSV")
    p.add_argument("--model", type=Path,
                   help="model JSON; omit to threshold the scores stored in --data")
    p.add_argument("--threshold", type=threshold_list,
                   help="alert threshold, or a comma-separated list")
    p.add_argument("--method", choices=tuple(METHODS), help="evaluation strategy")
    p.add_argument("--lookahead", type=positive_int, help="window for aggregated/fixed truth")
    p.add_argument("--t-star", type=nonneg_int, help="evaluation time for the fixed method")
    p.add_argument("--force-aggregated-estimates", action="store_true",
                   help="print outcome and workload estimates from aggregated-time counts anyway")
    _add_format(p)

    p = sub.add_parser("trial", help="simulated multi-arm trial of threshold policies")
    p.add_argument("--thresholds", type=threshold_list, default=(0.2, 0.4, 0.6, 0.8),
                   help="comma-separated thresholds, one arm each")
    p.add_argument("--n-per-arm", type=positive_int, default=1000, help="patients per arm")
    p.add_argument("--seed", type=nonneg_int, default=0, help="base seed")
    p.add_argument("--intervention", choices=[k.value for k in InterventionKind], default="force",
                   help="what an alert does to the patient")
    p.add_argument("--magnitude", type=float, default=0.2, help="leftward force on alert")
    p.add_argument("--paired", action=argparse.BooleanOptionalAction, default=True,
                   help="arms share patient seeds (default: paired)")
    p.add_argument("--model", type=Path,
                   help="model JSON; omit to train one on 500 simulated patients")
    p.add_argument("--lookahead", type=positive_int, default=5,
                   help="lookahead for the model trained when --model is omitted")
    _add_dynamics(p)
    _add_format(p)

    p = sub.add_parser("reproduce-paper",
                       help="full study: train, evaluate, trial, and invariant checks")
    p.add_argument("--seed", type=nonneg_int, default=0, help="base seed")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--n-per-arm", type=positive_int, default=1000, help="patients per trial arm")
    p.add_argument("--replicates", type=nonneg_int, default=50,
                   help="replicate trials for the bootstrap bound check (0 to skip)")
    p.add_argument("--replicate-n-per-arm", type=positive_int, default=500,
                   help="patients per arm in each replicate")

    p = sub.add_parser("calibrate", help="silent outcome rates over a parameter grid")
    p.add_argument("--propulsions", type=float_list, default=(0.002, 0.005, 0.01, 0.02))
    p.add_argument("--wind-sds", type=float_list, default=(0.05, 0.1, 0.2, 0.35))
    p.add_argument("--patients", type=positive_int, default=500)
    p.add_argument("--seed", type=nonneg_int, default=0)
    p.add_argument("--horizon", type=positive_int, default=20)
    _add_format(p)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return action.choices[name]


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _apply_config(parser, argv, args) -> argparse.Namespace:
    """Reparse with config-file values as defaults, so explicit flags win."""
    sp = _subparser(parser, args.command)
    actions = {a.dest: a for a in sp._actions if a.dest != "help"}
    try:
        values = load_config(args.config)
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    defaults = {}
    for key, raw in values.items():
        if key not in actions:
            parser.error(f"config key {key!r} is not an option of {args.command}")
        action = actions[key]
        if isinstance(action, (argparse._StoreTrueAction, argparse.BooleanOptionalAction)):
            low = raw.lower()
            if low not in _TRUE | _FALSE:
                parser.error(f"config key {key!r} needs a boolean, got {raw!r}")
            defaults[key] = low in _TRUE
        else:
            defaults[key] = raw  # argparse runs string defaults through the option's type
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def _require(parser, args, *names):
    missing = ["--" + n.replace("_", "-") for n in names if getattr(args, n) is None]
    if missing:
        parser.error(f"{args.command}: missing required {', '.join(missing)}")


def _emit(data: bytes, out: Optional[Path]):
    if out is None:
        sys.stdout.write(data.decode())
    else:
        out.write_bytes(data)


def _dynamics(args) -> DynamicsConfig:
    return DynamicsConfig(propulsion=args.propulsion, wind_sd=args.wind_sd,
                          outcome_boundary=args.boundary, horizon=args.horizon)


def cmd_simulate(args, parser) -> int:
    policy = None
    if args.kind == "scores":
        _require(parser, args, "model")
        model, thr = load_model(args.model)
        policy = AlertPolicy(model, thr if thr is not None else 0.5)
    cohort = generate_cohort(args.patients, args.seed, _dynamics(args))
    if policy is not None:
        cohort = apply_policy_silent(policy, cohort)
    text = write_cohort(cohort, kind=args.kind)
    _emit(text.encode(), args.out)
    return 0


def cmd_train(args, parser) -> int:
    _require(parser, args, "data")
    cohort = read_any_cohort(args.data)
    model = train_model(cohort, args.lookahead, FitConfig(l2_penalty=args.l2))
    _emit(model_to_json(model).encode(), args.out)
    return 0


def _estimate_lines(counts: ConfusionCounts, force: bool) -> list[str]:
    th = counts.threshold
    if counts.strategy is Strategy.AGGREGATED_TIME:
        if not force:
            return []
        print(f"warning: {estimators.AGGREGATED_OBJECTION}", file=sys.stderr)
    where = {Strategy.FIXED_TIME: " at t_star", Strategy.FIRST_ALERT: "",
             Strategy.AGGREGATED_TIME: " (aggregated, not meaningful)"}[counts.strategy]
    tp = estimators.prevented_upper_bound(counts, allow_aggregated=force)
    load = estimators.workload_estimate(counts, allow_aggregated=force)
    return [f"threshold {th:g}: max preventable (upper bound){where}: {tp}",
            f"threshold {th:g}: expected alerts{where}: {load}"]


def cmd_evaluate(args, parser) -> int:
    _require(parser, args, "data", "threshold", "method")
    strategy = METHODS[args.method]
    if strategy is Strategy.AGGREGATED_TIME and args.lookahead is None:
        parser.error("--method aggregated needs --lookahead")
    if strategy is Strategy.FIXED_TIME and args.t_star is None:
        parser.error("--method fixed needs --t-star")
    if strategy is Strategy.FIRST_ALERT and args.lookahead is not None:
        parser.error("--method first takes no --lookahead")
    cohort = read_any_cohort(args.data)
    model = load_model(args.model)[0] if args.model is not None else None
    rows = []
    for th in args.threshold:
        policy = AlertPolicy(model, th) if model is not None else threshold_policy(th)
        config = EvalConfig(strategy, lookahead=args.lookahead, t_star=args.t_star, threshold=th)
        rows.append(evaluate(cohort, policy, config))
    _emit(write_report(rows, args.format), args.out)
    if strategy is Strategy.AGGREGATED_TIME and not args.force_aggregated_estimates:
        print("note: no outcome or workload estimates for aggregated-time counts "
              "(use --force-aggregated-estimates to print them anyway)", file=sys.stderr)
    lines = [ln for c in rows for ln in _estimate_lines(c, args.force_aggregated_estimates)]
    if lines:
        print("\n".join(lines), file=sys.stderr if args.format != "pretty" else sys.stdout)
    return 0


def _trial_bytes(rows, fmt: str, extra: dict) -> bytes:
    if fmt == "json":
        doc = {"schema_version": 1, "kind": "trial_table", **extra,
               "rows": [dict(zip(TRIAL_TABLE_COLUMNS, (r.label, r.prevented, r.alerts,
                                                       r.first_alert_tp, r.first_alert_positives)))
                        for r in rows]}
        return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()
    table = [(r.label, r.prevented, r.alerts, r.first_alert_tp, r.first_alert_positives)
             for r in rows]
    if fmt == "csv":
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRIAL_TABLE_COLUMNS)
        w.writerows(table)
        return buf.getvalue().encode()
    header = ("Threshold", "Prevented Outcomes", "Alerts", "First-Alert TP",
              "First-Alert Positives")
    return pretty_table(header, [tuple(map(str, r)) for r in table]).encode()


def cmd_trial(args, parser) -> int:
    dyn = _dynamics(args)
    if args.model is not None:
        model = load_model(args.model)[0]
    else:
        model = train_model(generate_cohort(500, args.seed, dyn, stream=TRAIN_STREAM), args.lookahead)
    spec = InterventionSpec(InterventionKind(args.intervention), args.magnitude)
    result, silent = paired_trial(model, args.thresholds, args.n_per_arm, args.seed, dyn, spec,
                                  args.paired)
    rows = trial_table(result, silent)
    extra = {"paired": args.paired, "intervention": args.intervention,
             "n_per_arm": args.n_per_arm, "seed": args.seed}
    _emit(_trial_bytes(rows, args.format, extra), args.out)
    return 0


def cmd_reproduce(args, parser) -> int:
    _require(parser, args, "out")
    config = StudyConfig(seed=args.seed, n_per_arm=args.n_per_arm, replicates=args.replicates,
                         replicate_n_per_arm=args.replicate_n_per_arm)
    result = run_study(config)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    save_model(result.model, out / "model.json")
    (out / "evaluation.csv").write_bytes(write_report(result.evaluation, "csv"))
    (out / "evaluation.txt").write_bytes(write_report(result.evaluation, "pretty"))
    (out / "trial.csv").write_bytes(_trial_bytes(result.trial_rows, "csv", {}))
    (out / "trial.txt").write_bytes(_trial_bytes(result.trial_rows, "pretty", {}))
    (out / "trial.json").write_bytes(write_report(result.trial, "json"))
    checks = {"ok": result.ok, "checks": [c.to_dict() for c in result.checks]}
    (out / "checks.json").write_text(json.dumps(checks, indent=2, sort_keys=True) + "\n")
    lines = [f"{'PASS' if c.holds else 'FAIL'}  {c.name}"
             + ("" if c.threshold is None else f" @ {c.threshold:g}") + f": {c.detail}"
             for c in result.checks]
    summary = "\n".join(lines) + "\n"
    (out / "checks.txt").write_text(summary)
    sys.stdout.write(write_report(result.evaluation, "pretty").decode() + "\n")
    sys.stdout.write(_trial_bytes(result.trial_rows, "pretty", {}).decode() + "\n")
    sys.stdout.write(summary)
    if not result.ok:
        print("invariant violations found", file=sys.stderr)
        return 1
    return 0


def cmd_calibrate(args, parser) -> int:
    rows = calibrate(args.propulsions, args.wind_sds, args.patients, args.seed, args.horizon)
    if args.format == "json":
        data = (json.dumps(rows, indent=2) + "\n").encode()
    elif args.format == "csv":
        buf = _io.StringIO()
        w = csv.DictWriter(buf, fieldnames=("propulsion", "wind_sd", "outcome_rate"),
                           lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        data = buf.getvalue().encode()
    else:
        data = pretty_table(("Propulsion", "Wind SD", "Outcome Rate"),
                            [(f"{r['propulsion']:g}", f"{r['wind_sd']:g}",
                              f"{r['outcome_rate']:.3f}") for r in rows]).encode()
    _emit(data, args.out)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "trial": cmd_trial,
    "reproduce-paper": cmd_reproduce,
    "calibrate": cmd_calibrate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        args = _apply_config(parser, argv, args)
    try:
        return COMMANDS[args.command](args, parser)
    except IngestError as exc:
        print(f"error: {getattr(args, 'data', None)}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
