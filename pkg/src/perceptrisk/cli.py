"""Command-line front end.

Subcommands::

    perceptrisk estimate --beliefs traj.csv         # Dirichlet fit per interval
    perceptrisk risk --alpha 5,2,1,...               # CVaR risk profile
    perceptrisk simulate --config run.toml --out d   # trajectories + summary tables
    perceptrisk verify                               # oracle cross-checks

Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import FORMATS, RunConfig, load_belief_csv, load_config
from .cost import UNIT, CostMatrix, load_cost_csv
from .dirichlet import BeliefBatch, DirichletParams, estimate_mle, exceedance_probs
from .errors import NumericalError, PerceptRiskError, ValidationError
from .risk import AccumulatedRiskState, accumulate, risk_profile
from .scenario import (
    analyze_interval,
    compare_outputs,
    delay_support,
    eta_sweep,
    run_trajectory,
    run_trials,
    _quiet,
)
from .verify import run_suite

log = logging.getLogger("perceptrisk")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors share the validation exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat TOML run configuration")
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("--trials", type=int, help="number of simulated trajectories")
    common.add_argument("--epsilon", type=float, help="CVaR tail mass in (0, 1]")
    common.add_argument("--mu", type=float, help="discount factor in (0, 1)")
    common.add_argument("--eta", type=float, help="decision threshold (k)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--format", choices=FORMATS, help="report format")
    common.add_argument("--workers", type=int, help="worker threads for trials")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="perceptrisk", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", parents=[common], help="fit a Dirichlet to each interval")
    p.add_argument("--beliefs", type=Path, help="belief CSV (t,p_<label>,...)")
    p.add_argument("--tau", type=float, help="interval length (default T / intervals)")

    p = sub.add_parser("risk", parents=[common], help="CVaR risk profile per interval")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--alpha", type=_floats, help="comma-separated concentration vector")
    src.add_argument("--beliefs", type=Path, help="belief CSV (t,p_<label>,...)")
    p.add_argument("--costs", type=Path, help="cost CSV (default: configured cost matrix)")
    p.add_argument("--tau", type=float, help="interval length (default T / intervals)")
    p.add_argument("--accumulate", type=float, metavar="MU",
                   help="also stream the discounted accumulated risk with this factor")

    p = sub.add_parser("simulate", parents=[common], help="run the configured experiments")
    p.add_argument("--sweep-trials", type=int, help="trials per accuracy sweep point")

    p = sub.add_parser("verify", parents=[common], help="cross-check against brute-force oracles")
    p.add_argument("--verify-tol", type=float, help="extra absolute tolerance for every check")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    overrides = {
        name: getattr(args, name)
        for name in ("seed", "trials", "epsilon", "mu", "eta", "out", "format", "workers")
        if getattr(args, name, None) is not None
    }
    if getattr(args, "sweep_trials", None) is not None:
        overrides["sweep_trials"] = args.sweep_trials
    if getattr(args, "verify_tol", None) is not None:
        overrides["verify_tol"] = args.verify_tol
    if getattr(args, "beliefs", None) is not None:
        overrides["beliefs"] = args.beliefs
    if getattr(args, "costs", None) is not None:
        overrides["cost_matrix"] = args.costs
    return cfg.replace(**overrides)


# ----------------------------------------------------------------------------
# output helpers
# ----------------------------------------------------------------------------


def _num(v) -> float:
    return float(v)


def _csv_text(header, rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return out.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(text: str, cfg: RunConfig, explicit_out: bool, name: str) -> None:
    sys.stdout.write(text)
    if explicit_out:
        cfg.out.mkdir(parents=True, exist_ok=True)
        (cfg.out / f"{name}.{cfg.format}").write_text(text)


def _tau(args, cfg: RunConfig) -> float:
    return args.tau if getattr(args, "tau", None) is not None else cfg.tau


def _label_list(labels) -> list[str]:
    return list(labels)


# ----------------------------------------------------------------------------
# estimate
# ----------------------------------------------------------------------------


def cmd_estimate(args, cfg: RunConfig) -> int:
    if cfg.beliefs is None:
        raise UsageError("estimate needs --beliefs or a 'beliefs' config entry")
    traj = load_belief_csv(cfg.beliefs, _tau(args, cfg))
    rows = []
    for iv in traj.intervals:
        if iv.q < 2:
            raise ValidationError(
                f"{cfg.beliefs}:{iv.lines[0]}: q < 2: interval {iv.step} holds {iv.q} belief(s)"
            )
        fit = _quiet(estimate_mle, BeliefBatch(iv.beliefs, iv.t_end, traj.tau), cfg.mle_tol, cfg.mle_max_iter)
        rows.append((iv, fit))
    labels = _label_list(traj.labels)
    if cfg.format == "json":
        text = _json_text({
            "labels": labels,
            "tau": traj.tau,
            "intervals": [
                {
                    "step": iv.step,
                    "t_start": iv.t_start,
                    "t_end": iv.t_end,
                    "q": iv.q,
                    "alpha": fit.params.to_list(),
                    "iterations": fit.iterations,
                    "converged": fit.converged,
                }
                for iv, fit in rows
            ],
        })
    else:
        text = _csv_text(
            ["step", "t_start", "t_end", "q", "iterations", "converged", *(f"alpha_{lb}" for lb in labels)],
            [
                [iv.step, iv.t_start, iv.t_end, iv.q, fit.iterations, fit.converged, *fit.params.to_list()]
                for iv, fit in rows
            ],
        )
    _emit(text, cfg, args.out is not None, "estimate")
    return EXIT_OK


# ----------------------------------------------------------------------------
# risk
# ----------------------------------------------------------------------------


def _risk_intervals(args, cfg: RunConfig, cm: CostMatrix):
    """Yield (step, t, alpha, cell_probs, profile) for each input interval."""
    if args.alpha is not None:
        params = DirichletParams(args.alpha)
        if params.m != cm.m:
            raise ValidationError(f"--alpha has {params.m} components but the cost matrix {cm.m} labels")
        cells = exceedance_probs(params, cfg.quad_tol)
        yield None, None, params.alpha, cells, risk_profile(params, cm, cfg.epsilon, cell_probs=cells)
        return
    if cfg.beliefs is None:
        raise UsageError("risk needs --alpha, --beliefs, or a 'beliefs' config entry")
    traj = load_belief_csv(cfg.beliefs, _tau(args, cfg), cm.labels.labels)
    settings = cfg.settings()
    for iv in traj.intervals:
        if iv.q < 2:
            raise ValidationError(
                f"{cfg.beliefs}:{iv.lines[0]}: q < 2: interval {iv.step} holds {iv.q} belief(s)"
            )
        fit, cells, profile = _quiet(analyze_interval, iv.beliefs, cm, settings, iv.t_end, traj.tau)
        yield iv.step, iv.t_end, fit.params.alpha, cells, profile


def cmd_risk(args, cfg: RunConfig) -> int:
    cm = load_cost_csv(cfg.cost_matrix, None if args.costs is not None else cfg.labels)
    labels = _label_list(cm.labels)
    state = AccumulatedRiskState(args.accumulate) if args.accumulate is not None else None
    records = []
    for step, t, alpha, cells, profile in _risk_intervals(args, cfg, cm):
        i, tie = profile.argmin()
        rec = {
            "step": step,
            "t": t,
            "alpha": [_num(a) for a in alpha],
            "cell_probs": [_num(p) for p in cells],
            "risk": [_num(v) for v in profile.values],
            "argmin": labels[i],
            "tie": tie,
        }
        if state is not None:
            acc = accumulate(state, profile)
            rec["accumulated"] = [_num(v) for v in acc]
            rec["accumulated_argmin"] = labels[int(np.argmin(acc))]
        records.append(rec)
    if cfg.format == "json":
        body = {"unit": UNIT, "epsilon": cfg.epsilon, "labels": labels}
        if state is not None:
            body["mu"] = state.mu
        body["intervals"] = records
        text = _json_text(body)
    else:
        header = ["step", "t", "label", "cell_prob", "risk", "argmin"]
        if state is not None:
            header.append("accumulated")
        header.append("unit")
        rows = []
        for rec in records:
            for j, lb in enumerate(labels):
                row = ["" if rec["step"] is None else rec["step"], "" if rec["t"] is None else rec["t"],
                       lb, rec["cell_probs"][j], rec["risk"][j], lb == rec["argmin"]]
                if state is not None:
                    row.append(rec["accumulated"][j])
                row.append(UNIT)
                rows.append(row)
        text = _csv_text(header, rows)
    _emit(text, cfg, args.out is not None, "risk")
    return EXIT_OK


# ----------------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------------


def _accuracy_rows(rows, labels):
    return [
        [r.resolution, r.noise, r.quality, r.trials, r.perception_accuracy,
         r.single_belief_accuracy, r.risk_accuracy, labels[r.modal_risk_output]]
        for r in rows
    ]


ACCURACY_HEADER = [
    "resolution", "noise", "quality", "trials", "perception_accuracy",
    "single_belief_accuracy", "risk_accuracy", "modal_risk_output",
]


def simulate(cfg: RunConfig) -> dict[str, str]:
    """Run every configured experiment; returns file name -> content.

    Nothing is written here, so the caller controls the single write pass.
    """
    cfg.check_files()
    cm = cfg.load_costs()
    am = cfg.load_actions()
    sched = cfg.schedule()
    settings = cfg.settings()
    labels = cm.labels

    external = cfg.beliefs is not None
    if external:
        traj = load_belief_csv(cfg.beliefs, cfg.tau, labels.labels)
        by_step = {iv.step: iv.beliefs for iv in traj.intervals}
        missing = [k for k in range(1, sched.intervals + 1) if k not in by_step]
        if missing:
            raise ValidationError(f"{cfg.beliefs}: no beliefs for interval(s) {missing}")
        records = [run_trajectory(None, sched, cm, am, settings, np.random.default_rng(cfg.seed),
                                  belief_source=by_step.__getitem__)]
    else:
        records = run_trials(cfg.generator(), sched, cm, am, settings, cfg.trials, cfg.seed, cfg.workers)

    files: dict[str, str] = {}
    files["trajectories.jsonl"] = "".join(
        json.dumps(rec.to_json(labels, i, UNIT)) + "\n" for i, rec in enumerate(records)
    )

    rows = []
    for i, rec in enumerate(records):
        truth = "" if rec.ground_truth is None else labels[rec.ground_truth]
        for r in rec.intervals:
            for j, lb in enumerate(labels):
                rows.append([i, truth, r.k, r.t, lb, float(r.risk[j]), float(r.accumulated[j]), UNIT])
    files["accumulated_risk.csv"] = _csv_text(
        ["trial", "ground_truth", "step", "t", "label", "risk", "accumulated_risk", "unit"], rows
    )

    sweep = eta_sweep(records, cfg.etas, sched)
    support = delay_support(sched)
    files["eta_histogram.csv"] = _csv_text(
        ["eta", "decision_delay", "count", "unit"],
        [[row.eta, s, c, UNIT] for row in sweep for s, c in zip(support, row.histogram(support))],
    )
    files["eta_summary.csv"] = _csv_text(
        ["eta", "median_decision_delay", "gated", "trials", "unit"],
        [[row.eta, row.median, row.gated, len(records), UNIT] for row in sweep],
    )

    summary = {
        "mode": "external" if external else "generator",
        "seed": cfg.seed,
        "trials": len(records),
        "labels": list(labels),
        "unit": UNIT,
        "epsilon": cfg.epsilon,
        "mu": cfg.mu,
        "eta": cfg.eta,
        "q": cfg.q,
        "T": cfg.T,
        "intervals": cfg.intervals,
        "gated": sum(rec.output is not None for rec in records),
        "mle_not_converged": sum(not r.mle_converged for rec in records for r in rec.intervals),
        "eta_median_delay": {repr(row.eta): row.median for row in sweep},
    }
    if not external:
        summary["action_accuracy"] = float(np.mean([bool(rec.action_correct) for rec in records]))
        noise_pts, quality_pts = cfg.sweep_points()
        model = cfg.generator()
        for name, pts in (("accuracy_noise.csv", noise_pts), ("accuracy_quality.csv", quality_pts)):
            acc = compare_outputs(model, cm, am, settings, pts, cfg.sweep_trials, cfg.seed,
                                  cfg.workers, cfg.noise_ref)
            files[name] = _csv_text(ACCURACY_HEADER, _accuracy_rows(acc, labels))
        summary["sweep_trials"] = cfg.sweep_trials

    if cfg.format == "json":
        files["summary.json"] = _json_text(summary)
    else:
        flat = [[k, json.dumps(v) if isinstance(v, (dict, list)) else v] for k, v in summary.items()]
        files["summary.csv"] = _csv_text(["key", "value"], flat)
    return files


def cmd_simulate(args, cfg: RunConfig) -> int:
    files = simulate(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (cfg.out / name).write_text(text)
    summary = files.get("summary.json") or files.get("summary.csv")
    sys.stdout.write(summary)
    log.info("wrote %d files to %s", len(files), cfg.out)
    return EXIT_OK


# ----------------------------------------------------------------------------
# verify
# ----------------------------------------------------------------------------


def cmd_verify(args, cfg: RunConfig) -> int:
    cfg.check_files()
    cfg.load_costs()
    cfg.load_actions()
    results = run_suite(
        cfg.seed, cfg.verify_cases, cfg.verify_draws, cfg.verify_cvar_cases,
        cfg.verify_tol, cfg.quad_tol, cfg.generator(), cfg.schedule(),
    )
    passed = all(r.passed for r in results)
    if cfg.format == "json":
        text = _json_text({"passed": passed, "checks": [r.to_json() for r in results]})
    else:
        text = _csv_text(
            ["check", "passed", "max_deviation", "tolerance", "detail"],
            [[r.name, r.passed, r.max_deviation, r.tolerance, r.detail] for r in results],
        )
    _emit(text, cfg, args.out is not None, "verify")
    return EXIT_OK if passed else EXIT_NUMERICAL


COMMANDS = {
    "estimate": cmd_estimate,
    "risk": cmd_risk,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PerceptRiskError as exc:  # pragma: no cover - all subclasses handled above
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
