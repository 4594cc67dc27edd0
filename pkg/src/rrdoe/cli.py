"""Command line entry point: ``rrdoe <subcommand> ...``.

On failure a one-line JSON object ``{"error": ..., "message": ...}`` is
written to stderr and the exit status is non-zero.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import campaign as cp
from .diagnostics import ResidualSet, build_report
from .doe import full_factorial
from .regression import ExperimentTable, FittedModel, all_terms, expand_formula, fit_ols, predict
from .render import KINDS, render_report
from .poll import ScenarioParams, load_poll
from .simulator import assign_truth, run_setting, simulate_poll


def _config(args) -> cp.CampaignConfig:
    if getattr(args, "config", None):
        cfg = cp.CampaignConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
    else:
        cfg = cp.CampaignConfig()
    changes = {}
    for attr in ("scale", "reps", "seed", "refine_threshold"):
        value = getattr(args, attr, None)
        if value is not None:
            changes[attr] = value
    if changes:
        cfg = replace(cfg, **changes)
    return cfg


def _write(path, data: str | bytes) -> None:
    if path in (None, "-"):
        sys.stdout.write(data if isinstance(data, str) else data.decode("utf-8"))
        return
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, bytes):
        p.write_bytes(data)
    else:
        p.write_text(data, encoding="utf-8")


def _read_table(spec: str) -> ExperimentTable:
    if spec.startswith("fixture:"):
        return cp.load_fixture(spec.split(":", 1)[1])
    return ExperimentTable.from_csv(Path(spec).read_text(encoding="utf-8"))


def _merge_tables(specs) -> ExperimentTable:
    table = None
    seen = set()
    for spec in specs:
        t = _read_table(spec)
        keep = []
        for label, x, y in zip(t.labels, t.coded, t.response):
            key = (label, tuple(x.tolist()), float(y))
            keep.append(key not in seen)
            seen.add(key)
        t = t.subset(np.array(keep))
        table = t if table is None else table.concat(t)
    return table


def _load_model(path) -> FittedModel:
    return FittedModel.from_json(Path(path).read_text(encoding="utf-8"))


def cmd_design(args) -> int:
    if args.config:
        names = _config(args).space.names
        k = len(names)
    else:
        k = args.k
        names = list(cp.FACTOR_NAMES) if k == 6 else [f"x{i + 1}" for i in range(k)]
    _write(args.out, full_factorial(k, args.scale).to_csv(names))
    return 0


def cmd_simulate(args) -> int:
    if args.poll:
        poll = load_poll(Path(args.poll).read_text(encoding="utf-8"))
        population = assign_truth(poll, args.pop, args.answers)
        result = simulate_poll(poll, population, args.truth, args.reps, args.seed)
        out = result.to_dict()
        out["scenario"] = {"poll": args.poll, "pr_truth": args.truth, "population": args.pop,
                           "answers_fraction": args.answers}
    else:
        scenario = ScenarioParams(args.truth, args.depth, args.alts, args.weight, args.pop,
                                  args.answers)
        out = run_setting(scenario, args.reps, args.seed).to_dict()
    _write(args.out, json.dumps(out, indent=2) + "\n")
    return 0


def cmd_run_campaign(args) -> int:
    cfg = _config(args)
    table = cp.run_campaign(cfg, workers=args.workers)
    _write(args.out, table.to_csv())
    return 0


def cmd_fit(args) -> int:
    table = _merge_tables(args.data)
    if args.drop_label:
        for label in args.drop_label:
            table = table.without_label(label)
    terms = all_terms(len(table.factor_names)) if args.formula in (None, "all") else \
        expand_formula(args.formula, table.factor_names)
    model = fit_ols(table, terms)
    _write(args.out, model.to_json())
    if args.out not in (None, "-"):
        print(model.summary())
    return 0


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    point = [float(v) for v in args.point.split(",")]
    value, extrapolated = predict(model, point)
    print(json.dumps({"point": point, "value": value, "extrapolation": extrapolated}))
    return 0


def cmd_validate(args) -> int:
    model = _load_model(args.model)
    cfg = _config(args)
    samples = cp.sample_validation_points(args.count, cfg.seed, space=cfg.space)
    table = cp.measure_validation(samples, cfg)
    _write(args.out, table.to_csv())
    preds = np.array([predict(model, x)[0] for x in table.coded])
    resid = preds - table.response
    summary = {
        "n": len(table),
        "residual_mean": float(resid.mean()),
        "residual_max_abs": float(np.abs(resid).max()),
        "sets": [s.set_label for s in samples],
    }
    print(json.dumps(summary))
    return 0


def cmd_diagnose(args) -> int:
    model = _load_model(args.model)
    samples = _merge_tables(args.samples)
    preds = np.array([predict(model, x)[0] for x in samples.coded])
    rs = ResidualSet(preds, samples.response, preds - samples.response)
    bins = args.bins if args.bins == "sturges" else int(args.bins)
    report = build_report(model, rs, bins=bins)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for kind in KINDS:
        svg, csv_bytes = render_report(report, kind)
        (out / f"{kind}.svg").write_bytes(svg)
        (out / f"{kind}.csv").write_bytes(csv_bytes)
    (out / "summary.json").write_text(json.dumps(report.summary(), indent=2) + "\n",
                                      encoding="utf-8")
    return 0


def cmd_refine(args) -> int:
    model = _load_model(args.model)
    cfg = _config(args)
    measure_fn = cp.table_lookup(_merge_tables(args.data)) if args.data else None
    decision = cp.refine_step(model, cfg, measure_fn)
    print(json.dumps(decision.to_dict(), indent=2))
    return 0


def cmd_replicate(args) -> int:
    report = cp.replicate_paper()
    for line in report.lines():
        print(line)
    if args.out:
        _write(args.out, json.dumps(report.to_dict(), indent=2) + "\n")
    return 1 if (args.strict and not report.passed) else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rrdoe", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def campaign_opts(sp):
        sp.add_argument("--config", help="campaign config JSON")
        sp.add_argument("--scale", type=float)
        sp.add_argument("--reps", type=int)
        sp.add_argument("--seed", type=int)

    sp = sub.add_parser("design", help="write a two-level full factorial design as CSV")
    sp.add_argument("--k", type=int, default=6)
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--config")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("simulate", help="measure MAPE for one factor setting")
    sp.add_argument("--truth", type=float, default=0.5)
    sp.add_argument("--depth", type=int, default=3)
    sp.add_argument("--alts", type=int, default=6)
    sp.add_argument("--weight", type=float, default=0.5)
    sp.add_argument("--pop", type=int, default=50500)
    sp.add_argument("--answers", type=float, default=0.5)
    sp.add_argument("--reps", type=int, default=30)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--poll", help="poll JSON to use instead of a generated spine")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("run-campaign", help="simulate baseline plus all factorial corners")
    campaign_opts(sp)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_run_campaign)

    sp = sub.add_parser("fit", help="fit a least-squares model to experiment CSVs")
    sp.add_argument("--data", action="append", required=True,
                    help="experiment CSV or fixture:NAME; repeatable")
    sp.add_argument("--formula", help="R-style term spec, or 'all' (default)")
    sp.add_argument("--drop-label", action="append", help="exclude rows with this std_order")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("predict", help="evaluate a model at a coded point")
    sp.add_argument("--model", required=True)
    sp.add_argument("--point", required=True, help="comma-separated coded values")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("validate", help="sample and simulate validation points")
    campaign_opts(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--count", type=int, default=20, help="points per set")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("diagnose", help="residual charts and summary for a model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--samples", action="append", required=True)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--bins", default="sturges")
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("refine", help="probe a model and decide accept or zoom")
    campaign_opts(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--refine-threshold", type=float)
    sp.add_argument("--data", action="append", help="answer probes from these tables")
    sp.set_defaults(func=cmd_refine)

    sp = sub.add_parser("replicate-paper", help="re-run the published analysis on bundled data")
    sp.add_argument("--out")
    sp.add_argument("--strict", action="store_true", help="exit 1 if any check fails")
    sp.set_defaults(func=cmd_replicate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, RuntimeError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else str(e)
        sys.stderr.write(json.dumps({"error": type(e).__name__, "message": str(msg)}) + "\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
