"""Command-line entry point: audit, situation, balance, bench, rank."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_dataset_config
from .errors import ConfigError, FairSmoteError
from .harness import (
    audit,
    emit_report,
    load_plan,
    markdown_table,
    read_records,
    run,
    situation_fractions,
    summarize,
)
from .learner import LogisticHP, fit_logistic
from .sampler import SAMPLERS, FairSmoteConfig, apply_sampler
from .situation import remove_biased, situation_failures
from .stats import SignificanceConfig

EXIT_CONFIG = 2
EXIT_DATA = 3


def _smote_cfg(args) -> FairSmoteConfig:
    cfg = FairSmoteConfig()
    return replace(
        cfg,
        seed=args.seed if args.seed is not None else cfg.seed,
        cr=args.cr if args.cr is not None else cfg.cr,
        f=args.f if args.f is not None else cfg.f,
    )


def _protected(args, ds_cfg) -> list[str]:
    declared = [p.column for p in ds_cfg.protected]
    chosen = args.protected or declared
    unknown = [a for a in chosen if a not in declared]
    if unknown:
        raise ConfigError(f"protected attributes {unknown} are not declared in {args.config}")
    return chosen


def _dump(doc) -> str:
    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, list):
            return [clean(v) for v in o]
        return o

    return json.dumps(clean(doc), indent=2, sort_keys=True)


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_audit(args) -> None:
    ds = load_dataset_config(args.config).load()
    doc = audit(ds)
    if args.format == "markdown":
        lines = [f"rows: {doc['rows']}, favorable share: {doc['favorable_share']:.2%}", ""]
        for attr, info in doc["attributes"].items():
            lines.append(f"| {attr} subgroup | count |")
            lines.append("|---|---|")
            lines += [f"| {k} | {v} |" for k, v in info["counts"].items()]
            lines.append("")
        _write("\n".join(lines), args.out)
    else:
        _write(_dump(doc), args.out)


def cmd_situation(args) -> None:
    ds_cfg = load_dataset_config(args.config)
    ds = ds_cfg.load()
    doc = situation_fractions(
        ds, _protected(args, ds_cfg), LogisticHP(), args.folds or 5, args.repeats or 10,
        args.seed if args.seed is not None else 0,
    )
    if args.format == "markdown":
        heads = list(doc)
        lines = ["| | " + " | ".join(f"{ds_cfg.name} ({a})" for a in heads) + " |",
                 "|---|" + "---|" * len(heads),
                 "| % of rows failed | " + " | ".join(f"{doc[a]['median_fraction']:.0%}" for a in heads) + " |"]
        _write("\n".join(lines), args.out)
    else:
        _write(_dump(doc), args.out)


def cmd_balance(args) -> None:
    ds_cfg = load_dataset_config(args.config)
    ds = ds_cfg.load()
    attrs = _protected(args, ds_cfg)
    out = apply_sampler(args.sampler, ds, attrs, _smote_cfg(args))
    if args.situation:
        model = fit_logistic(out, LogisticHP())
        out = remove_biased(out, situation_failures(out, attrs, model))
    frame = out.to_frame()
    frame.insert(0, "synthetic", (out.origin < 0).astype(int))
    text = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    _write(text, args.out)


def cmd_bench(args) -> None:
    plan = load_plan(args.plan, seed=args.seed, folds=args.folds, repeats=args.repeats, workers=args.workers)
    if args.cr is not None or args.f is not None:
        plan = replace(plan, smote=replace(
            plan.smote,
            cr=args.cr if args.cr is not None else plan.smote.cr,
            f=args.f if args.f is not None else plan.smote.f,
        ))
    _write(emit_report(run(plan), args.format), args.out)


def cmd_rank(args) -> None:
    sig = SignificanceConfig(seed=args.seed) if args.seed is not None else SignificanceConfig()
    summary, ranks = summarize(read_records(args.results), sig)
    if args.format == "json":
        doc = {
            "summary": [{"pipeline": p, "protected": a, **v} for (p, a), v in summary.items()],
            "ranks": [{"protected": a, "metric": m, "ranks": t.ranks} for (a, m), t in ranks.items()],
        }
        _write(_dump(doc), args.out)
    else:
        _write(markdown_table(summary, ranks), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairsmote", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_choices, fmt_default):
        p.add_argument("--format", choices=fmt_choices, default=fmt_default)
        p.add_argument("--out", help="write to this file instead of stdout")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("audit", help="subgroup counts and imbalance report")
    p.add_argument("config")
    common(p, ["json", "markdown"], "json")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("situation", help="share of rows failing situation testing")
    p.add_argument("config")
    p.add_argument("--protected", nargs="+")
    p.add_argument("--folds", type=int)
    p.add_argument("--repeats", type=int)
    common(p, ["json", "markdown"], "json")
    p.set_defaults(func=cmd_situation)

    p = sub.add_parser("balance", help="write a rebalanced copy of the dataset")
    p.add_argument("config")
    p.add_argument("--sampler", choices=SAMPLERS, default="fair_smote")
    p.add_argument("--protected", nargs="+")
    p.add_argument("--situation", action="store_true", help="also drop rows failing situation testing")
    p.add_argument("--cr", type=float)
    p.add_argument("--f", type=float)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("bench", help="cross-validated benchmark of pipelines")
    p.add_argument("plan")
    p.add_argument("--folds", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--cr", type=float)
    p.add_argument("--f", type=float)
    common(p, ["csv", "json", "markdown"], "csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("rank", help="Scott-Knott ranks from a bench CSV")
    p.add_argument("results")
    common(p, ["markdown", "json"], "markdown")
    p.set_defaults(func=cmd_rank)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FairSmoteError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
