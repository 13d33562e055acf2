"""Command-line driver.

    satcost gen        --out DIR [--config FILE] [--seed N] [--jobs J] [--from-dir DIMACS_DIR]
    satcost collect    --out DIR [--jobs J]
    satcost train      --out DIR
    satcost evaluate   --out DIR [--no-figures]
    satcost curves     --out DIR [--no-figures]
    satcost portfolio  --out DIR
    satcost run        --out DIR ...   (all of the above in order)

Every command after ``gen`` reads the configuration pinned in the manifest.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from ..lmp import LmpError
from ..regress import RegressionError
from .collect import collect, load_collection, write_collection
from .config import ExperimentConfig
from .dataset import HarnessError, generate_ensemble, ingest_directory, read_manifest, write_manifest
from .experiments import chain_evaluation, evaluate_query, portfolio_evaluation
from .report import chain_report, combiner_report, curves_report, error_factor_report, portfolio_report
from .train import load_pair, train_all

log = logging.getLogger("satcost")

EXIT_CODES = {"usage": 2, "missing-input": 3, "config": 4, "ensemble": 5, "ground-truth": 6, "schema": 7,
              "training": 8}


def _config(args) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    except (OSError, ValueError, TypeError) as exc:
        raise HarnessError("config", str(exc)) from None
    return cfg.with_seed(args.seed)


def _pinned(args) -> ExperimentConfig:
    cfg, _ = read_manifest(args.out)
    if args.config and ExperimentConfig.load(args.config).with_seed(args.seed) != cfg:
        raise HarnessError("config", "--config differs from the configuration pinned in the manifest")
    if args.seed is not None and args.seed != cfg.seed:
        raise HarnessError("config", "--seed differs from the seed pinned in the manifest")
    return cfg


def cmd_gen(args) -> None:
    cfg = _config(args)
    if args.from_dir:
        instances = ingest_directory(args.from_dir, cfg, args.jobs)
    else:
        instances = generate_ensemble(cfg, args.jobs, log.info)
    path = write_manifest(args.out, cfg, instances, write_cnf=not args.from_dir)
    print(f"wrote {path} ({len(instances)} instances)")


def cmd_collect(args) -> None:
    cfg, instances = read_manifest(args.out)
    _pinned(args)
    records = collect(instances, cfg, args.jobs, args.out)
    write_collection(args.out / "collect", records)
    print(f"collected {len(records)} instances into {args.out / 'collect'}")


def cmd_train(args) -> None:
    cfg = _pinned(args)
    written = train_all(load_collection(args.out / "collect"), cfg, args.out / "models")
    print(f"wrote {len(written)} model files to {args.out / 'models'}")


def cmd_evaluate(args) -> None:
    cfg = _pinned(args)
    coll = load_collection(args.out / "collect")
    reports = args.out / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    figures = not args.no_figures
    titles = {0: "Error factors at the first no-restart query point",
              1: "Error factors at the second no-restart query point"}
    for chain in coll.chain_indices("norestart"):
        ev = evaluate_query(coll, cfg, "norestart", chain)
        if ev is None:
            log.warning("query point %d: too few instances per label for %d folds", chain, cfg.folds)
            continue
        for path in error_factor_report(reports, ev, cfg, f"errors_norestart_q{chain}",
                                        titles.get(chain, f"query point {chain}"), figures):
            print(path)
        if chain == 0:
            for path in combiner_report(reports, ev, cfg):
                print(path)
    for name in ("a", "b"):
        chains = {r: c for c, r in coll.restart_of_chain(name).items()}
        restart = cfg.query_restart(name)
        if restart in chains:
            ev = evaluate_query(coll, cfg, name, chains[restart])
            if ev is not None:
                for path in error_factor_report(reports, ev, cfg, f"errors_{name}_r{restart}",
                                                f"Error factors, solver {name}, restart {restart}", figures):
                    print(path)
    for path in chain_report(reports, chain_evaluation(coll, cfg, "a"), figures):
        print(path)


def cmd_curves(args) -> None:
    cfg = _pinned(args)
    coll = load_collection(args.out / "collect")
    for path in curves_report(args.out / "reports", coll, cfg, not args.no_figures):
        print(path)


def cmd_portfolio(args) -> None:
    cfg = _pinned(args)
    coll = load_collection(args.out / "collect")
    # deployable race models must match this build's feature schema
    for name in ("a", "b"):
        path = args.out / "models" / f"{name}_r{cfg.query_restart(name)}.json"
        if path.exists():
            load_pair(path)
    try:
        ev = portfolio_evaluation(coll, cfg)
    except ValueError as exc:
        raise HarnessError("missing-input", str(exc)) from None
    for path in portfolio_report(args.out / "reports", ev):
        print(path)


def cmd_run(args) -> None:
    for step in (cmd_gen, cmd_collect, cmd_train, cmd_evaluate, cmd_curves, cmd_portfolio):
        t0 = time.perf_counter()
        step(args)
        log.info("%s done in %.1fs", step.__name__[4:], time.perf_counter() - t0)


COMMANDS = {
    "gen": cmd_gen,
    "collect": cmd_collect,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "curves": cmd_curves,
    "portfolio": cmd_portfolio,
    "run": cmd_run,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="satcost", description="Online SAT search-cost prediction workbench")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--out", type=Path, required=True, help="experiment directory")
        p.add_argument("--config", type=Path, default=None, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("gen", "run"):
            p.add_argument("--from-dir", type=Path, default=None, help="ingest DIMACS files instead of generating")
        if name in ("evaluate", "curves", "run"):
            p.add_argument("--no-figures", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CODES["usage"] if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if not hasattr(args, "from_dir"):
        args.from_dir = None
    if not hasattr(args, "no_figures"):
        args.no_figures = False
    try:
        COMMANDS[args.command](args)
    except HarnessError as exc:
        print(f"error [{exc.category}]: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)
    except (LmpError, RegressionError) as exc:
        print(f"error [training]: {exc}", file=sys.stderr)
        return EXIT_CODES["training"]
    return 0


if __name__ == "__main__":
    sys.exit(main())
