"""Turn evaluations into CSV reports, text tables and figures."""

from __future__ import annotations

from pathlib import Path

from .config import ExperimentConfig
from .experiments import (
    LABELS,
    ChainResult,
    PortfolioEvaluation,
    QueryEvaluation,
    combiner_check,
    estimate_curves,
    non_increasing_transitions,
)
from .collect import Collection
from .io import render_table, write_csv


def error_factor_report(out: Path, ev: QueryEvaluation, cfg: ExperimentConfig, name: str, title: str,
                        figures: bool = True) -> list[Path]:
    header = ["method", "label", "n"] + [f"x{k}" for k in cfg.factors]
    rows = [[r.method, r.label, r.n, *r.percentages] for r in ev.rows]
    paths = [write_csv(out / f"{name}.csv", header, rows)]
    text = out / f"{name}.txt"
    text.write_text(render_table(header, rows, title))
    paths.append(text)
    if figures:
        from .plots import error_factor_figure

        paths.append(error_factor_figure(out / f"{name}.png", ev.rows, cfg.factors, title))
    return paths


def combiner_report(out: Path, ev: QueryEvaluation, cfg: ExperimentConfig) -> list[Path]:
    check = combiner_check(ev, cfg.factors)
    header = ["item", "value"]
    rows = [
        ["between_all", check.between_all],
        ["violations", check.violations],
        ["ef8_combined", check.ef8_combined],
        ["ef8_oracle_sat", check.ef8_oracle_sat],
        ["ef8_oracle_unsat", check.ef8_oracle_unsat],
    ]
    for label, pct in check.per_label.items():
        rows += [[f"gm_{label}_x{k}", p] for k, p in zip(cfg.factors, pct)]
    path = write_csv(out / "combiner.csv", header, rows)
    return [path]


def curves_report(out: Path, collection: Collection, cfg: ExperimentConfig, figures: bool = True) -> list[Path]:
    header = ["label", "method", "bin", "center", "mean_log_ratio", "mean_abs_log_ratio", "instances"]
    rows, paths = [], []
    for label in LABELS:
        curves = estimate_curves(collection, label, cfg.curve_bins)
        for method, points in curves.items():
            rows += [[label, method, p.bin, p.center, p.mean_log_ratio, p.mean_abs_log_ratio, p.instances]
                     for p in points]
        if figures:
            from .plots import curve_figure

            paths.append(curve_figure(out / f"curves_{label}.png", curves,
                                      f"WBE and PB-like estimates over time ({label})"))
    paths.insert(0, write_csv(out / "curves.csv", header, rows))
    return paths


def chain_report(out: Path, result: ChainResult, figures: bool = True) -> list[Path]:
    header = ["label", "restart", "instances", "plain_x2", "augmented_x2"]
    rows = []
    for label in LABELS:
        for r, (p, a, n) in enumerate(zip(result.plain[label], result.augmented[label], result.counts[label])):
            rows.append([label, result.restarts[r], n, p, a])
    rows.append(["pooled-final", result.restarts[-1], "", *result.pooled_final])
    paths = [write_csv(out / "chain.csv", header, rows)]
    (out / "chain.txt").write_text(render_table(header, rows, "Restart chaining: % within factor 2"))
    paths.append(out / "chain.txt")
    if figures:
        from .plots import chain_figure

        for label in LABELS:
            paths.append(chain_figure(out / f"chain_{label}.png", result.restarts, result.plain[label],
                                      result.augmented[label], f"Predictions through restarts ({label})"))
    return paths


def portfolio_report(out: Path, ev: PortfolioEvaluation) -> list[Path]:
    header = list(ev.records[0].keys()) if ev.records else ["instance"]
    paths = [write_csv(out / "portfolio_instances.csv", header, ([r[h] for h in header] for r in ev.records))]
    t_header = ["label", "accounting", "n", "oracle", "lmp-oracle", "lmp-avg"]
    rows = []
    for label, summary in ev.summaries.items():
        for acct, overhead in (("no-overhead", False), ("with-overhead", True)):
            imp = summary.improvements(overhead)
            rows.append([label, acct, summary.n, imp["oracle"], imp["lmp-oracle"], imp["lmp-avg"]])
    paths.append(write_csv(out / "portfolio_summary.csv", t_header, rows))
    (out / "portfolio_summary.txt").write_text(
        render_table(t_header, rows, "% improvement over the two-solver average (conflicts)"))
    paths.append(out / "portfolio_summary.txt")
    return paths


def curve_trend(collection: Collection, cfg: ExperimentConfig, label: str = "unsat") -> tuple[int, int]:
    """(non-increasing transitions, total transitions) of WBE mean |log ratio|."""
    wbe = estimate_curves(collection, label, cfg.curve_bins)["WBE"]
    values = [p.mean_abs_log_ratio for p in wbe]
    return non_increasing_transitions(values), len(values) - 1
