"""Solve every instance under each solver configuration while recording features and estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..cnf import static_stats
from ..features import FEATURE_NAMES
from ..lmp import LabeledSet
from ..monitor import EstimatePoint, MonitorConfig, QueryPoint, SearchMonitor
from ..portfolio import query_conflicts
from ..solver.core import Solver
from .config import SOLVER_NAMES, ExperimentConfig
from .dataset import HarnessError, Instance, parallel_map
from .io import opt_float, read_csv, write_csv

FEATURE_HEADER = ("instance", "label", "config", "restart_index", "chain_index", "query_conflicts",
                  "log_conflicts") + FEATURE_NAMES
QUERY_HEADER = ("instance", "label", "config", "restart_index", "chain_index", "query_conflicts",
                "truth_conflicts", "wbe_log2_total", "wbe_log2_tree", "pb_total")
STREAM_HEADER = ("instance", "label", "conflicts", "restart_index", "log2_tree_size", "log2_total_cost",
                 "pb_total")
TRUTH_HEADER = ("instance", "label", "num_vars", "ratio") + tuple(
    f"{k}_{n}" for n in SOLVER_NAMES for k in ("status", "conflicts"))


@dataclass
class RunRecord:
    config: str
    status: str
    conflicts: int
    queries: list[QueryPoint] = field(default_factory=list)
    stream: list[EstimatePoint] = field(default_factory=list)


@dataclass
class InstanceRecord:
    instance: Instance
    runs: dict[str, RunRecord]


def run_config(inst: Instance, cfg: ExperimentConfig, name: str, root: Path | None = None) -> RunRecord:
    formula = inst.formula(root)
    solver_cfg = cfg.solver(name)
    if name == "norestart":
        mcfg = MonitorConfig(fixed_windows=cfg.fixed_windows, pb_alpha=cfg.pb_alpha, record_stream=True)
    else:
        mcfg = MonitorConfig(policy=cfg.policy, pb_alpha=cfg.pb_alpha, record_stream=False)
    monitor = SearchMonitor(formula, solver_cfg, mcfg, static_stats(formula))
    solver = Solver(formula, solver_cfg, [monitor])
    if name != "norestart":
        # features are only needed up to the query restart; finish unobserved
        solver.run(stop_at=query_conflicts(solver_cfg, cfg.query_restart(name), cfg.policy))
        solver.observers.clear()
    out = solver.run()
    return RunRecord(name, out.status, out.total_conflicts, list(monitor.queries), list(monitor.stream))


def collect_instance(args) -> InstanceRecord:
    inst, cfg, root = args
    runs = {name: run_config(inst, cfg, name, root) for name in SOLVER_NAMES}
    if runs["norestart"].status != inst.label:
        raise HarnessError("ground-truth", f"{inst.id}: label {inst.label} but solved {runs['norestart'].status}")
    return InstanceRecord(inst, runs)


def collect(instances: list[Instance], cfg: ExperimentConfig, jobs: int = 1, root: Path | None = None
            ) -> list[InstanceRecord]:
    records = parallel_map(collect_instance, [(i, cfg, root) for i in instances], jobs)
    return sorted(records, key=lambda r: r.instance.id)


def write_collection(out: Path, records: list[InstanceRecord]) -> None:
    def truth_row(rec):
        row = [rec.instance.id, rec.instance.label, rec.instance.num_vars, rec.instance.ratio]
        for name in SOLVER_NAMES:
            row += [rec.runs[name].status, rec.runs[name].conflicts]
        return row

    write_csv(out / "truth.csv", TRUTH_HEADER, (truth_row(r) for r in records))
    for name in SOLVER_NAMES:
        feature_rows, query_rows = [], []
        for rec in records:
            run = rec.runs[name]
            if run.status == "budget_exhausted":
                continue
            target = math.log(run.conflicts)
            for q in run.queries:
                key = [rec.instance.id, rec.instance.label, name, q.restart_index, q.chain_index, q.conflicts]
                feature_rows.append(key + [target] + list(q.features.values))
                query_rows.append(key + [run.conflicts, q.wbe_log2_total, q.wbe_log2_tree, q.pb_total])
        write_csv(out / f"features_{name}.csv", FEATURE_HEADER, feature_rows)
        write_csv(out / f"queries_{name}.csv", QUERY_HEADER, query_rows)
    stream_rows = []
    for rec in records:
        for p in rec.runs["norestart"].stream:
            stream_rows.append([rec.instance.id, rec.instance.label, p.conflicts, p.restart_index,
                                p.log2_tree_size, p.log2_total_cost, p.pb_total])
    write_csv(out / "stream_norestart.csv", STREAM_HEADER, stream_rows)


# -- loading -----------------------------------------------------------------------------


@dataclass
class Collection:
    truth: list[dict[str, str]]
    features: dict[str, list[dict[str, str]]]
    queries: dict[str, list[dict[str, str]]]
    stream: list[dict[str, str]]

    def truth_of(self, config: str) -> dict[str, int]:
        return {r["instance"]: int(r[f"conflicts_{config}"]) for r in self.truth
                if r[f"status_{config}"] != "budget_exhausted"}

    def labeled_set(self, config: str, chain_index: int, restart_index: int | None = None) -> LabeledSet:
        rows = [r for r in self.features[config] if int(r["chain_index"]) == chain_index
                and (restart_index is None or int(r["restart_index"]) == restart_index)]
        return rows_to_set(rows)

    def query_rows(self, config: str, chain_index: int) -> list[dict[str, str]]:
        return [r for r in self.queries[config] if int(r["chain_index"]) == chain_index]

    def chain_indices(self, config: str) -> list[int]:
        return sorted({int(r["chain_index"]) for r in self.features[config]})

    def restart_of_chain(self, config: str) -> dict[int, int]:
        return {int(r["chain_index"]): int(r["restart_index"]) for r in self.features[config]}


def rows_to_set(rows: list[dict[str, str]]) -> LabeledSet:
    ids = [r["instance"] for r in rows]
    sat = np.array([r["label"] == "sat" for r in rows], dtype=bool)
    X = np.array([[float(r[n]) for n in FEATURE_NAMES] for r in rows], dtype=np.float64).reshape(len(rows), len(FEATURE_NAMES))
    y = np.array([float(r["log_conflicts"]) for r in rows], dtype=np.float64)
    return LabeledSet(ids, sat, X, y, FEATURE_NAMES)


def load_collection(directory: Path) -> Collection:
    if not (directory / "truth.csv").exists():
        raise HarnessError("missing-input", f"no collected data in {directory}; run 'collect' first")
    return Collection(
        truth=read_csv(directory / "truth.csv"),
        features={n: read_csv(directory / f"features_{n}.csv") for n in SOLVER_NAMES},
        queries={n: read_csv(directory / f"queries_{n}.csv") for n in SOLVER_NAMES},
        stream=read_csv(directory / "stream_norestart.csv"),
    )


def stream_by_instance(collection: Collection, label: str | None = None, field_name: str = "log2_total_cost"
                       ) -> dict[str, list[tuple[int, float | None]]]:
    out: dict[str, list[tuple[int, float | None]]] = {}
    for r in collection.stream:
        if label is not None and r["label"] != label:
            continue
        out.setdefault(r["instance"], []).append((int(r["conflicts"]), opt_float(r[field_name])))
    return out
