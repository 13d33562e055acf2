"""Experiment configuration, stored as JSON next to every artifact it produces."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..features import WindowConfig, WindowPolicy
from ..regress import DEFAULT_LAMBDAS, TrainConfig
from ..solver.core import SolverConfig


@dataclass(frozen=True)
class EnsembleSpec:
    """Random 3-SAT ensemble drawn from uniform (n, ratio) and filtered by label and hardness."""

    min_vars: int = 100
    max_vars: int = 160
    min_ratio: float = 4.1
    max_ratio: float = 5.0
    k: int = 3
    sat_count: int = 200
    unsat_count: int = 200
    # keep only instances whose no-restart run outlives this many conflicts
    min_conflicts: int = 2000
    max_conflicts: int = 200_000
    max_candidates: int = 60_000


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    seed: int = 2024
    no_restart_windows: tuple[tuple[int, int], ...] = ((500, 1500), (500, 34500))
    # restart runs: paper-shaped window policy scaled down for desk-size instances
    window_policy: tuple[int, float, int, float] = (100, 0.01, 50, 0.02)
    restart_base: int = 100
    factor_a: float = 1.5
    factor_b: float = 1.2
    query_a: int = 4
    query_b: int = 9
    clause_db_cap: int = 2000
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDAS
    folds: int = 10
    inner_folds: int = 5
    vif_threshold: float = 10.0
    training_cap: int = 500
    pb_alpha: float = 0.5
    curve_bins: int = 10
    factors: tuple[int, ...] = (2, 4, 8)

    # -- derived objects ----------------------------------------------------------
    def solver(self, name: str) -> SolverConfig:
        factor = {"norestart": None, "a": self.factor_a, "b": self.factor_b}[name]
        # restart runs get headroom: the ensemble filter only bounds the no-restart cost
        budget = self.ensemble.max_conflicts * (1 if factor is None else 10)
        return SolverConfig(restart_base=self.restart_base, restart_factor=factor,
                            clause_db_cap=self.clause_db_cap, conflict_budget=budget)

    @property
    def policy(self) -> WindowPolicy:
        return WindowPolicy(*self.window_policy)

    @property
    def fixed_windows(self) -> tuple[WindowConfig, ...]:
        return tuple(WindowConfig(w, s) for w, s in self.no_restart_windows)

    def train_config(self) -> TrainConfig:
        return TrainConfig(lambda_grid=tuple(self.lambda_grid), folds=self.folds, inner_folds=self.inner_folds,
                           vif_threshold=self.vif_threshold, seed=self.seed)

    def query_restart(self, name: str) -> int:
        return {"a": self.query_a, "b": self.query_b}[name]

    # -- persistence ----------------------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)
        if "ensemble" in doc:
            doc["ensemble"] = EnsembleSpec(**doc["ensemble"])
        for key in ("no_restart_windows",):
            if key in doc:
                doc[key] = tuple(tuple(x) for x in doc[key])
        for key in ("window_policy", "lambda_grid", "factors"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_seed(self, seed: int | None) -> ExperimentConfig:
        return self if seed is None else replace(self, seed=seed)


SOLVER_NAMES = ("norestart", "a", "b")
