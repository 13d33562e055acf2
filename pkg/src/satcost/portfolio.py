"""Two-solver race decided by LMP predictions.

Both configurations run in lock-step, one conflict each per step.  A run that
reaches its query point pauses until the other has either queried or
finished.  If a run finishes first it wins; otherwise the run with the larger
predicted log cost is terminated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .cnf import Formula
from .features import WindowPolicy, window_for_restart
from .lmp import LmpModelPair, predict
from .monitor import MonitorConfig, SearchMonitor
from .solver.core import Solver, SolverConfig, restart_schedule


class RaceError(RuntimeError):
    pass


@dataclass(frozen=True)
class RaceConfig:
    solver_a: SolverConfig = field(default_factory=lambda: SolverConfig(restart_factor=1.5))
    solver_b: SolverConfig = field(default_factory=lambda: SolverConfig(restart_factor=1.2))
    query_a: int = 9
    query_b: int = 19
    mode: str = "geometric-mean"
    policy: WindowPolicy = field(default_factory=WindowPolicy)

    def __post_init__(self):
        if self.query_a < 1 or self.query_b < 1:
            raise ValueError("query restarts must be >= 1")
        if not (self.solver_a.restarts and self.solver_b.restarts):
            raise ValueError("racing needs restarts enabled on both solvers")


def query_conflicts(config: SolverConfig, restart: int, policy: WindowPolicy) -> int:
    """Total conflicts at the end of the observation window of ``restart``."""
    window = window_for_restart(restart_schedule(config, restart), policy)
    if window is None:
        raise RaceError(f"no observation window fits restart {restart}")
    return sum(restart_schedule(config, i) for i in range(restart)) + window.end


class RaceResult(NamedTuple):
    chosen: str
    cost_a: int
    cost_b: int
    # None when that run finished before its query point
    query_a: int | None
    query_b: int | None
    pred_a: float | None
    pred_b: float | None
    decided_by: str  # early-a | early-b | prediction
    # work spent by the terminated run before the decision
    overhead: int

    @property
    def cost_chosen(self) -> int:
        return self.cost_a if self.chosen == "a" else self.cost_b

    @property
    def cost_with_overhead(self) -> int:
        return self.cost_chosen + self.overhead

    @property
    def baseline_avg(self) -> float:
        return (self.cost_a + self.cost_b) / 2.0

    @property
    def oracle(self) -> int:
        return min(self.cost_a, self.cost_b)


def settle(cost_a: int, cost_b: int, query_a: int | None, query_b: int | None,
           pred_a: float | None, pred_b: float | None) -> RaceResult:
    """Outcome of the lock-step race given full costs, query points and predictions."""
    early_a, early_b = query_a is None, query_b is None
    if early_a and early_b:
        chosen = "a" if cost_a <= cost_b else "b"
        overhead = min(cost_a, cost_b)
        how = f"early-{chosen}"
    elif early_a:
        chosen, how, overhead = "a", "early-a", min(cost_a, query_b)
    elif early_b:
        chosen, how, overhead = "b", "early-b", min(cost_b, query_a)
    else:
        if pred_a is None or pred_b is None:
            raise RaceError("both runs queried but a prediction is missing")
        chosen = "a" if pred_a <= pred_b else "b"
        how = "prediction"
        overhead = query_b if chosen == "a" else query_a
    return RaceResult(chosen, cost_a, cost_b, query_a, query_b, pred_a, pred_b, how, overhead)


class _Side:
    def __init__(self, formula: Formula, config: SolverConfig, restart: int, policy: WindowPolicy):
        self.monitor = SearchMonitor(formula, config, MonitorConfig(policy=policy, record_stream=False))
        self.solver = Solver(formula, config, [self.monitor])
        self.restart = restart
        self.stop = query_conflicts(config, restart, policy)

    def to_query(self):
        out = self.solver.run(stop_at=self.stop)
        if out is not None:
            return None
        for q in self.monitor.queries:
            if q.restart_index == self.restart:
                return q
        raise RaceError(f"query restart {self.restart} produced no feature vector")

    def finish(self) -> int:
        self.solver.observers.clear()
        return self.solver.run().total_conflicts


def race(formula: Formula, model_a: LmpModelPair, model_b: LmpModelPair, cfg: RaceConfig,
         evaluation: bool = True) -> RaceResult:
    """Race the two configurations on one instance.

    In evaluation mode both runs are completed so the result carries both full
    costs; in deployment mode the terminated run's cost is reported as the work
    it did before termination.
    """
    a = _Side(formula, cfg.solver_a, cfg.query_a, cfg.policy)
    b = _Side(formula, cfg.solver_b, cfg.query_b, cfg.policy)
    qa, qb = a.to_query(), b.to_query()
    pred_a = predict(model_a, qa.features, cfg.mode, cfg.query_a).log_conflicts_pred if qa else None
    pred_b = predict(model_b, qb.features, cfg.mode, cfg.query_b).log_conflicts_pred if qb else None
    query_a = qa.conflicts if qa else None
    query_b = qb.conflicts if qb else None
    if evaluation:
        return settle(a.finish(), b.finish(), query_a, query_b, pred_a, pred_b)
    # deployment: only the survivor runs on; the loser's cost is its pre-decision work
    if qa is None or qb is None:
        return settle(a.solver.conflicts, b.solver.conflicts, query_a, query_b, pred_a, pred_b)
    if pred_a <= pred_b:
        return settle(a.finish(), query_b, query_a, query_b, pred_a, pred_b)
    return settle(query_a, b.finish(), query_a, query_b, pred_a, pred_b)


STRATEGIES = ("oracle", "lmp-oracle", "lmp-avg")


def improvement(baseline_total: float, strategy_total: float) -> float:
    if baseline_total <= 0:
        raise ValueError("baseline total must be positive")
    return 100.0 * (baseline_total - strategy_total) / baseline_total


@dataclass
class PortfolioSummary:
    """Improvement over the two-solver average, per strategy, with and without overhead."""

    n: int
    baseline_total: float
    totals: dict[str, float]
    totals_with_overhead: dict[str, float]

    def improvements(self, with_overhead: bool = False) -> dict[str, float]:
        totals = self.totals_with_overhead if with_overhead else self.totals
        return {k: improvement(self.baseline_total, v) for k, v in totals.items()}


def summarize(results_by_strategy: dict[str, Sequence[RaceResult]]) -> PortfolioSummary:
    """``results_by_strategy`` maps lmp strategy names to per-instance results (same instance order)."""
    first = next(iter(results_by_strategy.values()))
    if not first:
        raise ValueError("no results")
    baseline = sum(r.baseline_avg for r in first)
    totals = {"oracle": float(sum(r.oracle for r in first))}
    with_overhead = {"oracle": totals["oracle"]}
    for name, results in results_by_strategy.items():
        if len(results) != len(first):
            raise ValueError("strategies cover different instance sets")
        totals[name] = float(sum(r.cost_chosen for r in results))
        with_overhead[name] = float(sum(r.cost_with_overhead for r in results))
    return PortfolioSummary(len(first), baseline, totals, with_overhead)
