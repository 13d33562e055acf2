"""Online observer that ties the tree model, both estimators and feature windows together.

A ``SearchMonitor`` is attached to a solver (or fed a recorded trace) and
produces two things: an estimate stream, sampled whenever the WBE sampling
gate fires, and one ``QueryPoint`` per completed observation window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from . import pbar
from .cnf import Formula, InitFeatures, static_stats
from .features import (
    ConflictSample,
    FeatureVector,
    ObservationWindow,
    WindowConfig,
    WindowPolicy,
    window_for_restart,
)
from .solver.core import SolverConfig
from .solver.events import Backjump, Conflict, Decide, Restart, SearchEvent, Solved
from .treetrace import TreeTracker
from .wbe import NoEstimate, WbeState, estimate_total_cost, estimate_tree_size, sampling_gate


class EstimatePoint(NamedTuple):
    conflicts: int
    restart_index: int
    log2_tree_size: float
    log2_total_cost: float
    pb_total: float | None


class QueryPoint(NamedTuple):
    restart_index: int
    # position among the restarts that had a window; 0 for the first
    chain_index: int
    conflicts: int
    features: FeatureVector
    wbe_log2_total: float | None
    wbe_log2_tree: float | None
    pb_total: float | None


@dataclass
class MonitorConfig:
    """Where observation windows sit.

    With restarts on, every restart gets a window sized by ``policy`` (when it
    fits).  With restarts off, ``fixed_windows`` are all opened in the single
    run, each yielding its own query point.
    """

    fixed_windows: tuple[WindowConfig, ...] = (WindowConfig(500, 1500),)
    policy: WindowPolicy = field(default_factory=WindowPolicy)
    pb_alpha: float = 0.5
    record_stream: bool = True


class SearchMonitor:
    def __init__(self, formula: Formula, solver_config: SolverConfig, config: MonitorConfig | None = None,
                 init: InitFeatures | None = None):
        self.solver_config = solver_config
        self.config = config or MonitorConfig()
        self.num_vars = formula.num_vars
        self.init = init if init is not None else static_stats(formula)
        self.tracker = TreeTracker()
        self.wbe = WbeState()
        self.history = pbar.DepthHistory(self.config.pb_alpha)
        self.per_restart: list[int] = []
        self.restart_index = -1
        self.total_conflicts = 0
        self.stream: list[EstimatePoint] = []
        self.queries: list[QueryPoint] = []
        self.status: str | None = None
        self._windows: list[ObservationWindow] = []
        self._chain = 0
        self._since_estimate = 0
        self._last_depth = 0
        self._pending: Conflict | None = None
        self._pending_depth = 0

    # -- event dispatch ----------------------------------------------------------
    def on_event(self, event: SearchEvent) -> None:
        if isinstance(event, Conflict):
            self.tracker.on_event(event)
            self.total_conflicts += 1
            self.per_restart[-1] += 1
            self._pending = event
            self._pending_depth = self.tracker.last_leaf_depth
        elif isinstance(event, Backjump):
            summary = self.tracker.on_event(event)
            self.wbe.observe(summary)
            self.history.on_subtree_closed(summary.target_depth, summary.closed_subtree_conflicts)
            self._after_conflict(self._pending, event)
        elif isinstance(event, Decide):
            self.tracker.on_event(event)
        elif isinstance(event, Restart):
            self.tracker.on_event(event)
            self._start_restart(event)
        elif isinstance(event, Solved):
            self.status = event.status
            if event.status == "unsat":
                self.wbe.finish()
                # the refuted tree is complete, so this last estimate is exact
                self._estimate()
            self._windows.clear()

    def _start_restart(self, event: Restart) -> None:
        self.restart_index = event.index
        self.per_restart.append(0)
        self.wbe.reset()
        self._windows = []
        if self.solver_config.restarts:
            cfg = window_for_restart(event.conflict_limit, self.config.policy)
            if cfg is not None:
                self._windows.append(ObservationWindow(cfg))
        elif event.index == 0:
            self._windows = [ObservationWindow(w) for w in self.config.fixed_windows]

    def _after_conflict(self, conflict: Conflict, jump: Backjump) -> None:
        here = self.per_restart[-1]
        self._since_estimate += 1
        estimate = None
        if sampling_gate(self._since_estimate, self._last_depth):
            estimate = self._estimate()
            self._since_estimate = 0
            self._last_depth = self._pending_depth
        if not self._windows:
            return
        sample = None
        for window in self._windows:
            cfg = window.config
            if cfg.wait < here <= cfg.end:
                if sample is None:
                    sample = ConflictSample.measure(
                        self.num_vars, conflict.db_clauses, conflict.db_binary, conflict.db_ternary,
                        conflict.db_literals, conflict.level, self._pending_depth, jump.from_level,
                        jump.to_level, conflict.learnt_clause_size, conflict.conflict_clause_size,
                        conflict.assigned_before, jump.assigned_after,
                    )
                window.add(sample)
                if estimate is not None:
                    window.add_lwbe(estimate.log2_tree_size * math.log(2.0))
        closing = [w for w in self._windows if w.config.end == here]
        for window in closing:
            self._close(window)

    def _estimate(self) -> EstimatePoint | None:
        try:
            tree = estimate_tree_size(self.wbe, exact=False)
        except NoEstimate:
            return None
        cost = estimate_total_cost(self.wbe, self.solver_config, self.per_restart, self.restart_index, tree)
        pb = pbar.estimate_total(self.tracker.branch, self.history, self.total_conflicts)
        point = EstimatePoint(self.total_conflicts, self.restart_index, tree.log2_size,
                              cost.log2_total_conflicts, pb)
        if self.config.record_stream:
            self.stream.append(point)
        return point

    def _close(self, window: ObservationWindow) -> None:
        if window.stats["lwbe"].count == 0:
            point = self._estimate()
            if point is not None:
                window.add_lwbe(point.log2_tree_size * math.log(2.0))
        vector = window.finalize(self.init)
        self._windows.remove(window)
        if vector is None:
            return
        try:
            tree = estimate_tree_size(self.wbe, exact=False)
            cost = estimate_total_cost(self.wbe, self.solver_config, self.per_restart, self.restart_index, tree)
            wbe_total, wbe_tree = cost.log2_total_conflicts, tree.log2_size
        except NoEstimate:
            wbe_total = wbe_tree = None
        pb = pbar.estimate_total(self.tracker.branch, self.history, self.total_conflicts)
        chain = self._chain if self.solver_config.restarts else len(self.queries)
        self.queries.append(QueryPoint(self.restart_index, chain, self.total_conflicts, vector,
                                       wbe_total, wbe_tree, pb))
        if self.solver_config.restarts:
            self._chain += 1


def replay(events: Iterable[SearchEvent], formula: Formula, solver_config: SolverConfig,
           config: MonitorConfig | None = None) -> SearchMonitor:
    monitor = SearchMonitor(formula, solver_config, config)
    for event in events:
        monitor.on_event(event)
    return monitor
