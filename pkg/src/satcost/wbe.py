"""Weighted Backtrack Estimator for conflict-driven search.

The estimate of the current tree's size is ``C/P - 1``: ``C`` grows by two
per conflict, and ``P`` is the sum of ``2**-(d+1)`` over the nodes of the
current branch whose left subtree is closed (``d`` being the node's binary
depth).  On a chronological trace this equals the depth-weighted average of
``2**(d+1) - 1`` over all leaf depths ``d``.

``P`` is kept as a base-2 logarithm so branches thousands of levels deep stay
representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

from .logspace import NEG_INF, log2_add, log2_minus_one, log2_sub, log2_sum
from .solver.core import SolverConfig, restart_schedule
from .treetrace import BackjumpSummary

# relative slack allowed when removing mass before declaring a desync
_REMOVAL_SLACK = 1e-12


class EstimationDesync(RuntimeError):
    pass


class NoEstimate(RuntimeError):
    """No conflict has been observed in the current tree yet."""


class TreeSizeEstimate(NamedTuple):
    log2_size: float
    exact_size: int | None = None

    @property
    def size(self) -> float:
        return 2.0**self.log2_size if self.log2_size < 1024 else math.inf


class CostEstimate(NamedTuple):
    log2_total_conflicts: float
    restart_index_needed: int


@dataclass
class WbeState:
    C: int = 0
    # binary depths of the closed nodes on the current branch; each contributes 2**-(d+1)
    closed: set[int] = field(default_factory=set)
    log2_P: float = NEG_INF
    terminal: bool = False

    @property
    def leaves_seen(self) -> int:
        return self.C // 2

    def observe(self, summary: BackjumpSummary) -> None:
        if self.terminal:
            raise EstimationDesync("tree already complete")
        self.C += 2
        target = summary.target_depth
        if target in self.closed:
            raise EstimationDesync(f"node at depth {target} closed twice")
        # add before removing: popped nodes are all deeper than the target, so the
        # subtraction below never loses more than one bit
        self.closed.add(target)
        self.log2_P = log2_add(self.log2_P, -(target + 1.0))
        for depth in summary.popped_closed_depths:
            if depth not in self.closed:
                raise EstimationDesync(f"popped depth {depth} was never closed")
            self.closed.discard(depth)
            mass = -(depth + 1.0)
            if mass > self.log2_P + _REMOVAL_SLACK:
                raise EstimationDesync("removal exceeds explored mass")
            self.log2_P = log2_sub(self.log2_P, min(mass, self.log2_P))
        if self.log2_P == NEG_INF:
            raise EstimationDesync("explored mass vanished")

    def finish(self) -> None:
        """Final conflict of a refuted tree: every node is closed, so P = 1."""
        self.C += 2
        self.closed.clear()
        self.log2_P = 0.0
        self.terminal = True

    def reset(self) -> None:
        self.C = 0
        self.closed.clear()
        self.log2_P = NEG_INF
        self.terminal = False

    def recomputed_log2_P(self) -> float:
        if self.terminal:
            return 0.0
        return log2_sum(-(d + 1.0) for d in self.closed)

    def exact_P(self) -> Fraction:
        if self.terminal:
            return Fraction(1)
        return sum((Fraction(1, 2 ** (d + 1)) for d in self.closed), Fraction(0))


def estimate_tree_size(state: WbeState, exact: bool = True) -> TreeSizeEstimate:
    if state.C == 0 or state.log2_P == NEG_INF:
        raise NoEstimate("no conflict observed in this tree")
    log2_ratio = math.log2(state.C) - state.log2_P
    log2_size = log2_minus_one(log2_ratio)
    size = None
    if state.terminal:
        size = state.C - 1
    elif exact and log2_size < 52 and max(state.closed, default=0) < 64:
        value = Fraction(state.C) / state.exact_P() - 1
        if value.denominator == 1:
            size = int(value)
    return TreeSizeEstimate(max(log2_size, 0.0), size)


def direct_estimate(depths: Sequence[int]) -> TreeSizeEstimate:
    """Depth-weighted leaf extrapolation: sum 2^-d (2^(d+1) - 1) / sum 2^-d."""
    if not depths:
        raise ValueError("need at least one leaf depth")
    # 2^-d * (2^(d+1) - 1) = 2 - 2^-d
    numer = log2_sum(log2_minus_one(d + 1.0) - d for d in depths)
    denom = log2_sum(-float(d) for d in depths)
    exact = None
    if max(depths) < 64:
        num = sum(Fraction(2 ** (d + 1) - 1, 2**d) for d in depths)
        den = sum(Fraction(1, 2**d) for d in depths)
        value = num / den
        if value.denominator == 1:
            exact = int(value)
    return TreeSizeEstimate(numer - denom, exact)


def tree_to_conflicts_log2(log2_size: float) -> float:
    """log2 of the leaf count of a proper binary tree with 2**log2_size nodes, (T+1)/2."""
    return log2_add(log2_size, 0.0) - 1.0


def estimate_total_cost(
    state: WbeState,
    schedule: SolverConfig,
    conflicts_spent_per_restart: Sequence[int],
    current_restart: int,
    tree: TreeSizeEstimate | None = None,
) -> CostEstimate:
    """Project total conflicts: finish the restarts too small for the tree, then the tree."""
    if tree is None:
        tree = estimate_tree_size(state)
    past = sum(conflicts_spent_per_restart[:current_restart])
    spent = sum(conflicts_spent_per_restart[: current_restart + 1])
    log2_nt = tree_to_conflicts_log2(tree.log2_size)
    if log2_nt < 62:
        if tree.exact_size is not None:
            n_tree = (tree.exact_size + 2) // 2
        else:
            approx = 2.0**log2_nt
            nearest = round(approx)
            n_tree = nearest if abs(approx - nearest) <= 1e-9 * approx else math.ceil(approx)
        if not schedule.restarts:
            return CostEstimate(math.log2(max(n_tree + past, spent, 1)), current_restart)
        m = current_restart
        total = past
        while True:
            limit = restart_schedule(schedule, m)
            if limit >= n_tree:
                break
            total += limit
            m += 1
        total += n_tree
        return CostEstimate(math.log2(max(total, spent, 1)), m)
    # astronomically large trees: geometric sums in log space
    if not schedule.restarts:
        return CostEstimate(log2_add(log2_nt, math.log2(past) if past else NEG_INF), current_restart)
    g = schedule.restart_factor
    log2_base = math.log2(schedule.restart_base)
    m = max(current_restart, math.ceil((log2_nt - log2_base) / math.log2(g)))
    # sum_{i=cur}^{m-1} base*g^i = base*(g^m - g^cur)/(g-1)
    log2_future = log2_base + log2_sub(m * math.log2(g), current_restart * math.log2(g)) - math.log2(g - 1)
    total = log2_add(log2_nt, log2_future)
    if past:
        total = log2_add(total, math.log2(past))
    return CostEstimate(total, m)


def sampling_gate(conflicts_since_last_estimate: int, last_depth: int) -> bool:
    return conflicts_since_last_estimate >= max(1, last_depth)
