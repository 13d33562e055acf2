"""A Progress-Bar-like historical estimator, used as a comparison baseline.

For each binary depth it keeps an exponentially weighted mean of the sizes
(in conflicts) of left subtrees that have closed below nodes at that depth,
and predicts the unexplored right subtrees on the current branch with those
means.  This reconstructs the weighted-historical heuristic; the original
tool's internals are not public, so reports label it ``pb``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .treetrace import BranchState


@dataclass
class DepthHistory:
    alpha: float = 0.5
    mean: dict[int, float] = field(default_factory=dict)
    count: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")

    def on_subtree_closed(self, depth: int, size_in_conflicts: float) -> None:
        if size_in_conflicts < 1:
            raise ValueError("a closed subtree holds at least one conflict")
        if depth in self.mean:
            self.mean[depth] = self.alpha * size_in_conflicts + (1.0 - self.alpha) * self.mean[depth]
        else:
            self.mean[depth] = float(size_in_conflicts)
        self.count[depth] = self.count.get(depth, 0) + 1


def estimate_remaining(branch: BranchState, history: DepthHistory) -> float | None:
    """Conflicts left in the open right subtrees of the branch, or None without history."""
    total = 0.0
    for depth in branch.open_depths():
        m = history.mean.get(depth)
        if m is None:
            return None
        total += m
    return total


def estimate_total(branch: BranchState, history: DepthHistory, conflicts_so_far: int) -> float | None:
    remaining = estimate_remaining(branch, history)
    if remaining is None:
        return None
    return conflicts_so_far + remaining
