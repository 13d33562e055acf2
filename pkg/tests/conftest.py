"""Independent oracles shared by the test modules."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import pytest

from satcost.cnf import Formula
from satcost.solver.events import Backjump, Conflict, Decide, Restart, Solved


def brute_force_sat(formula: Formula) -> bool:
    """Truth-table check, vectorised over all 2**n assignments (n <= 20)."""
    n = formula.num_vars
    if formula.empty_clause:
        return False
    if n == 0:
        return not formula.clauses
    rows = np.arange(2**n, dtype=np.int64)
    bits = ((rows[:, None] >> np.arange(n)) & 1).astype(bool)
    alive = np.ones(2**n, dtype=bool)
    for clause in formula.clauses:
        sat = np.zeros(2**n, dtype=bool)
        for lit in clause:
            col = bits[:, abs(lit) - 1]
            sat |= col if lit > 0 else ~col
        alive &= sat
        if not alive.any():
            return False
    return bool(alive.any())


def pigeonhole(pigeons: int, holes: int) -> Formula:
    var = lambda p, h: p * holes + h + 1  # noqa: E731
    clauses = [tuple(var(p, h) for h in range(holes)) for p in range(pigeons)]
    for h in range(holes):
        for p, q in itertools.combinations(range(pigeons), 2):
            clauses.append((-var(p, h), -var(q, h)))
    return Formula(pigeons * holes, clauses)


# -- explicit proper binary trees -----------------------------------------------


@dataclass
class Tree:
    """Proper binary tree in array form; node 0 is the root, -1 marks no child."""

    left: list[int]
    right: list[int]

    @property
    def size(self) -> int:
        return len(self.left)

    def is_leaf(self, i: int) -> bool:
        return self.left[i] < 0

    def leaf_depths(self) -> list[int]:
        """Leaf depths in left-first depth-first order."""
        out, stack = [], [(0, 0)]
        while stack:
            node, d = stack.pop()
            if self.is_leaf(node):
                out.append(d)
            else:
                stack.append((self.right[node], d + 1))
                stack.append((self.left[node], d + 1))
        return out

    def depth(self) -> int:
        return max(self.leaf_depths())


def random_tree(rng: np.random.Generator, max_nodes: int, max_depth: int, p_leaf: float) -> Tree:
    left, right = [-1], [-1]
    frontier = [(0, 0)]
    while frontier:
        node, d = frontier.pop(int(rng.integers(len(frontier))))
        if d >= max_depth or len(left) + 2 > max_nodes or rng.random() < p_leaf:
            continue
        for side in (left, right):
            side[node] = len(left)
            left.append(-1)
            right.append(-1)
            frontier.append((side[node], d + 1))
    return Tree(left, right)


def random_split_tree(rng: np.random.Generator, leaves: int) -> Tree:
    """Leaves split uniformly at random at every internal node."""
    left, right = [-1], [-1]
    stack = [(0, leaves)]
    while stack:
        node, n = stack.pop()
        if n == 1:
            continue
        k = int(rng.integers(1, n))
        for side, count in ((left, k), (right, n - k)):
            side[node] = len(left)
            left.append(-1)
            right.append(-1)
            stack.append((side[node], count))
    return Tree(left, right)


def chronological_trace(tree: Tree) -> list:
    """Events of a DPLL run that explores ``tree`` in order and fails at every leaf.

    A left child is entered by a decision one level deeper; a right child keeps
    its parent's level (the flipped literal is implied at that level).
    """
    events: list = [Restart(0, None)]

    def conflict(level: int) -> Conflict:
        return Conflict(2, 1, 0, level, 0, 0, 0, 0)

    # explicit stack of (node, level, phase)
    stack = [(0, 0, 0)]
    while stack:
        node, level, phase = stack.pop()
        if tree.is_leaf(node):
            events.append(conflict(level))
            continue
        if phase == 0:
            events.append(Decide(level + 1, level + 1))
            stack.append((node, level, 1))
            stack.append((tree.left[node], level + 1, 0))
        else:
            # the left subtree's last conflict happened at level + 1
            events.append(Backjump(level + 1, level, 0))
            stack.append((tree.right[node], level, 0))
    events.append(Solved("unsat"))
    return events


def knuth_probe_mean(tree: Tree, probes: int, rng: np.random.Generator) -> float:
    total = 0.0
    left, right = tree.left, tree.right
    coins = rng.integers(0, 2, size=(probes, tree.depth() + 1))
    for row in coins:
        node, d = 0, 0
        while left[node] >= 0:
            node = left[node] if row[d] else right[node]
            d += 1
        total += 2.0 ** (d + 1) - 1
    return total / probes


@pytest.fixture
def rng():
    return np.random.default_rng(12345)



# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
