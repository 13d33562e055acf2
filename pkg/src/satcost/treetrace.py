"""Binary-tree view of a CDCL search.

Every decision branches left from the current node.  A backjump to level L
returns to the deepest node of level L on the current branch, marks its left
subtree closed and continues in its right child, which keeps level L even
though the solver may now branch on a different variable.  Nodes skipped by
the jump are dropped from the branch.

The branch is a stack of non-root nodes; the entry at list index i sits at
binary depth i + 1 and the root (depth 0, level 0) is implicit.
``ExplicitTree`` rebuilds the same view with real node objects and serves as
an independent check of the streaming model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .solver.events import Backjump, Conflict, Decide, Restart, SearchEvent, Solved


class TraceDesync(RuntimeError):
    """The event stream does not match the reconstructed branch."""


@dataclass
class BranchEntry:
    decision_level: int
    closed: bool = False
    # conflicts seen in this tree when the node was entered
    entered_at: int = 0


class BackjumpSummary(NamedTuple):
    leaf_depth: int
    target_depth: int
    popped_closed_depths: tuple[int, ...]
    # conflicts inside the left subtree that just closed
    closed_subtree_conflicts: int = 0

    def core(self) -> tuple[int, int, tuple[int, ...]]:
        return self.leaf_depth, self.target_depth, self.popped_closed_depths


class BranchState:
    """Streaming branch model; O(1) per decision, O(popped) per backjump."""

    def __init__(self):
        self.stack: list[BranchEntry] = []
        self.root_closed = False
        self.conflicts = 0

    @property
    def binary_depth(self) -> int:
        return len(self.stack)

    def closed_depths(self) -> list[int]:
        depths = [0] if self.root_closed else []
        depths.extend(i + 1 for i, e in enumerate(self.stack) if e.closed)
        return depths

    def open_depths(self) -> list[int]:
        """Depths of branch nodes whose right subtree is still unexplored."""
        if not self.stack:
            return []
        depths = [] if self.root_closed else [0]
        # the deepest entry is the current node: it has no child on the branch yet
        depths.extend(i + 1 for i, e in enumerate(self.stack[:-1]) if not e.closed)
        return depths

    def on_decide(self, level: int) -> None:
        self.stack.append(BranchEntry(level, False, self.conflicts))

    def on_conflict(self) -> int:
        self.conflicts += 1
        return len(self.stack)

    def on_backjump(self, to_level: int) -> BackjumpSummary:
        stack = self.stack
        leaf_depth = len(stack)
        popped_closed = []
        left_child_entered = None
        while stack and stack[-1].decision_level > to_level:
            entry = stack.pop()
            left_child_entered = entry.entered_at
            if entry.closed:
                popped_closed.append(len(stack) + 1)
        if stack:
            target = stack[-1]
            if target.decision_level != to_level or target.closed:
                raise TraceDesync(f"no open branch node at level {to_level}")
            target.closed = True
            target_depth = len(stack)
        else:
            if to_level != 0 or self.root_closed:
                raise TraceDesync(f"no open branch node at level {to_level}")
            self.root_closed = True
            target_depth = 0
        if left_child_entered is None:
            raise TraceDesync("backjump without a branch below the target")
        # right child of the target continues at the same decision level
        stack.append(BranchEntry(to_level, False, self.conflicts))
        popped_closed.reverse()
        return BackjumpSummary(
            leaf_depth, target_depth, tuple(popped_closed), self.conflicts - left_child_entered
        )

    def on_restart(self) -> None:
        self.stack.clear()
        self.root_closed = False


class TreeTracker:
    """Observer feeding solver events into a ``BranchState``.

    ``summaries`` collects one ``BackjumpSummary`` per backjump when
    ``record=True``; ``leaf_depths`` likewise collects conflict depths.
    """

    def __init__(self, record: bool = False):
        self.branch = BranchState()
        self.record = record
        self.summaries: list[BackjumpSummary] = []
        self.leaf_depths: list[int] = []
        self.last_leaf_depth = 0

    def on_event(self, event: SearchEvent):
        if isinstance(event, Decide):
            self.branch.on_decide(event.level)
        elif isinstance(event, Conflict):
            self.last_leaf_depth = self.branch.on_conflict()
            if self.record:
                self.leaf_depths.append(self.last_leaf_depth)
        elif isinstance(event, Backjump):
            summary = self.branch.on_backjump(event.to_level)
            if self.record:
                self.summaries.append(summary)
            return summary
        elif isinstance(event, Restart):
            self.branch.on_restart()
        return None


def replay(events: Iterable[SearchEvent]) -> list[BackjumpSummary]:
    tracker = TreeTracker(record=True)
    for event in events:
        tracker.on_event(event)
    return tracker.summaries


# -- explicit oracle -------------------------------------------------------------


@dataclass(eq=False)
class Node:
    level: int
    parent: Node | None = None
    left: Node | None = None
    right: Node | None = None
    leaf: bool = False

    def depth(self) -> int:
        d, node = 0, self
        while node.parent is not None:
            d += 1
            node = node.parent
        return d


@dataclass
class ExplicitTree:
    """Trees built node by node; one tree per restart.

    ``summaries`` holds (leaf_depth, target_depth, popped_closed_depths) per
    backjump, computed by walking parent links.
    """

    roots: list[Node] = field(default_factory=list)
    summaries: list[tuple[int, int, tuple[int, ...]]] = field(default_factory=list)
    spliced: int = 0

    def leaves(self, root: Node | None = None) -> list[Node]:
        out = []
        stack = [root if root is not None else self.roots[-1]]
        while stack:
            node = stack.pop()
            if node.leaf:
                out.append(node)
            for child in (node.right, node.left):
                if child is not None:
                    stack.append(child)
        return out

    def leaf_depths(self, root: Node | None = None) -> list[int]:
        return sorted(leaf.depth() for leaf in self.leaves(root))

    def nodes(self, root: Node | None = None) -> list[Node]:
        out = []
        stack = [root if root is not None else self.roots[-1]]
        while stack:
            node = stack.pop()
            out.append(node)
            stack.extend(c for c in (node.left, node.right) if c is not None)
        return out

    def is_proper(self, root: Node | None = None) -> bool:
        return all((n.left is None) == (n.right is None) for n in self.nodes(root))


def _splice(node: Node) -> None:
    """Remove an internal node that only has a left child; the child takes its place."""
    child = node.left
    parent = node.parent
    child.parent = parent
    if parent.left is node:
        parent.left = child
    else:
        parent.right = child


def build_explicit_tree(events: Iterable[SearchEvent]) -> ExplicitTree:
    tree = ExplicitTree()
    current: Node | None = None
    for event in events:
        if isinstance(event, Restart):
            current = Node(level=0)
            tree.roots.append(current)
        elif current is None:
            current = Node(level=0)
            tree.roots.append(current)
        if isinstance(event, Decide):
            child = Node(level=event.level, parent=current)
            current.left = child
            current = child
        elif isinstance(event, Conflict):
            current.leaf = True
        elif isinstance(event, Backjump):
            leaf = current
            leaf_depth = leaf.depth()
            # the target is the deepest ancestor of this level reached through its left child
            path = []
            node, child = leaf.parent, leaf
            target = None
            while node is not None:
                if node.level <= event.to_level:
                    if node.level == event.to_level and node.left is child and node.right is None:
                        target = node
                    break
                path.append((node, child))
                node, child = node.parent, node
            if target is None:
                raise TraceDesync(f"no open ancestor at level {event.to_level}")
            popped_closed = []
            for between, via in path:
                if between.right is not None and between.right is via:
                    popped_closed.append(between.depth())
            target_depth = target.depth()
            tree.summaries.append((leaf_depth, target_depth, tuple(sorted(popped_closed))))
            # nodes jumped over while still in their left subtree are removed
            for between, via in path:
                if between.left is via and between.right is None and between.level > event.to_level:
                    _splice(between)
                    tree.spliced += 1
            right = Node(level=event.to_level, parent=target)
            target.right = right
            current = right
        elif isinstance(event, Solved):
            pass
    return tree
