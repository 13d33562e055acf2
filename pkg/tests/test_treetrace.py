import numpy as np
import pytest
from conftest import chronological_trace, random_tree
from hypothesis import given, settings
from hypothesis import strategies as st

from satcost.cnf import GeneratorConfig, generate_random_ksat
from satcost.solver import Backjump, Conflict, Decide, EventRecorder, Restart, Solved, SolverConfig, solve
from satcost.treetrace import BranchState, TraceDesync, TreeTracker, build_explicit_tree, replay


def _decide(b: BranchState, *levels):
    for lv in levels:
        b.on_decide(lv)


def test_decide_depths():
    b = BranchState()
    b.on_decide(1)
    assert b.binary_depth == 1
    _decide(b, 2, 3)
    b.on_decide(4)
    assert b.binary_depth == 4


def test_chronological_backtrack():
    b = BranchState()
    _decide(b, 1, 2, 3)
    b.on_conflict()
    s = b.on_backjump(2)
    assert s.leaf_depth == 3 and s.target_depth == 2 and s.popped_closed_depths == ()
    # the right child continues at level 2; the next decision hangs below it
    b.on_decide(3)
    assert b.binary_depth == s.target_depth + 2


def test_jumped_over_nodes_leave_no_trace():
    b = BranchState()
    _decide(b, 1, 2, 3, 4, 5)
    b.on_conflict()
    s = b.on_backjump(1)
    assert (s.leaf_depth, s.target_depth, s.popped_closed_depths) == (5, 1, ())
    assert b.closed_depths() == [1]
    _decide(b, 2)
    b.on_conflict()
    s2 = b.on_backjump(1)
    # the second jump to level 1 closes the chain entry pushed by the first
    assert (s2.leaf_depth, s2.target_depth, s2.popped_closed_depths) == (3, 2, ())
    assert b.closed_depths() == [1, 2]
    assert all(d <= 3 for d in b.closed_depths())


def test_closed_entries_are_popped_on_return():
    b = BranchState()
    _decide(b, 1, 2)
    b.on_conflict()
    b.on_backjump(1)
    b.on_conflict()
    s = b.on_backjump(0)
    assert s.target_depth == 0 and s.popped_closed_depths == (1,)
    assert b.root_closed and b.closed_depths() == [0]


def test_restart_resets_branch():
    b = BranchState()
    _decide(b, *range(1, 8))
    b.on_restart()
    assert b.binary_depth == 0
    b.on_restart()
    assert b.binary_depth == 0 and not b.root_closed
    b.on_decide(1)
    assert b.on_conflict() == 1


def test_desync_detected():
    b = BranchState()
    _decide(b, 1, 2)
    b.on_conflict()
    b.on_backjump(1)
    with pytest.raises(TraceDesync):
        BranchState().on_backjump(0)
    b2 = BranchState()
    _decide(b2, 2)
    with pytest.raises(TraceDesync):
        b2.on_backjump(1)


def test_explicit_tree_complete_depth_two():
    events = [Restart(0, None), Decide(1, 1), Decide(2, 2), Conflict(2, 1, 2, 2, 0, 0, 0, 0), Backjump(2, 1, 1),
              Conflict(2, 1, 2, 1, 0, 0, 0, 0), Backjump(1, 0, 0), Decide(1, 3), Conflict(2, 1, 2, 1, 0, 0, 0, 0),
              Backjump(1, 0, 1), Conflict(2, 1, 1, 0, 0, 0, 0, 0), Solved("unsat")]
    tree = build_explicit_tree(events)
    assert tree.leaf_depths() == [2, 2, 2, 2]
    assert tree.is_proper() and len(tree.nodes()) == 7


def test_explicit_tree_single_leaf():
    events = [Restart(0, None)] + [Decide(i, i) for i in range(1, 6)] + [Conflict(2, 1, 5, 5, 0, 0, 0, 0),
                                                                        Solved("unsat")]
    assert build_explicit_tree(events).leaf_depths() == [5]


@pytest.mark.parametrize("seed,factor", [(1, None), (2, 1.5), (3, 1.2), (4, 1.5)])
def test_streaming_matches_oracle_on_solver_traces(seed, factor):
    f = generate_random_ksat(GeneratorConfig(120, 4.26, 3, seed=seed))
    rec = EventRecorder()
    solve(f, SolverConfig(restart_base=30, restart_factor=factor), [rec])
    streamed = [s.core() for s in replay(rec.events)]
    oracle = build_explicit_tree(rec.events)
    assert streamed == oracle.summaries
    assert len(streamed) > 100


def test_restart_leaf_depth_counts_from_new_root():
    f = generate_random_ksat(GeneratorConfig(60, 4.3, 3, seed=8))
    rec = EventRecorder()
    solve(f, SolverConfig(restart_base=10, restart_factor=1.5), [rec])
    tracker = TreeTracker(record=True)
    depth_since_restart = 0
    for e in rec.events:
        tracker.on_event(e)
        if isinstance(e, Restart):
            depth_since_restart = 0
        elif isinstance(e, Decide):
            depth_since_restart += 1
        elif isinstance(e, Conflict) and depth_since_restart == tracker.branch.binary_depth:
            assert tracker.last_leaf_depth == depth_since_restart
    oracle = build_explicit_tree(rec.events)
    assert [s.core()[0] for s in tracker.summaries] == [s[0] for s in oracle.summaries]


def test_binary_depth_at_least_level():
    f = generate_random_ksat(GeneratorConfig(80, 4.26, 3, seed=6))
    tracker = TreeTracker()
    level = 0

    class Check:
        def on_event(self, e):
            nonlocal level
            tracker.on_event(e)
            if isinstance(e, Decide):
                level = e.level
            elif isinstance(e, Backjump):
                level = e.to_level
            elif isinstance(e, Restart):
                level = 0
            assert tracker.branch.binary_depth >= level

    solve(f, SolverConfig(restart_base=50), [Check()])


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 400), st.floats(0.2, 0.6))
def test_chronological_traces_build_proper_trees(seed, nodes, p_leaf):
    tree = random_tree(np.random.default_rng(seed), nodes, 60, p_leaf)
    events = chronological_trace(tree)
    oracle = build_explicit_tree(events)
    assert oracle.is_proper()
    assert len(oracle.nodes()) == tree.size
    assert sorted(oracle.leaf_depths()) == sorted(tree.leaf_depths())
    streamed = replay(events)
    assert [s.core() for s in streamed] == oracle.summaries
    for s in streamed:
        assert s.target_depth < s.leaf_depth
