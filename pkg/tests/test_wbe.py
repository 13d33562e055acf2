import copy
import math
from fractions import Fraction

import numpy as np
import pytest
from conftest import chronological_trace, random_tree
from hypothesis import given, settings
from hypothesis import strategies as st

from satcost.logspace import NEG_INF, log2_add, log2_minus_one, log2_sub, log2_sum
from satcost.solver import Backjump, Conflict, Solved, SolverConfig
from satcost.treetrace import BackjumpSummary, BranchState, TreeTracker
from satcost.wbe import (
    EstimationDesync,
    NoEstimate,
    TreeSizeEstimate,
    WbeState,
    direct_estimate,
    estimate_total_cost,
    estimate_tree_size,
    sampling_gate,
)


def _run_trace(events):
    """Feed a trace through tracker + WBE; yield the state after every non-final conflict."""
    tracker, wbe = TreeTracker(), WbeState()
    for e in events:
        out = tracker.on_event(e)
        if isinstance(e, Backjump):
            wbe.observe(out)
            yield copy.deepcopy(wbe)
        elif isinstance(e, Solved) and e.status == "unsat":
            wbe.finish()
            yield copy.deepcopy(wbe)


def test_first_conflict_at_depth_three():
    b = BranchState()
    for lv in (1, 2, 3):
        b.on_decide(lv)
    b.on_conflict()
    w = WbeState()
    w.observe(b.on_backjump(2))
    assert w.C == 2 and w.exact_P() == Fraction(1, 8)
    est = estimate_tree_size(w)
    assert est.exact_size == 15 and est.log2_size == pytest.approx(math.log2(15))


def test_complete_depth_two_tree():
    b, w = BranchState(), WbeState()
    for ev in ("d1", "d2", "c", "j1", "c", "j0", "d1", "c", "j0"):
        if ev[0] == "d":
            b.on_decide(int(ev[1]))
        elif ev == "c":
            b.on_conflict()
        else:
            w.observe(b.on_backjump(int(ev[1])))
    # three depth-2 leaves seen
    assert w.C == 6 and w.exact_P() == Fraction(3, 4)
    assert estimate_tree_size(w).exact_size == 7
    w.finish()
    assert w.C == 8 and estimate_tree_size(w).exact_size == 7


def test_complete_depth_two_tree_via_events():
    from conftest import Tree

    tree = Tree(left=[1, 3, 5, -1, -1, -1, -1], right=[2, 4, 6, -1, -1, -1, -1])
    states = [(w.C, w.exact_P(), estimate_tree_size(w).exact_size) for w in _run_trace(chronological_trace(tree))]
    assert states[2] == (6, Fraction(3, 4), 7)
    assert states[-1] == (8, Fraction(1), 7)


def test_pop_and_close_changes_mass():
    w = WbeState()
    w.observe(BackjumpSummary(6, 5, ()))
    before = w.exact_P()
    w.observe(BackjumpSummary(6, 1, (5,)))
    assert w.exact_P() - before == Fraction(-1, 64) + Fraction(1, 4)
    assert w.log2_P == pytest.approx(w.recomputed_log2_P(), abs=1e-12)


def test_direct_estimate_examples():
    assert direct_estimate([3]).exact_size == 15
    assert direct_estimate([1, 1]).exact_size == 3
    assert direct_estimate([2, 2, 2]).exact_size == 7
    with pytest.raises(ValueError):
        direct_estimate([])


def test_desync_and_no_estimate():
    w = WbeState()
    with pytest.raises(NoEstimate):
        estimate_tree_size(w)
    w.observe(BackjumpSummary(3, 2, ()))
    with pytest.raises(EstimationDesync):
        w.observe(BackjumpSummary(3, 2, ()))
    with pytest.raises(EstimationDesync):
        WbeState().observe(BackjumpSummary(4, 1, (3,)))
    w.finish()
    with pytest.raises(EstimationDesync):
        w.observe(BackjumpSummary(1, 0, ()))
    w.reset()
    assert w.C == 0 and w.log2_P == NEG_INF


def test_total_cost_worked_example():
    cfg = SolverConfig(restart_base=100, restart_factor=1.5)
    tree = TreeSizeEstimate(math.log2(799), 799)  # 400 leaves
    cost = estimate_total_cost(WbeState(), cfg, [50], 0, tree)
    assert cost.restart_index_needed == 4
    assert 2**cost.log2_total_conflicts == pytest.approx(100 + 150 + 225 + 338 + 400)


def test_total_cost_no_restarts_and_small_trees():
    norestart = SolverConfig(restart_factor=None)
    tree = TreeSizeEstimate(math.log2(799), 799)
    assert 2 ** estimate_total_cost(WbeState(), norestart, [10], 0, tree).log2_total_conflicts == pytest.approx(400)
    cfg = SolverConfig(restart_base=100, restart_factor=1.5)
    small = TreeSizeEstimate(math.log2(99), 99)
    cost = estimate_total_cost(WbeState(), cfg, [100, 150, 20], 2, small)
    assert cost.restart_index_needed == 2
    assert 2**cost.log2_total_conflicts == pytest.approx(250 + 50)


def test_total_cost_rounds_leaf_count_up():
    norestart = SolverConfig(restart_factor=None)
    # 10 nodes is not a proper tree size; (10 + 1) / 2 rounds up to 6 conflicts
    tree = TreeSizeEstimate(math.log2(10), 10)
    assert 2 ** estimate_total_cost(WbeState(), norestart, [1], 0, tree).log2_total_conflicts == pytest.approx(6)


def test_sampling_gate_examples():
    assert not sampling_gate(49, 50)
    assert sampling_gate(50, 50)
    assert sampling_gate(1, 0)


def test_deep_branch_is_finite():
    b, w = BranchState(), WbeState()
    for lv in range(1, 2001):
        b.on_decide(lv)
    b.on_conflict()
    w.observe(b.on_backjump(1999))
    est = estimate_tree_size(w)
    assert math.isfinite(est.log2_size) and est.log2_size == pytest.approx(2001.0)
    assert est.exact_size is None
    cost = estimate_total_cost(w, SolverConfig(restart_factor=1.5), [1], 0, est)
    assert math.isfinite(cost.log2_total_conflicts) and cost.log2_total_conflicts > 1990
    cost = estimate_total_cost(w, SolverConfig(restart_factor=None), [1], 0, est)
    assert cost.log2_total_conflicts == pytest.approx(2000.0)


def test_logspace_helpers():
    assert log2_add(3.0, 3.0) == pytest.approx(4.0)
    assert log2_add(NEG_INF, 2.0) == 2.0
    assert log2_sub(4.0, 3.0) == pytest.approx(3.0)
    assert log2_sub(2.0, 2.0) == NEG_INF
    with pytest.raises(ValueError):
        log2_sub(1.0, 2.0)
    assert log2_sum([]) == NEG_INF
    assert log2_sum([-2000.0, -2000.0]) == pytest.approx(-1999.0)
    assert log2_minus_one(math.log2(16)) == pytest.approx(math.log2(15))
    assert log2_minus_one(0.0) == NEG_INF


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 600), st.floats(0.25, 0.6))
def test_incremental_equals_direct(seed, nodes, p_leaf):
    tree = random_tree(np.random.default_rng(seed), nodes, 60, p_leaf)
    depths = tree.leaf_depths()
    states = list(_run_trace(chronological_trace(tree)))
    for k, w in enumerate(states[:-1], 1):
        assert w.C == 2 * k
        assert w.log2_P <= 1e-12
        assert w.log2_P == pytest.approx(w.recomputed_log2_P(), abs=1e-9)
        inc = estimate_tree_size(w, exact=False).log2_size
        assert inc >= 0
        assert abs(inc - direct_estimate(depths[:k]).log2_size) <= 1e-9
    final = estimate_tree_size(states[-1])
    assert final.exact_size == tree.size


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.0, 60.0),
    st.lists(st.integers(0, 5000), min_size=1, max_size=12),
    st.sampled_from([None, 1.2, 1.5, 2.0]),
)
def test_total_cost_never_below_spent(log2_size, spent, factor):
    cfg = SolverConfig(restart_base=100, restart_factor=factor)
    if factor is None:
        spent = spent[:1]
    current = len(spent) - 1
    cost = estimate_total_cost(WbeState(), cfg, spent, current, TreeSizeEstimate(log2_size))
    assert 2**cost.log2_total_conflicts >= sum(spent) * (1 - 1e-12)
    assert cost.restart_index_needed >= current


def test_estimates_track_real_solver_runs():
    from satcost.cnf import GeneratorConfig, generate_random_ksat
    from satcost.solver import EventRecorder, solve

    f = generate_random_ksat(GeneratorConfig(90, 4.6, 3, seed=21))
    rec = EventRecorder()
    out = solve(f, SolverConfig(restart_factor=None), [rec])
    assert out.status == "unsat"
    states = list(_run_trace(rec.events))
    for w in states[:-1]:
        assert w.log2_P == pytest.approx(w.recomputed_log2_P(), abs=1e-9)
        assert w.log2_P <= 1e-12
    assert states[-1].terminal
    assert sum(isinstance(e, Conflict) for e in rec.events) == states[-1].C // 2
