import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from satcost.cnf import Formula, GeneratorConfig, InitFeatures, generate_random_ksat, static_stats
from satcost.features import (
    FEATURE_NAMES,
    AugmentedFeatureVector,
    ConflictSample,
    FeatureVector,
    ObservationWindow,
    RunningStat,
    WindowConfig,
    WindowPolicy,
    history_names,
    pad_history,
    window_for_restart,
)


def test_feature_names_fixed():
    assert len(FEATURE_NAMES) == 64 == len(set(FEATURE_NAMES))
    assert FEATURE_NAMES[:7] == ("init_var", "init_cls", "init_cls_var", "init_var_cls", "init_fbc", "init_ftc",
                                 "init_acs")
    assert FEATURE_NAMES[-1] == "lwbe_last"


def test_window_policy_examples():
    assert window_for_restart(100_000) == WindowConfig(2000, 1000)
    assert window_for_restart(200_000) == WindowConfig(4000, 2000)
    assert window_for_restart(1200) is None
    small = WindowPolicy(100, 0.01, 50, 0.02)
    assert window_for_restart(150, small) == WindowConfig(50, 100)
    assert window_for_restart(100, small) is None
    with pytest.raises(ValueError):
        WindowConfig(-1, 5)
    with pytest.raises(ValueError):
        WindowConfig(0, 0)


def _sample(**over):
    base = dict(num_vars=300, db_clauses=427, db_binary=0, db_ternary=426, db_literals=426 * 3 + 7, level=12,
                leaf_depth=15, from_level=12, to_level=4, learnt_size=7, conflict_size=3,
                assigned_before=150, assigned_after=60)
    base.update(over)
    return ConflictSample.measure(**base)


def test_conflict_sample_definitions():
    s = _sample()
    assert s.bs == 8
    assert s.abb == 0.5 and s.aab == 0.2 and s.aab_abb == pytest.approx(0.4)
    assert s.acs == pytest.approx((426 * 3 + 7) / 427)
    assert s.sd == 12 and s.bsd == 15 and s.lcs == 7 and s.ccs == 3


def test_ratio_guards():
    s = _sample(assigned_after=0, db_clauses=0)
    assert s.abb_aab == 0.0 and s.cls_var == 0.0 and s.fbc == 0.0


def test_constant_and_single_windows():
    init = static_stats(Formula(2, [(1, -2)]))
    w = ObservationWindow(WindowConfig(0, 5))
    for _ in range(5):
        w.add(_sample())
    v = w.finalize(init).as_dict()
    assert v["cls_var_min"] == v["cls_var_max"] == v["cls_var_avg"] == v["cls_var_last"]
    assert v["cls_var_sd"] == 0.0
    one = ObservationWindow(WindowConfig(0, 1))
    one.add(_sample())
    one.add_lwbe(3.0)
    vec = one.finalize(init)
    assert all(vec[n] == 0.0 for n in FEATURE_NAMES if n.endswith("_sd"))
    assert vec["lwbe_last"] == 3.0
    assert ObservationWindow(WindowConfig(0, 1)).finalize(init) is None


def test_missing_lwbe_imputed_zero():
    w = ObservationWindow(WindowConfig(0, 2))
    w.add(_sample())
    vec = w.finalize(InitFeatures(*([1.0] * 7)))
    assert all(vec[f"lwbe_{s}"] == 0.0 for s in ("min", "max", "avg", "sd", "last"))


def test_history_padding_and_augmented_vector():
    assert pad_history([None, 2.0, None], 3) == (2.0, 2.0, 2.0)
    assert pad_history([1.0, float("nan"), 3.0], 4) == (1.0, 1.0, 3.0, 3.0)
    assert pad_history([], 2) == (0.0, 0.0)
    base = FeatureVector(tuple(float(i) for i in range(64)))
    aug = AugmentedFeatureVector(base, (5.0, 6.0))
    assert aug.names[-2:] == history_names(2) == ("hist_pred_1", "hist_pred_2")
    assert aug.values[-2:] == (5.0, 6.0) and len(aug.as_dict()) == 66


def test_running_stat_against_two_pass_on_many_streams():
    rng = np.random.default_rng(0)
    streams = 1_000_000
    lengths = rng.integers(1, 4, size=streams)
    scale = 10.0 ** rng.integers(-3, 6, size=streams)
    values = rng.normal(size=(streams, 3)) * scale[:, None] + scale[:, None]
    for n in (1, 2, 3):
        rows = values[lengths == n, :n]
        ref_mean, ref_sd = rows.mean(axis=1), rows.std(axis=1)
        got_mean, got_sd = np.empty(len(rows)), np.empty(len(rows))
        for i, row in enumerate(rows.tolist()):
            rs = RunningStat()
            for x in row:
                rs.push(x)
            got_mean[i], got_sd[i] = rs.mean, rs.sd
        magnitude = np.abs(rows).max(axis=1)
        assert np.all(np.abs(got_mean - ref_mean) <= 1e-9 * np.maximum(np.abs(ref_mean), magnitude))
        assert np.all(np.abs(got_sd - ref_sd) <= 1e-9 * np.maximum(ref_sd, magnitude * 1e-6))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60))
def test_running_stat_invariants(xs):
    rs = RunningStat()
    for x in xs:
        rs.push(x)
    arr = np.array(xs)
    assert rs.min <= rs.mean + 1e-9 * (1 + abs(rs.mean)) and rs.mean <= rs.max + 1e-9 * (1 + abs(rs.mean))
    assert rs.sd >= 0 and rs.last == xs[-1]
    assert rs.mean == pytest.approx(arr.mean(), rel=1e-9, abs=1e-6)
    assert rs.sd == pytest.approx(arr.std(), rel=1e-6, abs=1e-6)
    if len(xs) == 1:
        assert rs.sd == 0.0


def test_static_stats_of_generated_instance_match_init_features():
    f = generate_random_ksat(GeneratorConfig(100, 4.3, 3, seed=0))
    s = static_stats(f)
    assert s.cls_var == pytest.approx(4.3) and math.isclose(s.var_cls, 1 / 4.3)
