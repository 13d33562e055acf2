import csv
import json
import math
import shutil
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from satcost.cnf import GeneratorConfig, generate_random_ksat, write_dimacs
from satcost.harness.cli import EXIT_CODES, main
from satcost.harness.config import EnsembleSpec, ExperimentConfig
from satcost.harness.dataset import HarnessError, read_manifest
from satcost.harness.metrics import error_factor, error_factor_log, error_factor_row, mean_log_ratio_curve
from satcost.harness.train import load_pair
from satcost.solver import solve

TINY = ExperimentConfig(
    ensemble=EnsembleSpec(min_vars=90, max_vars=110, min_ratio=4.2, max_ratio=4.6, sat_count=15, unsat_count=15,
                          min_conflicts=600, max_conflicts=20_000, max_candidates=2000),
    seed=7,
    no_restart_windows=((50, 150),),
    query_a=2,
    query_b=3,
    folds=3,
    inner_folds=2,
)


def read_rows(path: Path) -> list[dict[str, str]]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def tiny_config(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("cfg") / "tiny.json"
    path.write_text(TINY.dumps())
    return path


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory, tiny_config) -> Path:
    out = tmp_path_factory.mktemp("tiny")
    assert main(["run", "--out", str(out), "--config", str(tiny_config)]) == 0
    return out


# -- metrics ----------------------------------------------------------------------------


def test_error_factor_examples():
    assert [error_factor([100], [150], k) for k in (2, 4, 8)] == [100.0, 100.0, 100.0]
    assert error_factor([100], [900], 8) == 0.0
    truths = [10.0, 200.0, 3000.0]
    assert error_factor(truths, truths, 2) == 100.0
    tripled = [3 * t for t in truths]
    assert error_factor(tripled, truths, 2) == 0.0 and error_factor(tripled, truths, 4) == 100.0
    assert error_factor([None, 10.0], [10.0, 10.0], 2) == 50.0
    assert error_factor_log([math.log(100)], [150], 2) == 100.0
    with pytest.raises(ValueError):
        error_factor([], [], 2)
    with pytest.raises(ValueError):
        error_factor([1.0], [0.0], 2)
    with pytest.raises(ValueError):
        error_factor([1.0, 2.0], [1.0], 2)


def scalar_error_factor(preds, truths, k):
    hits = 0
    for p, t in zip(preds, truths):
        if p is not None and p > 0 and max(p / t, t / p) <= k:
            hits += 1
    return 100.0 * hits / len(truths)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.one_of(st.none(), st.floats(1e-3, 1e9)), st.floats(1.0, 1e9)), min_size=1,
                max_size=40))
def test_error_factor_matches_scalar_and_is_monotone(pairs):
    preds, truths = [p for p, _ in pairs], [t for _, t in pairs]
    row = error_factor_row("m", "x", preds, truths)
    assert list(row.percentages) == [scalar_error_factor(preds, truths, k) for k in (2, 4, 8)]
    assert row.percentages[0] <= row.percentages[1] <= row.percentages[2]
    assert all(0.0 <= p <= 100.0 for p in row.percentages)


def test_curve_examples():
    truths = {"a": 100.0, "b": 1000.0}
    streams = {i: [(c, math.log(t)) for c in range(1, int(t) + 1, 7)] for i, t in truths.items()}
    assert all(p.mean_log_ratio == 0.0 for p in mean_log_ratio_curve(streams, truths))
    doubled = {i: [(c, v + math.log(2)) for c, v in pts] for i, pts in streams.items()}
    curve = mean_log_ratio_curve(doubled, truths)
    assert all(p.mean_log_ratio == pytest.approx(math.log(2)) for p in curve)
    assert [p.instances for p in curve] == [2] * 10
    gaps = mean_log_ratio_curve({"a": [(95, None), (5, math.log(100))]}, {"a": 100.0})
    assert gaps[0].instances == 1 and gaps[9].instances == 0 and math.isnan(gaps[9].mean_log_ratio)


# -- configuration ------------------------------------------------------------------------


def test_config_roundtrip_and_unknown_keys(tmp_path):
    assert ExperimentConfig.from_dict(json.loads(TINY.dumps())) == TINY
    assert ExperimentConfig.from_dict(json.loads(ExperimentConfig().dumps())) == ExperimentConfig()
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"bogus": 1})
    assert TINY.with_seed(9).seed == 9 and TINY.with_seed(None) is TINY
    assert TINY.solver("norestart").restart_factor is None and TINY.solver("b").restart_factor == 1.2


# -- command line ------------------------------------------------------------------------


def test_usage_and_config_errors(tmp_path, capsys):
    assert main([]) == EXIT_CODES["usage"] == 2
    assert main(["frobnicate", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"nope": 3}')
    assert main(["gen", "--out", str(tmp_path / "x"), "--config", str(bad)]) == EXIT_CODES["config"] == 4
    assert "error [config]" in capsys.readouterr().err


def test_missing_inputs(tmp_path):
    assert main(["collect", "--out", str(tmp_path)]) == EXIT_CODES["missing-input"] == 3
    assert main(["train", "--out", str(tmp_path)]) == 3
    (tmp_path / "empty").mkdir()
    assert main(["gen", "--out", str(tmp_path / "e"), "--from-dir", str(tmp_path / "empty")]) == 3


def test_pipeline_artifacts(tiny_run):
    cfg, instances = read_manifest(tiny_run)
    assert cfg == TINY and len(instances) == 30
    assert len({i.id for i in instances}) == 30
    assert sum(i.label == "sat" for i in instances) == 15
    assert all(i.probe_conflicts > 600 for i in instances)
    assert len(list((tiny_run / "instances").glob("*.cnf"))) == 30
    for name in ("features_norestart.csv", "queries_a.csv", "stream_norestart.csv", "truth.csv"):
        assert (tiny_run / "collect" / name).exists()
    reports = tiny_run / "reports"
    for name in ("errors_norestart_q0.csv", "errors_a_r2.csv", "errors_b_r3.csv", "combiner.csv", "chain.csv",
                 "curves.csv", "portfolio_summary.csv", "portfolio_instances.csv"):
        assert (reports / name).exists(), name
    assert (reports / "curves_unsat.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    for row in read_rows(reports / "errors_norestart_q0.csv"):
        x2, x4, x8 = float(row["x2"]), float(row["x4"]), float(row["x8"])
        assert 0 <= x2 <= x4 <= x8 <= 100


def test_report_rows_recomputed_from_collected_queries(tiny_run):
    queries = read_rows(tiny_run / "collect" / "queries_norestart.csv")
    report = {(r["method"], r["label"]): r for r in read_rows(tiny_run / "reports" / "errors_norestart_q0.csv")}
    for label in ("sat", "unsat"):
        rows = [q for q in queries if q["label"] == label and q["chain_index"] == "0"]
        truths = [float(q["truth_conflicts"]) for q in rows]
        wbe = [2 ** float(q["wbe_log2_total"]) if q["wbe_log2_total"] else None for q in rows]
        pb = [float(q["pb_total"]) if q["pb_total"] else None for q in rows]
        for method, preds in (("WBE", wbe), ("PB", pb)):
            got = report[(method, label)]
            assert int(got["n"]) == len(rows)
            for k in (2, 4, 8):
                assert float(got[f"x{k}"]) == pytest.approx(scalar_error_factor(preds, truths, k), abs=1e-9)


def test_ground_truth_equals_independent_resolve(tiny_run):
    cfg, instances = read_manifest(tiny_run)
    truth = {r["instance"]: r for r in read_rows(tiny_run / "collect" / "truth.csv")}
    for inst in instances[:6]:
        for name in ("norestart", "a", "b"):
            out = solve(inst.formula(), cfg.solver(name))
            assert truth[inst.id][f"status_{name}"] == out.status
            assert int(truth[inst.id][f"conflicts_{name}"]) == out.total_conflicts


def test_rerun_from_manifest_is_byte_identical(tiny_run, tmp_path):
    copy = tmp_path / "again"
    copy.mkdir()
    shutil.copy(tiny_run / "manifest.json", copy / "manifest.json")
    for cmd in ("collect", "train", "evaluate", "curves", "portfolio"):
        assert main([cmd, "--out", str(copy)]) == 0
    for sub in ("collect", "models", "reports"):
        for path in sorted((tiny_run / sub).iterdir()):
            assert (copy / sub / path.name).read_bytes() == path.read_bytes(), path.name


def test_pinned_seed_conflict(tiny_run):
    assert main(["train", "--out", str(tiny_run), "--seed", "99"]) == EXIT_CODES["config"]


def test_schema_mismatch(tiny_run, tmp_path):
    work = tmp_path / "w"
    shutil.copytree(tiny_run, work)
    path = work / "models" / "a_r2.json"
    doc = json.loads(path.read_text())
    doc["sat_model"]["metadata"]["feature_universe"] = ["x", "y"]
    path.write_text(json.dumps(doc))
    with pytest.raises(HarnessError):
        load_pair(path)
    assert main(["portfolio", "--out", str(work)]) == EXIT_CODES["schema"] == 7
    path.write_text("{not json")
    assert main(["portfolio", "--out", str(work)]) == 7


def test_ground_truth_mismatch(tiny_run, tmp_path):
    work = tmp_path / "w"
    work.mkdir()
    doc = json.loads((tiny_run / "manifest.json").read_text())
    doc["instances"] = doc["instances"][:1]
    doc["instances"][0]["label"] = "unsat" if doc["instances"][0]["label"] == "sat" else "sat"
    (work / "manifest.json").write_text(json.dumps(doc))
    assert main(["collect", "--out", str(work)]) == EXIT_CODES["ground-truth"] == 6


def test_directory_ingestion(tmp_path):
    src = tmp_path / "cnf"
    src.mkdir()
    labels = {}
    for seed in range(4):
        f = generate_random_ksat(GeneratorConfig(40, 4.4 if seed % 2 else 3.5, 3, seed))
        (src / f"inst{seed}.cnf").write_bytes(write_dimacs(f))
        labels[f"inst{seed}"] = solve(f, TINY.solver("norestart")).status
    (src / "notes.txt").write_text("ignored")
    out = tmp_path / "exp"
    assert main(["gen", "--out", str(out), "--from-dir", str(src)]) == 0
    _, instances = read_manifest(out)
    assert {i.id: i.label for i in instances} == labels
    assert all(i.seed is None and Path(i.path).exists() for i in instances)
    assert not (out / "instances").exists()


def test_jobs_do_not_change_results(tmp_path, tiny_config):
    small = ExperimentConfig(ensemble=EnsembleSpec(min_vars=60, max_vars=70, sat_count=3, unsat_count=3,
                                                   min_conflicts=50, max_candidates=500), seed=3)
    cfg = tmp_path / "c.json"
    cfg.write_text(small.dumps())
    for jobs in ("1", "2"):
        assert main(["gen", "--out", str(tmp_path / jobs), "--config", str(cfg), "--jobs", jobs]) == 0
    assert (tmp_path / "1" / "manifest.json").read_bytes() == (tmp_path / "2" / "manifest.json").read_bytes()
    assert np.array_equal(*(np.array([i.probe_conflicts for i in read_manifest(tmp_path / j)[1]]) for j in "12"))
