"""Ensemble generation, directory ingestion and the manifest that pins them down."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from ..cnf import Formula, GeneratorConfig, generate_random_ksat, read_dimacs_file, write_dimacs
from ..solver.core import Solver
from .config import ExperimentConfig

MANIFEST = "manifest.json"


class HarnessError(RuntimeError):
    """Raised with a category so the CLI can report it and exit nonzero."""

    def __init__(self, category: str, message: str):
        super().__init__(f"{category}: {message}")
        self.category = category


@dataclass(frozen=True)
class Instance:
    id: str
    label: str  # sat | unsat
    probe_conflicts: int
    num_vars: int
    ratio: float | None = None
    k: int | None = None
    seed: int | None = None
    path: str | None = None

    def formula(self, root: Path | None = None) -> Formula:
        if self.seed is not None and self.ratio is not None:
            return generate_random_ksat(GeneratorConfig(self.num_vars, self.ratio, self.k or 3, self.seed))
        path = Path(self.path)
        if root is not None and not path.is_absolute():
            path = root / path
        return read_dimacs_file(path)


def parallel_map(fn: Callable, items: Sequence, jobs: int) -> list:
    """Ordered map; a process pool when ``jobs > 1``."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def candidate_stream(cfg: ExperimentConfig) -> Iterator[tuple[str, GeneratorConfig]]:
    spec = cfg.ensemble
    rng = np.random.default_rng(cfg.seed)
    for i in range(spec.max_candidates):
        n = int(rng.integers(spec.min_vars, spec.max_vars + 1))
        ratio = round(float(rng.uniform(spec.min_ratio, spec.max_ratio)), 3)
        seed = int(rng.integers(0, 2**63 - 1))
        yield f"rand-{i:05d}", GeneratorConfig(n, ratio, spec.k, seed)


def _probe(args) -> tuple[str, int]:
    gen, solver_cfg = args
    out = Solver(generate_random_ksat(gen), solver_cfg).run()
    return out.status, out.total_conflicts


def generate_ensemble(cfg: ExperimentConfig, jobs: int = 1, progress: Callable[[str], None] | None = None
                      ) -> list[Instance]:
    """Scan seeded candidates in order, keeping the first that fill each label quota.

    Candidates are solved once without restarts; only instances that outlive
    ``min_conflicts`` (so every one reaches the first query point) and finish
    within ``max_conflicts`` are kept.
    """
    spec = cfg.ensemble
    probe_cfg = cfg.solver("norestart")
    want = {"sat": spec.sat_count, "unsat": spec.unsat_count}
    kept: list[Instance] = []
    batch = max(1, 16 * jobs)
    stream = candidate_stream(cfg)
    scanned = 0
    while any(want.values()):
        chunk = [c for _, c in zip(range(batch), stream)]
        if not chunk:
            raise HarnessError("ensemble", f"quota not met after {scanned} candidates: still need {want}")
        results = parallel_map(_probe, [(g, probe_cfg) for _, g in chunk], jobs)
        for (iid, gen), (status, conflicts) in zip(chunk, results):
            scanned += 1
            if status not in want or want[status] == 0 or conflicts <= spec.min_conflicts:
                continue
            want[status] -= 1
            kept.append(Instance(iid, status, conflicts, gen.num_vars, gen.ratio, gen.k, gen.seed))
        if progress:
            progress(f"scanned {scanned} candidates, kept {len(kept)}")
    return kept


def ingest_directory(directory: str | Path, cfg: ExperimentConfig, jobs: int = 1) -> list[Instance]:
    """Label every ``*.cnf`` file in a directory by solving it; no filtering."""
    paths = sorted(Path(directory).glob("*.cnf"))
    if not paths:
        raise HarnessError("missing-input", f"no .cnf files in {directory}")
    results = parallel_map(_solve_path, [(str(p), cfg.solver("norestart")) for p in paths], jobs)
    out = []
    for path, (status, conflicts, nv) in zip(paths, results):
        if status == "budget_exhausted":
            continue
        out.append(Instance(path.stem, status, conflicts, nv, path=str(path)))
    return out


def _solve_path(args):
    path, solver_cfg = args
    formula = read_dimacs_file(path)
    out = Solver(formula, solver_cfg).run()
    return out.status, out.total_conflicts, formula.num_vars


def write_manifest(out: Path, cfg: ExperimentConfig, instances: Iterable[Instance], write_cnf: bool = True) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    instances = sorted(instances, key=lambda x: x.id)
    if write_cnf:
        cnf_dir = out / "instances"
        cnf_dir.mkdir(exist_ok=True)
        for inst in instances:
            if inst.seed is not None:
                formula = inst.formula()
                (cnf_dir / f"{inst.id}.cnf").write_bytes(write_dimacs(formula, [formula.origin]))
    doc = {"config": cfg.to_dict(), "instances": [asdict(i) for i in instances]}
    path = out / MANIFEST
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_manifest(out: Path) -> tuple[ExperimentConfig, list[Instance]]:
    path = out / MANIFEST
    if not path.exists():
        raise HarnessError("missing-input", f"{path} not found; run 'gen' first")
    doc = json.loads(path.read_text())
    cfg = ExperimentConfig.from_dict(doc["config"])
    return cfg, [Instance(**d) for d in doc["instances"]]
