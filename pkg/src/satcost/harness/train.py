"""Fit deployable model files on the full collected dataset."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..features import FEATURE_NAMES, history_names
from ..lmp import LabeledSet, LmpModelPair, train_pair
from ..regress import RidgeModel
from .collect import Collection
from .config import ExperimentConfig
from .dataset import HarnessError


def _meta(config: str, chain_index: int, restart: int, history: int, cfg: ExperimentConfig) -> dict:
    return {"config": config, "chain_index": chain_index, "query_restart": restart, "history_length": history,
            "seed": cfg.seed}


def _in_sample(model: RidgeModel, data: LabeledSet) -> np.ndarray:
    cols = [data.names.index(n) for n in model.retained_features]
    return model.predict_matrix(data.X[:, cols])


def train_all(collection: Collection, cfg: ExperimentConfig, out: Path) -> list[Path]:
    """One pair per no-restart query point, per race query restart, and per chain step of solver a.

    Chain step r is trained on x_r plus in-sample predictions of the same
    label's earlier steps.
    """
    out.mkdir(parents=True, exist_ok=True)
    tc = cfg.train_config()
    written = []

    def save(name: str, pair: LmpModelPair) -> None:
        path = out / f"{name}.json"
        path.write_text(pair.dumps() + "\n")
        written.append(path)

    for chain in collection.chain_indices("norestart"):
        data = collection.labeled_set("norestart", chain)
        if min(int(data.sat.sum()), int((~data.sat).sum())) < tc.folds:
            continue
        save(f"norestart_q{chain}", train_pair(data, tc, cfg.training_cap, _meta("norestart", chain, 0, 0, cfg)))
    for name in ("a", "b"):
        restart = cfg.query_restart(name)
        chains = {r: c for c, r in collection.restart_of_chain(name).items()}
        if restart not in chains:
            raise HarnessError("missing-input", f"no feature vectors at restart {restart} for solver {name}")
        data = collection.labeled_set(name, chains[restart])
        save(f"{name}_r{restart}", train_pair(data, tc, cfg.training_cap,
                                              _meta(name, chains[restart], restart, 0, cfg)))
    restart_of = collection.restart_of_chain("a")
    chain = [c for c in collection.chain_indices("a") if restart_of[c] <= cfg.query_a]
    history: dict[str, list[float]] = {}
    for r, c in enumerate(chain):
        data = collection.labeled_set("a", c)
        if r:
            data = data.with_history(np.array([history[i][:r] for i in data.ids]))
        try:
            pair = train_pair(data, tc, cfg.training_cap, _meta("a", c, restart_of[c], r, cfg))
        except ValueError:
            break
        save(f"a_chain{r}", pair)
        sat_in, unsat_in = _in_sample(pair.sat_model, data), _in_sample(pair.unsat_model, data)
        for i, s, ps, pu in zip(data.ids, data.sat, sat_in, unsat_in):
            history.setdefault(i, []).append(float(ps if s else pu))
    (out / "index.json").write_text(json.dumps(sorted(p.name for p in written), indent=2) + "\n")
    return written


def load_pair(path: Path) -> LmpModelPair:
    try:
        pair = LmpModelPair.loads(path.read_text())
    except (ValueError, KeyError) as exc:
        raise HarnessError("schema", f"{path}: {exc}") from None
    expected = FEATURE_NAMES + history_names(pair.history_length)
    for model in (pair.sat_model, pair.unsat_model):
        universe = tuple(model.metadata.get("feature_universe", ()))
        if universe != expected:
            raise HarnessError("schema", f"{path}: model features do not match this build's feature vector")
    return pair
