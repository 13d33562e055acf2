"""Linear model prediction: sat/unsat model pairs, query modes and restart chaining.

Targets and predictions are natural logs of total conflicts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .features import AugmentedFeatureVector, FeatureVector, history_names
from .regress import CrossValidation, RidgeModel, TrainConfig, cross_validate, group_folds, train_model

MODES = ("oracle-sat", "oracle-unsat", "geometric-mean")
TRAINING_CAP = 500


class LmpError(ValueError):
    pass


class PredictionRecord(NamedTuple):
    restart_index: int
    log_conflicts_pred: float
    mode: str
    sat_pred: float
    unsat_pred: float

    @property
    def conflicts(self) -> float:
        return math.exp(self.log_conflicts_pred)


@dataclass(frozen=True)
class LmpModelPair:
    sat_model: RidgeModel
    unsat_model: RidgeModel
    # query restart, chain position, expected history length, training details
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def history_length(self) -> int:
        return int(self.metadata.get("history_length", 0))

    @property
    def single(self) -> bool:
        return self.metadata.get("kind") == "single"

    def to_dict(self) -> dict:
        return {
            "format": "satcost-lmp-pair",
            "metadata": self.metadata,
            "sat_model": self.sat_model.to_dict(),
            "unsat_model": self.unsat_model.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> LmpModelPair:
        if doc.get("format") != "satcost-lmp-pair":
            raise LmpError("not a model-pair document")
        return cls(RidgeModel.from_dict(doc["sat_model"]), RidgeModel.from_dict(doc["unsat_model"]),
                   dict(doc.get("metadata", {})))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> LmpModelPair:
        return cls.from_dict(json.loads(text))


def _values(v: FeatureVector | AugmentedFeatureVector | dict) -> dict[str, float]:
    return v if isinstance(v, dict) else v.as_dict()


def predict(pair: LmpModelPair, v, mode: str = "geometric-mean", restart_index: int = 0) -> PredictionRecord:
    if mode not in MODES:
        raise LmpError(f"unknown mode {mode!r}")
    values = _values(v)
    try:
        sat = pair.sat_model.predict(values)
        unsat = pair.unsat_model.predict(values)
    except ValueError as exc:
        raise LmpError(str(exc)) from None
    if mode == "oracle-sat":
        out = sat
    elif mode == "oracle-unsat":
        out = unsat
    else:
        # geometric mean in conflicts = arithmetic mean in log space
        out = 0.5 * (sat + unsat)
    return PredictionRecord(restart_index, out, mode, sat, unsat)


def predict_chain(pairs: Sequence[LmpModelPair], vectors: Sequence[FeatureVector], mode: str = "geometric-mean",
                  restart_indices: Sequence[int] | None = None) -> list[PredictionRecord]:
    """Predict along a restart chain, feeding each step the chain's own earlier outputs."""
    if len(vectors) > len(pairs):
        raise LmpError("more windows than chained models")
    out: list[PredictionRecord] = []
    for r, vector in enumerate(vectors):
        pair = pairs[r]
        if pair.history_length != r:
            raise LmpError(f"chain step {r} model expects history length {pair.history_length}")
        history = tuple(p.log_conflicts_pred for p in out)
        v = AugmentedFeatureVector(vector, history) if history else vector
        idx = restart_indices[r] if restart_indices is not None else r
        out.append(predict(pair, v, mode, idx))
    return out


# -- training ---------------------------------------------------------------------


def cap_training(ids: Sequence, cap: int = TRAINING_CAP, seed: int = 0) -> list:
    """At most ``cap`` ids, chosen by a seeded draw and returned in their original order."""
    ids = list(ids)
    if len(ids) <= cap:
        return ids
    keep = np.sort(np.random.default_rng(seed).choice(len(ids), cap, replace=False))
    return [ids[i] for i in keep]


@dataclass
class LabeledSet:
    """Rows of one query point: instance ids, sat labels, features and log targets."""

    ids: list[str]
    sat: np.ndarray
    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]

    def subset(self, mask) -> LabeledSet:
        mask = np.asarray(mask, dtype=bool)
        return LabeledSet([i for i, m in zip(self.ids, mask) if m], self.sat[mask], self.X[mask], self.y[mask],
                          self.names)

    def with_history(self, history: np.ndarray) -> LabeledSet:
        history = np.atleast_2d(history.T).T if history.ndim == 1 else history
        names = self.names + history_names(history.shape[1])
        return LabeledSet(self.ids, self.sat, np.hstack([self.X, history]), self.y, names)

    def __len__(self) -> int:
        return len(self.ids)


def _fit_label(data: LabeledSet, cfg: TrainConfig, cap: int, label: str) -> RidgeModel:
    if len(data) < 2:
        raise LmpError(f"{len(data)} {label} instances are too few to fit a model")
    ids = cap_training(data.ids, cap, cfg.seed)
    chosen = set(ids)
    data = data.subset([i in chosen for i in data.ids])
    return train_model(data.X, data.y, data.names, cfg, data.ids)


def train_pair(data: LabeledSet, cfg: TrainConfig, cap: int = TRAINING_CAP, metadata: dict | None = None,
               single: bool = False) -> LmpModelPair:
    """One model per label (or one mixed model when ``single``)."""
    meta = dict(metadata or {})
    if single:
        model = _fit_label(data, cfg, cap, "mixed")
        meta["kind"] = "single"
        return LmpModelPair(model, model, meta)
    sat = _fit_label(data.subset(data.sat), cfg, cap, "sat")
    unsat = _fit_label(data.subset(~data.sat), cfg, cap, "unsat")
    meta["kind"] = "pair"
    return LmpModelPair(sat, unsat, meta)


@dataclass
class PairCV:
    """Out-of-fold log predictions of both label models for every row."""

    sat_pred: np.ndarray
    unsat_pred: np.ndarray
    fold: np.ndarray

    def combined(self, mode: str, sat_labels: np.ndarray | None = None) -> np.ndarray:
        if mode == "oracle-sat":
            return self.sat_pred
        if mode == "oracle-unsat":
            return self.unsat_pred
        if mode == "geometric-mean":
            return 0.5 * (self.sat_pred + self.unsat_pred)
        if mode == "oracle":
            return np.where(sat_labels, self.sat_pred, self.unsat_pred)
        raise LmpError(f"unknown mode {mode!r}")


def cross_validate_pair(data: LabeledSet, cfg: TrainConfig, single: bool = False) -> PairCV:
    """Instance-disjoint folds over all rows; each fold trains a fresh pair on its training part."""
    fold = group_folds(data.ids, cfg.folds, cfg.seed)
    sat_pred = np.full(len(data), np.nan)
    unsat_pred = np.full(len(data), np.nan)
    for f in range(cfg.folds):
        train = data.subset(fold != f)
        test = fold == f
        pair = train_pair(train, cfg, single=single)
        for model, out in ((pair.sat_model, sat_pred), (pair.unsat_model, unsat_pred)):
            cols = [data.names.index(n) for n in model.retained_features]
            out[test] = model.predict_matrix(data.X[test][:, cols])
    return PairCV(sat_pred, unsat_pred, fold)


def label_cross_validate(data: LabeledSet, cfg: TrainConfig) -> CrossValidation:
    """CV of a single label subset (the oracle-mode evaluation of one model)."""
    return cross_validate(data.X, data.y, data.names, cfg, data.ids)


def chain_cross_validate(positions: Sequence[LabeledSet], cfg: TrainConfig, augmented: bool = True
                         ) -> list[dict[str, float]]:
    """Out-of-fold chain predictions for one label, per chain position.

    ``positions[r]`` holds the rows of chain step r; every instance present at
    step r is present at all earlier steps.  In each fold the step-r model is
    trained on the training instances with their in-sample chain history, and
    the test instances are predicted along the fold's own chain.
    """
    ids0 = positions[0].ids
    fold_of = dict(zip(ids0, group_folds(ids0, cfg.folds, cfg.seed)))
    out: list[dict[str, float]] = [{} for _ in positions]
    for f in range(cfg.folds):
        train_hist: dict[str, list[float]] = {}
        test_hist: dict[str, list[float]] = {}
        for r, step in enumerate(positions):
            is_test = np.array([fold_of[i] == f for i in step.ids], dtype=bool)
            data = step
            if augmented and r > 0:
                hist = np.array([(test_hist if t else train_hist)[i] for i, t in zip(step.ids, is_test)])
                data = step.with_history(hist)
            train = data.subset(~is_test)
            if len(train) < 2:
                break
            model = train_model(train.X, train.y, train.names, cfg, train.ids)
            cols = [data.names.index(n) for n in model.retained_features]
            pred = model.predict_matrix(data.X[:, cols])
            for i, t, p in zip(step.ids, is_test, pred.tolist()):
                (test_hist if t else train_hist).setdefault(i, []).append(p)
                if t:
                    out[r][i] = p
    return out
