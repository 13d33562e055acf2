"""Ridge regression with standardization, AIC backward elimination, VIF pruning and grouped CV."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_LAMBDAS = (1e-6, 1e-4, 1e-2, 1.0, 10.0, 100.0)
FORMAT_VERSION = 1


class RegressionError(ValueError):
    pass


def schema_hash(names: Sequence[str]) -> str:
    return hashlib.sha256("\n".join(names).encode()).hexdigest()[:16]


def dataset_hash(X: np.ndarray, y: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(y, dtype=np.float64).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class Standardizer:
    mean: tuple[float, ...]
    sd: tuple[float, ...]

    @classmethod
    def fit(cls, X: np.ndarray) -> Standardizer:
        sd = X.std(axis=0)
        if np.any(sd <= 0):
            raise RegressionError("zero-variance column; drop it before standardizing")
        return cls(tuple(X.mean(axis=0).tolist()), tuple(sd.tolist()))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - np.asarray(self.mean)) / np.asarray(self.sd)

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return Z * np.asarray(self.sd) + np.asarray(self.mean)


@dataclass(frozen=True)
class RidgeModel:
    """Weights live in standardized space; ``raw_coefficients`` maps them back."""

    weights: tuple[float, ...]
    intercept: float
    lam: float
    retained_features: tuple[str, ...]
    standardizer: Standardizer
    metadata: dict = field(default_factory=dict, compare=False)

    def predict_standardized(self, Z: np.ndarray) -> np.ndarray:
        Z = np.atleast_2d(Z)
        if not self.weights:
            return np.full(Z.shape[0], self.intercept)
        return Z @ np.asarray(self.weights) + self.intercept

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        """Rows of ``X`` hold the retained features, in order."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if not self.weights:
            return np.full(X.shape[0], self.intercept)
        return self.predict_standardized(self.standardizer.transform(X))

    def predict(self, values: dict[str, float]) -> float:
        try:
            row = [values[name] for name in self.retained_features]
        except KeyError as exc:
            raise RegressionError(f"missing feature {exc.args[0]!r}") from None
        return float(self.predict_matrix(np.array([row]))[0])

    def raw_coefficients(self) -> tuple[np.ndarray, float]:
        w = np.asarray(self.weights) / np.asarray(self.standardizer.sd) if self.weights else np.zeros(0)
        b = self.intercept - float(np.dot(w, self.standardizer.mean)) if self.weights else self.intercept
        return w, b

    # -- persistence ---------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": "satcost-ridge",
            "version": FORMAT_VERSION,
            "lambda": self.lam,
            "retained_features": list(self.retained_features),
            "schema_hash": schema_hash(self.metadata.get("feature_universe", self.retained_features)),
            "standardizer": {"mean": list(self.standardizer.mean), "sd": list(self.standardizer.sd)},
            "weights": list(self.weights),
            "intercept": self.intercept,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> RidgeModel:
        if doc.get("format") != "satcost-ridge":
            raise RegressionError("not a ridge model document")
        meta = dict(doc.get("metadata", {}))
        universe = meta.get("feature_universe", doc["retained_features"])
        if schema_hash(universe) != doc["schema_hash"]:
            raise RegressionError("schema hash mismatch")
        return cls(
            weights=tuple(float(w) for w in doc["weights"]),
            intercept=float(doc["intercept"]),
            lam=float(doc["lambda"]),
            retained_features=tuple(doc["retained_features"]),
            standardizer=Standardizer(tuple(doc["standardizer"]["mean"]), tuple(doc["standardizer"]["sd"])),
            metadata=meta,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> RidgeModel:
        return cls.from_dict(json.loads(text))


# -- fitting ---------------------------------------------------------------------------


def _check(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.shape[0]:
        raise RegressionError("X and y disagree on the number of rows")
    if X.shape[0] < 2:
        raise RegressionError("need at least two rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise RegressionError("non-finite input")
    return X, y


def _solve(Z: np.ndarray, y: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    """Least squares on [1 Z; 0 sqrt(lam) I] with an unpenalized intercept."""
    n, p = Z.shape
    if p == 0:
        return np.zeros(0), float(y.mean())
    A = np.zeros((n + p, p + 1))
    A[:n, 0] = 1.0
    A[:n, 1:] = Z
    A[n:, 1:] = math.sqrt(lam) * np.eye(p)
    b = np.concatenate([y, np.zeros(p)])
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol[1:], float(sol[0])


def fit_ridge(X, y, lam: float, names: Sequence[str] | None = None) -> RidgeModel:
    """Fit on standardized features; zero-variance columns are dropped first."""
    if lam < 0:
        raise RegressionError("lambda must be >= 0")
    X, y = _check(X, y)
    names = tuple(names) if names is not None else tuple(f"x{i + 1}" for i in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise RegressionError("names do not match columns")
    keep = X.std(axis=0) > 0
    X = X[:, keep]
    kept = tuple(n for n, k in zip(names, keep) if k)
    if kept:
        std = Standardizer.fit(X)
        w, b = _solve(std.transform(X), y, lam)
    else:
        std = Standardizer((), ())
        w, b = np.zeros(0), float(y.mean())
    return RidgeModel(tuple(w.tolist()), b, float(lam), kept, std)


def rss(model: RidgeModel, X: np.ndarray, y: np.ndarray) -> float:
    r = y - model.predict_matrix(X)
    return float(np.dot(r, r))


def aic(rss_value: float, n: int, k: int, floor: float = 0.0) -> float:
    return n * math.log(max(rss_value, floor) / n) + 2 * k


def _columns(names: Sequence[str], subset: Sequence[str]) -> list[int]:
    index = {n: i for i, n in enumerate(names)}
    return [index[s] for s in subset]


def backward_eliminate_aic(X, y, lam: float, names: Sequence[str] | None = None) -> tuple[str, ...]:
    """Drop the smallest |standardized weight| while that lowers AIC = n ln(RSS/n) + 2k."""
    X, y = _check(X, y)
    names = tuple(names) if names is not None else tuple(f"x{i + 1}" for i in range(X.shape[1]))
    if len(names) < 2:
        return names
    n = len(y)
    # identical fits below rounding noise count as ties, so parsimony decides
    floor = n * (np.finfo(float).eps * (1.0 + float(np.max(np.abs(y))))) ** 2

    def score(subset):
        model = fit_ridge(X[:, _columns(names, subset)], y, lam, subset)
        return model, aic(rss(model, X[:, _columns(names, model.retained_features)], y), n,
                          len(model.retained_features) + 1, floor)

    current = tuple(n_ for n_, s in zip(names, X.std(axis=0)) if s > 0)
    model, best = score(current)
    while model.retained_features:
        weakest = int(np.argmin(np.abs(model.weights)))
        candidate = tuple(f for i, f in enumerate(model.retained_features) if i != weakest)
        cand_model, cand_aic = score(candidate)
        if not cand_aic < best:
            break
        model, best = cand_model, cand_aic
    return model.retained_features


def variance_inflation(X: np.ndarray) -> np.ndarray:
    """VIF of every column: 1/(1 - R^2) from regressing it on the others; inf when exact."""
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    out = np.ones(p)
    if p < 2:
        return out
    for j in range(p):
        target = X[:, j] - X[:, j].mean()
        tss = float(np.dot(target, target))
        if tss == 0:
            out[j] = math.inf
            continue
        others = np.delete(X, j, axis=1)
        A = np.column_stack([np.ones(n), others])
        coef, *_ = np.linalg.lstsq(A, X[:, j], rcond=None)
        resid = X[:, j] - A @ coef
        r = float(np.dot(resid, resid))
        out[j] = math.inf if r <= 1e-12 * tss else tss / r
    return out


def eliminate_collinear(X, names: Sequence[str], retained: Sequence[str] | None = None,
                        threshold: float = 10.0) -> tuple[str, ...]:
    X = np.asarray(X, dtype=np.float64)
    current = list(retained if retained is not None else names)
    while len(current) > 1:
        vif = variance_inflation(X[:, _columns(names, current)])
        top = float(np.max(vif))
        if not top > threshold:
            break
        # ties go to the later feature
        worst = max(i for i, v in enumerate(vif) if v == top)
        del current[worst]
    return tuple(current)


# -- training pipeline and cross-validation -------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDAS
    folds: int = 10
    inner_folds: int = 5
    vif_threshold: float = 10.0
    aic_elimination: bool = True
    collinear_elimination: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2 or self.inner_folds < 2:
            raise ValueError("need at least two folds")
        if not self.lambda_grid:
            raise ValueError("lambda grid is empty")

    def to_dict(self) -> dict:
        return {
            "lambda_grid": list(self.lambda_grid),
            "folds": self.folds,
            "inner_folds": self.inner_folds,
            "vif_threshold": self.vif_threshold,
            "aic_elimination": self.aic_elimination,
            "collinear_elimination": self.collinear_elimination,
            "seed": self.seed,
        }


def group_folds(groups: Sequence, folds: int, seed: int) -> np.ndarray:
    """Fold index per row; every group lands in exactly one fold."""
    uniq = sorted(set(groups), key=str)
    if len(uniq) < folds:
        raise RegressionError(f"{len(uniq)} instances cannot fill {folds} folds")
    order = np.random.default_rng(seed).permutation(len(uniq))
    fold_of_group = {uniq[g]: i % folds for i, g in enumerate(order)}
    return np.array([fold_of_group[g] for g in groups], dtype=np.int64)


def select_lambda(X, y, names, groups, cfg: TrainConfig) -> float:
    X, y = _check(X, y)
    # every inner training part keeps at least two rows
    k = min(cfg.inner_folds, len(set(groups)) // 2)
    if k < 2:
        return cfg.lambda_grid[0]
    fold = group_folds(groups, k, cfg.seed + 1)
    best, best_err = cfg.lambda_grid[0], math.inf
    for lam in cfg.lambda_grid:
        err = 0.0
        for f in range(k):
            train, test = fold != f, fold == f
            model = fit_ridge(X[train], y[train], lam, names)
            cols = _columns(names, model.retained_features)
            r = y[test] - model.predict_matrix(X[test][:, cols])
            err += float(np.dot(r, r))
        if err < best_err:
            best, best_err = lam, err
    return best


def train_model(X, y, names: Sequence[str], cfg: TrainConfig, groups: Sequence | None = None) -> RidgeModel:
    """Lambda by inner CV, then AIC backward elimination, then VIF pruning, then the final fit."""
    X, y = _check(X, y)
    names = tuple(names)
    groups = list(range(len(y))) if groups is None else list(groups)
    lam = select_lambda(X, y, names, groups, cfg)
    retained = tuple(n for n, s in zip(names, X.std(axis=0)) if s > 0)
    if cfg.aic_elimination and len(retained) > 1:
        retained = backward_eliminate_aic(X[:, _columns(names, retained)], y, lam, retained)
    if cfg.collinear_elimination and len(retained) > 1:
        retained = eliminate_collinear(X, names, retained, cfg.vif_threshold)
    model = fit_ridge(X[:, _columns(names, retained)], y, lam, retained)
    meta = {
        "feature_universe": list(names),
        "dataset_hash": dataset_hash(X, y),
        "fold_seed": cfg.seed,
        "rows": int(len(y)),
        "train_config": cfg.to_dict(),
    }
    return RidgeModel(model.weights, model.intercept, model.lam, model.retained_features,
                      model.standardizer, meta)


@dataclass
class CrossValidation:
    predictions: np.ndarray
    fold: np.ndarray
    lambdas: list[float]
    models: list[RidgeModel]


def cross_validate(X, y, names: Sequence[str], cfg: TrainConfig, groups: Sequence | None = None) -> CrossValidation:
    """Out-of-fold predictions; rows sharing a group never straddle train and test."""
    X, y = _check(X, y)
    groups = list(range(len(y))) if groups is None else list(groups)
    fold = group_folds(groups, cfg.folds, cfg.seed)
    pred = np.full(len(y), np.nan)
    lambdas, models = [], []
    for f in range(cfg.folds):
        train, test = fold != f, fold == f
        model = train_model(X[train], y[train], names, cfg, [g for g, t in zip(groups, train) if t])
        cols = _columns(names, model.retained_features)
        pred[test] = model.predict_matrix(X[test][:, cols])
        lambdas.append(model.lam)
        models.append(model)
    return CrossValidation(pred, fold, lambdas, models)
