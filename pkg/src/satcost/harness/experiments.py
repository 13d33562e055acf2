"""Evaluations over a collected dataset: error-factor tables, curves, combiner, chaining, portfolio."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..lmp import LabeledSet, chain_cross_validate, cross_validate_pair
from ..portfolio import RaceResult, settle, summarize
from .collect import Collection, stream_by_instance
from .config import ExperimentConfig
from .io import opt_float
from .metrics import CurvePoint, ErrorFactorRow, error_factor_log, error_factor_row, mean_log_ratio_curve

LN2 = math.log(2.0)
LABELS = ("sat", "unsat")


def _log2_to_ln(x: float | None) -> float | None:
    return None if x is None else x * LN2


def _ln(x: float | None) -> float | None:
    return None if x is None or x <= 0 else math.log(x)


@dataclass
class QueryEvaluation:
    """Everything measured at one query point of one solver configuration."""

    config: str
    chain_index: int
    ids: list[str]
    labels: np.ndarray  # True for sat
    truth: np.ndarray  # conflicts
    wbe: list[float | None]  # natural-log predictions
    pb: list[float | None]
    sat_pred: np.ndarray
    unsat_pred: np.ndarray
    rows: list[ErrorFactorRow] = field(default_factory=list)

    @property
    def oracle_pred(self) -> np.ndarray:
        return np.where(self.labels, self.sat_pred, self.unsat_pred)

    @property
    def gm_pred(self) -> np.ndarray:
        return 0.5 * (self.sat_pred + self.unsat_pred)

    def by_id(self) -> dict[str, int]:
        return {i: n for n, i in enumerate(self.ids)}


def evaluate_query(collection: Collection, cfg: ExperimentConfig, config: str, chain_index: int
                   ) -> QueryEvaluation | None:
    """Cross-validated LMP next to the WBE and PB-like estimates at one query point.

    Returns None when a label has fewer instances than folds.
    """
    data = collection.labeled_set(config, chain_index)
    if min(int(data.sat.sum()), int((~data.sat).sum())) < cfg.folds:
        return None
    tc = cfg.train_config()
    cv = cross_validate_pair(data, tc)
    qrows = {r["instance"]: r for r in collection.query_rows(config, chain_index)}
    truth = np.array([int(qrows[i]["truth_conflicts"]) for i in data.ids], dtype=np.float64)
    wbe = [_log2_to_ln(opt_float(qrows[i]["wbe_log2_total"])) for i in data.ids]
    pb = [_ln(opt_float(qrows[i]["pb_total"])) for i in data.ids]
    ev = QueryEvaluation(config, chain_index, data.ids, data.sat, truth, wbe, pb, cv.sat_pred, cv.unsat_pred)
    for label in LABELS:
        mask = data.sat if label == "sat" else ~data.sat
        t = truth[mask].tolist()
        pick = lambda seq: [v for v, m in zip(seq, mask) if m]  # noqa: E731
        ev.rows.append(error_factor_row("PB", label, pick(pb), t, cfg.factors, log=True))
        ev.rows.append(error_factor_row("WBE", label, pick(wbe), t, cfg.factors, log=True))
        ev.rows.append(error_factor_row("LMP", label, ev.oracle_pred[mask].tolist(), t, cfg.factors, log=True))
        ev.rows.append(error_factor_row("LMP(AVG)", label, ev.gm_pred[mask].tolist(), t, cfg.factors, log=True))
    return ev


def row(ev: QueryEvaluation, method: str, label: str) -> ErrorFactorRow:
    return next(r for r in ev.rows if r.method == method and r.label == label)


# -- combiner -------------------------------------------------------------------------


@dataclass
class CombinerCheck:
    between_all: bool
    violations: int
    ef8_combined: float
    ef8_oracle_sat: float
    ef8_oracle_unsat: float
    per_label: dict[str, tuple[float, ...]]


def combiner_check(ev: QueryEvaluation, factors=(2, 4, 8)) -> CombinerCheck:
    lo = np.minimum(ev.sat_pred, ev.unsat_pred)
    hi = np.maximum(ev.sat_pred, ev.unsat_pred)
    gm = ev.gm_pred
    ok = (gm >= lo) & (gm <= hi)
    truth = ev.truth.tolist()
    sat, uns = ev.labels, ~ev.labels
    ef8_sat = error_factor_log(ev.sat_pred[sat].tolist(), ev.truth[sat].tolist(), 8)
    ef8_uns = error_factor_log(ev.unsat_pred[uns].tolist(), ev.truth[uns].tolist(), 8)
    per_label = {}
    for label, mask in (("sat", sat), ("unsat", uns)):
        per_label[label] = tuple(error_factor_log(gm[mask].tolist(), ev.truth[mask].tolist(), k) for k in factors)
    return CombinerCheck(bool(ok.all()), int((~ok).sum()), error_factor_log(gm.tolist(), truth, 8),
                         ef8_sat, ef8_uns, per_label)


# -- curves ---------------------------------------------------------------------------


def estimate_curves(collection: Collection, label: str, bins: int = 10) -> dict[str, list[CurvePoint]]:
    truths = {k: float(v) for k, v in collection.truth_of("norestart").items()}
    out = {}
    for method, field_name in (("WBE", "log2_total_cost"), ("PB", "pb_total")):
        raw = stream_by_instance(collection, label, field_name)
        if method == "WBE":
            streams = {i: [(c, _log2_to_ln(v)) for c, v in pts] for i, pts in raw.items()}
        else:
            streams = {i: [(c, _ln(v)) for c, v in pts] for i, pts in raw.items()}
        out[method] = mean_log_ratio_curve(streams, truths, bins)
    return out


def non_increasing_transitions(values: list[float]) -> int:
    return sum(1 for a, b in zip(values, values[1:]) if b <= a)


# -- restart chaining -------------------------------------------------------------------


@dataclass
class ChainResult:
    restarts: list[int]
    # label -> per chain position EF2 (plain, augmented) and instance counts
    plain: dict[str, list[float]]
    augmented: dict[str, list[float]]
    counts: dict[str, list[int]]
    pooled_final: tuple[float, float]


def chain_evaluation(collection: Collection, cfg: ExperimentConfig, config: str = "a") -> ChainResult:
    restart_of = collection.restart_of_chain(config)
    query = cfg.query_restart(config)
    chain = [c for c in collection.chain_indices(config) if restart_of[c] <= query]
    tc = cfg.train_config()
    truth = collection.truth_of(config)
    plain: dict[str, list[float]] = {}
    aug: dict[str, list[float]] = {}
    counts: dict[str, list[int]] = {}
    final_plain: list[tuple[float, float]] = []
    final_aug: list[tuple[float, float]] = []
    for label in LABELS:
        positions: list[LabeledSet] = []
        for c in chain:
            data = collection.labeled_set(config, c)
            positions.append(data.subset(data.sat if label == "sat" else ~data.sat))
        usable = [p for p in positions if len(p) >= tc.folds]
        positions = positions[: len(usable)]
        res_plain = chain_cross_validate(positions, tc, augmented=False)
        res_aug = chain_cross_validate(positions, tc, augmented=True)
        plain[label], aug[label], counts[label] = [], [], []
        for r, step in enumerate(positions):
            t = [truth[i] for i in step.ids]
            plain[label].append(error_factor_log([res_plain[r][i] for i in step.ids], t, 2))
            aug[label].append(error_factor_log([res_aug[r][i] for i in step.ids], t, 2))
            counts[label].append(len(step))
        if positions:
            last = positions[-1]
            final_plain += [(res_plain[-1][i], truth[i]) for i in last.ids]
            final_aug += [(res_aug[-1][i], truth[i]) for i in last.ids]
    pooled = (
        error_factor_log([p for p, _ in final_plain], [t for _, t in final_plain], 2),
        error_factor_log([p for p, _ in final_aug], [t for _, t in final_aug], 2),
    )
    return ChainResult([restart_of[c] for c in chain], plain, aug, counts, pooled)


# -- portfolio --------------------------------------------------------------------------


@dataclass
class PortfolioEvaluation:
    records: list[dict]
    summaries: dict  # label -> PortfolioSummary


def portfolio_evaluation(collection: Collection, cfg: ExperimentConfig) -> PortfolioEvaluation:
    preds = {}
    queries = {}
    for name in ("a", "b"):
        restart = cfg.query_restart(name)
        chain = {r: c for c, r in collection.restart_of_chain(name).items()}.get(restart)
        if chain is None:
            raise ValueError(f"no feature vectors at restart {restart} for solver {name}")
        ev = evaluate_query(collection, cfg, name, chain)
        if ev is None:
            raise ValueError(f"too few instances reach restart {restart} for solver {name}")
        preds[name] = {i: (ev.oracle_pred[n], ev.gm_pred[n]) for i, n in ev.by_id().items()}
        queries[name] = {r["instance"]: int(r["query_conflicts"]) for r in collection.query_rows(name, chain)}
    truth_a, truth_b = collection.truth_of("a"), collection.truth_of("b")
    labels = {r["instance"]: r["label"] for r in collection.truth}
    records = []
    by_label: dict[str, dict[str, list[RaceResult]]] = {lab: {"lmp-oracle": [], "lmp-avg": []} for lab in LABELS}
    for iid in sorted(labels):
        if iid not in truth_a or iid not in truth_b:
            continue
        qa, qb = queries["a"].get(iid), queries["b"].get(iid)
        pa, pb = preds["a"].get(iid, (None, None)), preds["b"].get(iid, (None, None))
        res_o = settle(truth_a[iid], truth_b[iid], qa, qb, _f(pa[0]), _f(pb[0]))
        res_g = settle(truth_a[iid], truth_b[iid], qa, qb, _f(pa[1]), _f(pb[1]))
        by_label[labels[iid]]["lmp-oracle"].append(res_o)
        by_label[labels[iid]]["lmp-avg"].append(res_g)
        records.append({
            "instance": iid, "label": labels[iid], "cost_a": truth_a[iid], "cost_b": truth_b[iid],
            "query_a": qa, "query_b": qb, "pred_a_oracle": _f(pa[0]), "pred_b_oracle": _f(pb[0]),
            "pred_a_avg": _f(pa[1]), "pred_b_avg": _f(pb[1]), "chosen_oracle": res_o.chosen,
            "chosen_avg": res_g.chosen, "decided_by": res_g.decided_by, "overhead_oracle": res_o.overhead,
            "overhead_avg": res_g.overhead,
        })
    summaries = {lab: summarize(v) for lab, v in by_label.items() if v["lmp-avg"]}
    return PortfolioEvaluation(records, summaries)


def _f(x) -> float | None:
    return None if x is None else float(x)
