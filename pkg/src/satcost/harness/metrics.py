"""Error factors and estimate-over-time curves."""

from __future__ import annotations

import math
from typing import Mapping, NamedTuple, Sequence


def within_factor(pred: float | None, truth: float, k: float) -> bool:
    if pred is None or not pred > 0 or not math.isfinite(pred):
        return False
    return max(pred / truth, truth / pred) <= k


def error_factor(preds: Sequence[float | None], truths: Sequence[float], k: float) -> float:
    """Percentage of predictions within a multiplicative factor ``k`` of the truth.

    A missing prediction (``None``) counts as a miss.
    """
    if len(preds) != len(truths):
        raise ValueError("preds and truths differ in length")
    if not truths:
        raise ValueError("no predictions to score")
    if any(t <= 0 for t in truths):
        raise ValueError("truths must be positive")
    hits = sum(within_factor(p, t, k) for p, t in zip(preds, truths))
    return 100.0 * hits / len(truths)


def error_factor_log(log_preds: Sequence[float | None], truths: Sequence[float], k: float) -> float:
    """Same, with predictions given as natural logs."""
    preds = [None if p is None else math.exp(min(p, 700.0)) for p in log_preds]
    return error_factor(preds, truths, k)


class ErrorFactorRow(NamedTuple):
    method: str
    label: str
    n: int
    percentages: tuple[float, ...]


def error_factor_row(method: str, label: str, preds, truths, factors=(2, 4, 8), log: bool = False) -> ErrorFactorRow:
    score = error_factor_log if log else error_factor
    return ErrorFactorRow(method, label, len(truths), tuple(score(preds, truths, k) for k in factors))


class CurvePoint(NamedTuple):
    bin: int
    center: float
    mean_log_ratio: float
    mean_abs_log_ratio: float
    instances: int


def mean_log_ratio_curve(streams: Mapping[str, Sequence[tuple[int, float | None]]], truths: Mapping[str, float],
                         bins: int = 10) -> list[CurvePoint]:
    """Per normalized-time bin, the mean over instances of ln(estimate / truth).

    ``streams`` maps an instance to (conflicts so far, natural-log estimate)
    pairs; ``None`` estimates are skipped.  Each instance contributes the mean
    of its own points inside a bin, so long runs do not dominate.
    """
    sums = [[0.0, 0.0, 0] for _ in range(bins)]
    for iid, points in sorted(streams.items()):
        truth = truths[iid]
        per_bin: dict[int, list[float]] = {}
        for conflicts, log_est in points:
            if log_est is None:
                continue
            t = conflicts / truth
            b = min(int(t * bins), bins - 1)
            per_bin.setdefault(b, []).append(log_est - math.log(truth))
        for b, values in per_bin.items():
            m = math.fsum(values) / len(values)
            sums[b][0] += m
            sums[b][1] += abs(m)
            sums[b][2] += 1
    out = []
    for b, (s, a, n) in enumerate(sums):
        center = (b + 0.5) / bins
        out.append(CurvePoint(b, center, s / n if n else math.nan, a / n if n else math.nan, n))
    return out
