"""Observation-window statistics and the 64-entry feature vector.

Every dynamic quantity is sampled once per conflict, except the log tree-size
estimate, which is sampled whenever the estimator's sampling gate fires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .cnf import InitFeatures

INIT_FEATURES = ("var", "cls", "cls_var", "var_cls", "fbc", "ftc", "acs")

# (quantity, statistics) in table order
WINDOW_LAYOUT = (
    ("cls_var", ("min", "max", "avg", "sd", "last")),
    ("var_cls", ("min", "max", "avg", "sd", "last")),
    ("fbc", ("avg", "sd", "last")),
    ("ftc", ("avg", "sd", "last")),
    ("acs", ("avg", "sd", "last")),
    ("sd", ("max", "avg", "sd")),
    ("bsd", ("max", "avg", "sd")),
    ("bs", ("max", "avg", "sd")),
    ("lcs", ("min", "max", "avg", "sd")),
    ("ccs", ("min", "max", "avg", "sd")),
    ("abb", ("min", "max", "avg", "sd")),
    ("aab", ("min", "max", "avg", "sd")),
    ("aab_abb", ("min", "max", "avg", "sd")),
    ("abb_aab", ("min", "max", "avg", "sd")),
    ("lwbe", ("min", "max", "avg", "sd", "last")),
)

FEATURE_NAMES: tuple[str, ...] = tuple(f"init_{n}" for n in INIT_FEATURES) + tuple(
    f"{q}_{s}" for q, stats in WINDOW_LAYOUT for s in stats
)
assert len(FEATURE_NAMES) == 64


class RunningStat:
    """Streaming min/max/mean/population-sd/last (Welford)."""

    __slots__ = ("count", "mean", "_m2", "min", "max", "last")

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0
        self.min = math.inf
        self.max = -math.inf
        self.last = math.nan

    def push(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)
        if x < self.min:
            self.min = x
        if x > self.max:
            self.max = x
        self.last = x

    @property
    def sd(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(max(self._m2, 0.0) / self.count)

    def get(self, stat: str) -> float:
        if stat == "avg":
            return self.mean
        return getattr(self, stat)


def _ratio(a: float, b: float) -> float:
    return a / b if b else 0.0


class ConflictSample(NamedTuple):
    cls_var: float
    var_cls: float
    fbc: float
    ftc: float
    acs: float
    sd: float
    bsd: float
    bs: float
    lcs: float
    ccs: float
    abb: float
    aab: float
    aab_abb: float
    abb_aab: float

    @classmethod
    def measure(cls, num_vars, db_clauses, db_binary, db_ternary, db_literals,
                level, leaf_depth, from_level, to_level, learnt_size, conflict_size,
                assigned_before, assigned_after) -> ConflictSample:
        abb = _ratio(assigned_before, num_vars)
        aab = _ratio(assigned_after, num_vars)
        return cls(
            cls_var=_ratio(db_clauses, num_vars),
            var_cls=_ratio(num_vars, db_clauses),
            fbc=_ratio(db_binary, db_clauses),
            ftc=_ratio(db_ternary, db_clauses),
            acs=_ratio(db_literals, db_clauses),
            sd=float(level),
            bsd=float(leaf_depth),
            bs=float(from_level - to_level),
            lcs=float(learnt_size),
            ccs=float(conflict_size),
            abb=abb,
            aab=aab,
            aab_abb=_ratio(aab, abb),
            abb_aab=_ratio(abb, aab),
        )


@dataclass(frozen=True)
class WindowConfig:
    wait: int
    size: int

    def __post_init__(self):
        if self.wait < 0 or self.size < 1:
            raise ValueError("window needs wait >= 0 and size >= 1")

    @property
    def end(self) -> int:
        return self.wait + self.size


@dataclass(frozen=True)
class WindowPolicy:
    """Window sizing per restart: size = max(min_size, size_frac*s), wait likewise."""

    min_size: int = 1000
    size_frac: float = 0.01
    min_wait: int = 500
    wait_frac: float = 0.02


PAPER_WINDOWS = WindowPolicy()


def window_for_restart(s: int, policy: WindowPolicy = PAPER_WINDOWS) -> WindowConfig | None:
    """Window for a restart of ``s`` conflicts, or None when it does not fit."""
    if s < 1:
        raise ValueError("restart size must be >= 1")
    size = max(policy.min_size, int(policy.size_frac * s))
    wait = max(policy.min_wait, int(policy.wait_frac * s))
    if wait + size > s:
        return None
    return WindowConfig(wait, size)


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    names: tuple[str, ...] = FEATURE_NAMES

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def __getitem__(self, name: str) -> float:
        return self.values[self.names.index(name)]


def history_names(length: int) -> tuple[str, ...]:
    return tuple(f"hist_pred_{i + 1}" for i in range(length))


@dataclass(frozen=True)
class AugmentedFeatureVector:
    base: FeatureVector
    history: tuple[float, ...] = ()

    @property
    def names(self) -> tuple[str, ...]:
        return self.base.names + history_names(len(self.history))

    @property
    def values(self) -> tuple[float, ...]:
        return self.base.values + tuple(self.history)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))


def pad_history(history: Sequence[float | None], length: int) -> tuple[float, ...]:
    """Fill missing predictions with the latest available one and fit to ``length``."""
    filled: list[float] = []
    latest = None
    for value in history:
        if value is not None and math.isfinite(value):
            latest = value
        filled.append(latest)
    first = next((v for v in filled if v is not None), 0.0)
    filled = [first if v is None else v for v in filled]
    if len(filled) >= length:
        return tuple(filled[:length])
    pad = filled[-1] if filled else 0.0
    return tuple(filled + [pad] * (length - len(filled)))


class ObservationWindow:
    """Accumulates conflict samples for one window and emits the feature vector."""

    def __init__(self, config: WindowConfig):
        self.config = config
        self.stats = {q: RunningStat() for q, _ in WINDOW_LAYOUT}
        self.conflicts = 0

    def add(self, sample: ConflictSample) -> None:
        self.conflicts += 1
        stats = self.stats
        for name, value in zip(ConflictSample._fields, sample):
            stats[name].push(value)

    def add_lwbe(self, value: float) -> None:
        self.stats["lwbe"].push(value)

    def finalize(self, init: InitFeatures) -> FeatureVector | None:
        if self.conflicts == 0:
            return None
        values = list(init)
        for quantity, stats in WINDOW_LAYOUT:
            rs = self.stats[quantity]
            for stat in stats:
                v = rs.get(stat) if rs.count else 0.0
                values.append(float(v))
        return FeatureVector(tuple(values))
