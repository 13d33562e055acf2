from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from ..cnf import Formula
from . import kernel as K
from .events import Backjump, Conflict, Decide, Propagate, Restart, SearchEvent, Solved


class Observer(Protocol):
    def on_event(self, event: SearchEvent) -> None: ...


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs.  ``restart_factor=None`` turns restarts off."""

    restart_base: int = 100
    restart_factor: float | None = 1.5
    var_decay: float = 0.95
    clause_decay: float = 0.999
    clause_db_cap: int | None = 2000
    polarity_default: bool = False
    seed: int = 0
    conflict_budget: int | None = None
    random_var_freq: float = 0.0

    def __post_init__(self):
        if self.restart_base < 1:
            raise ValueError("restart_base must be >= 1")
        if self.restart_factor is not None and not self.restart_factor > 1.0:
            raise ValueError("restart_factor must be > 1 (use None to disable restarts)")
        if not 0.0 < self.var_decay < 1.0:
            raise ValueError("var_decay must lie in (0, 1)")
        if not 0.0 < self.clause_decay < 1.0:
            raise ValueError("clause_decay must lie in (0, 1)")
        if not 0.0 <= self.random_var_freq <= 1.0:
            raise ValueError("random_var_freq must lie in [0, 1]")

    @property
    def restarts(self) -> bool:
        return self.restart_factor is not None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def restart_schedule(cfg: SolverConfig, i: int) -> int | None:
    """Conflict limit of restart ``i``: base * factor**i, rounded half up."""
    if i < 0:
        raise ValueError("restart index must be >= 0")
    if not cfg.restarts:
        return None
    return int(math.floor(cfg.restart_base * cfg.restart_factor**i + 0.5))


_LIMIT_CAP = 2**62


def _restart_limits(cfg: SolverConfig) -> np.ndarray:
    if not cfg.restarts:
        return np.array([_LIMIT_CAP], dtype=np.int64)
    limits = []
    i = 0
    while True:
        value = cfg.restart_base * cfg.restart_factor**i
        if value >= _LIMIT_CAP or i >= 100_000:
            limits.append(_LIMIT_CAP)
            break
        limits.append(restart_schedule(cfg, i))
        i += 1
    return np.array(limits, dtype=np.int64)


@dataclass
class SolveOutcome:
    status: str  # sat | unsat | budget_exhausted
    total_conflicts: int
    total_decisions: int
    per_restart_conflicts: list[int]
    model: tuple[int, ...] | None = None
    propagations: int = 0


_STATUS = {K.ST_SAT: "sat", K.ST_UNSAT: "unsat", K.ST_BUDGET: "budget_exhausted"}


def _preprocess(formula: Formula):
    """Drop duplicate literals and tautologies; split units from wider clauses."""
    units: list[int] = []
    wide: list[tuple[int, ...]] = []
    for clause in formula.clauses:
        lits = tuple(dict.fromkeys(clause))
        if any(-lit in lits for lit in lits):
            continue
        if len(lits) == 1:
            units.append(lits[0])
        else:
            wide.append(lits)
    return units, wide


def _encode(lit: int) -> int:
    return 2 * (abs(lit) - 1) + (1 if lit < 0 else 0)


class Solver:
    """A resumable CDCL run over one formula.

    ``run(stop_at=n)`` pauses once ``n`` conflicts have been processed, which is
    how a portfolio race reaches its decision point.  Observers are called
    synchronously, in event order, between kernel calls.
    """

    def __init__(
        self,
        formula: Formula,
        config: SolverConfig | None = None,
        observers: Sequence[Observer] = (),
        emit_propagations: bool = False,
    ):
        self.formula = formula
        self.config = config or SolverConfig()
        self.observers = list(observers)
        self.per_restart_conflicts: list[int] = []
        self._outcome: SolveOutcome | None = None

        nv = max(formula.num_vars, 1)
        self._nv = formula.num_vars
        units, wide = _preprocess(formula)
        n_wide = len(wide)
        n_lits = sum(len(c) for c in wide)
        clause_cap = max(64, 2 * n_wide + 256)
        arena_cap = max(1024, 2 * n_lits + 16 * nv)

        self.assigns = np.full(nv, -1, dtype=np.int8)
        self.level = np.zeros(nv, dtype=np.int32)
        self.reason = np.full(nv, -1, dtype=np.int64)
        self.trail = np.zeros(nv, dtype=np.int32)
        self.trail_lim = np.zeros(nv + 1, dtype=np.int64)
        self.seen = np.zeros(nv, dtype=np.int8)
        self.out = np.zeros(nv + 1, dtype=np.int32)
        self.activity = np.zeros(nv, dtype=np.float64)
        self.heap = np.arange(nv, dtype=np.int32)
        self.pos = np.arange(nv, dtype=np.int32)
        if formula.num_vars == 0:
            self.pos[:] = -1
        self.arena = np.zeros(arena_cap, dtype=np.int32)
        self.c_start = np.zeros(clause_cap, dtype=np.int64)
        self.c_size = np.zeros(clause_cap, dtype=np.int32)
        self.c_learnt = np.zeros(clause_cap, dtype=np.int8)
        self.c_deleted = np.zeros(clause_cap, dtype=np.int8)
        self.c_act = np.zeros(clause_cap, dtype=np.float64)
        self.w_lit = np.zeros(2 * clause_cap, dtype=np.int32)
        self.w_next = np.full(2 * clause_cap, -1, dtype=np.int64)
        self.w_head = np.full(2 * nv, -1, dtype=np.int64)
        self.units = np.array([_encode(u) for u in units], dtype=np.int32)
        self.restart_limits = _restart_limits(self.config)
        self.regs = np.zeros(K.N_REGS, dtype=np.int64)
        self.regs[K.R_HEAP] = formula.num_vars
        self.regs[K.R_RNG] = (self.config.seed * 6364136223846793005 + 1442695040888963407) % (2**63 - 1) or 1
        self.fregs = np.zeros(K.N_FREGS, dtype=np.float64)
        self.fregs[K.F_VAR_INC] = 1.0
        self.fregs[K.F_CLA_INC] = 1.0
        self.params = np.zeros(K.N_PARAMS, dtype=np.int64)
        self.params[K.P_RESTARTS_ON] = 1 if self.config.restarts else 0
        cap = self.config.clause_db_cap
        self.params[K.P_DB_CAP] = -1 if cap is None else cap
        self.params[K.P_POLARITY] = 1 if self.config.polarity_default else 0
        budget = self.config.conflict_budget
        self.params[K.P_BUDGET] = -1 if budget is None else budget
        self.params[K.P_STOP_AT] = -1
        self.params[K.P_EMIT_PROP] = 1 if emit_propagations else 0
        self.params[K.P_RANDOM_FREQ_PPM] = int(round(self.config.random_var_freq * 1_000_000))
        self.fparams = np.array([self.config.var_decay, self.config.clause_decay], dtype=np.float64)
        ev_cap = max(4096, 4 * nv + 64) if emit_propagations else 4096
        self.events = np.zeros((ev_cap, K.EV_WIDTH), dtype=np.int64)

        if wide:
            flat = np.array([_encode(l) for c in wide for l in c], dtype=np.int32)
            offsets = np.zeros(n_wide + 1, dtype=np.int64)
            offsets[1:] = np.cumsum([len(c) for c in wide])
            K.load_clauses(self.arena, self.c_start, self.c_size, self.c_learnt, self.c_deleted,
                           self.w_lit, self.w_next, self.w_head, self.regs, flat, offsets)
        self._trivially_unsat = formula.empty_clause

    # -- state -------------------------------------------------------------
    @property
    def conflicts(self) -> int:
        return int(self.regs[K.R_CONFLICTS])

    @property
    def decisions(self) -> int:
        return int(self.regs[K.R_DECISIONS])

    @property
    def restart_index(self) -> int:
        return int(self.regs[K.R_RESTART])

    @property
    def done(self) -> bool:
        return self._outcome is not None

    @property
    def outcome(self) -> SolveOutcome | None:
        return self._outcome

    # -- running -----------------------------------------------------------
    def run(self, stop_at: int | None = None) -> SolveOutcome | None:
        """Search until done, or until ``stop_at`` total conflicts have been processed."""
        if self._outcome is not None:
            return self._outcome
        if self._trivially_unsat:
            self._finish_empty_clause()
            return self._outcome
        self.params[K.P_STOP_AT] = -1 if stop_at is None else stop_at
        while True:
            rc = K.search(
                self.assigns, self.level, self.reason, self.trail, self.trail_lim, self.seen,
                self.out, self.activity, self.heap, self.pos, self.arena, self.c_start,
                self.c_size, self.c_learnt, self.c_deleted, self.c_act, self.w_lit,
                self.w_next, self.w_head, self.units, self.restart_limits, self.regs,
                self.fregs, self.params, self.fparams, self.events,
            )
            self._flush()
            if rc == K.RC_GROW:
                self._grow()
            elif rc == K.RC_STOP:
                return None
            elif rc == K.RC_DONE:
                self._finalize()
                return self._outcome

    def _finish_empty_clause(self):
        self.per_restart_conflicts = [0]
        limit = restart_schedule(self.config, 0)
        self._dispatch(Restart(0, limit))
        self._dispatch(Conflict(0, 0, 0, 0, 0, 0, 0, 0))
        self.per_restart_conflicts[-1] += 1
        self._dispatch(Solved("unsat"))
        self._outcome = SolveOutcome("unsat", 1, 0, self.per_restart_conflicts)

    def _model(self) -> tuple[int, ...]:
        return tuple((v + 1) if a == 1 else -(v + 1) for v, a in enumerate(self.assigns[: self._nv].tolist()))

    def _finalize(self):
        status = _STATUS[int(self.regs[K.R_STATUS])]
        model = None
        if status == "sat":
            model = self._model()
            if not self.formula.satisfied_by(model):
                raise AssertionError("solver produced a model that violates the formula")
        self._outcome = SolveOutcome(
            status=status,
            total_conflicts=self.conflicts,
            total_decisions=self.decisions,
            per_restart_conflicts=list(self.per_restart_conflicts),
            model=model,
            propagations=int(self.regs[K.R_PROPAGATIONS]),
        )

    def _grow(self):
        n = self.regs[K.R_EVENTS]
        if n + self._nv + 16 >= self.events.shape[0]:
            self.events = np.concatenate([self.events, np.zeros_like(self.events)])

        def bigger(arr, fill=0):
            extra = np.full(arr.shape[0], fill, dtype=arr.dtype)
            return np.concatenate([arr, extra])

        if self.regs[K.R_ARENA] + self._nv + 1 > self.arena.shape[0]:
            self.arena = bigger(self.arena)
        if self.regs[K.R_NCLAUSES] + 1 > self.c_start.shape[0]:
            self.c_start = bigger(self.c_start)
            self.c_size = bigger(self.c_size)
            self.c_learnt = bigger(self.c_learnt)
            self.c_deleted = bigger(self.c_deleted)
            self.c_act = bigger(self.c_act)
            self.w_lit = bigger(self.w_lit)
            self.w_next = bigger(self.w_next, -1)

    def _dispatch(self, event: SearchEvent):
        for obs in self.observers:
            obs.on_event(event)

    def _flush(self):
        n = int(self.regs[K.R_EVENTS])
        if n == 0:
            return
        rows = self.events[:n].tolist()
        self.regs[K.R_EVENTS] = 0
        observers = self.observers
        per_restart = self.per_restart_conflicts
        if not observers:
            for row in rows:
                if row[0] == K.EV_CONFLICT:
                    per_restart[-1] += 1
                elif row[0] == K.EV_RESTART:
                    per_restart.append(0)
            return
        for row in rows:
            kind = row[0]
            if kind == K.EV_DECIDE:
                event = Decide(row[1], row[2])
            elif kind == K.EV_CONFLICT:
                per_restart[-1] += 1
                event = Conflict(row[1], row[2], row[3], row[4], row[5], row[6], row[7], row[8])
            elif kind == K.EV_BACKJUMP:
                event = Backjump(row[1], row[2], row[3])
            elif kind == K.EV_PROPAGATE:
                event = Propagate(row[1], row[2])
            elif kind == K.EV_RESTART:
                per_restart.append(0)
                event = Restart(row[1], None if row[2] < 0 or row[2] >= _LIMIT_CAP else row[2])
            else:
                status = _STATUS[row[1]]
                event = Solved(status, self._model() if status == "sat" else None)
            for obs in observers:
                obs.on_event(event)


def solve(formula: Formula, config: SolverConfig | None = None, observers: Sequence[Observer] = (),
          emit_propagations: bool = False) -> SolveOutcome:
    return Solver(formula, config, observers, emit_propagations).run()
