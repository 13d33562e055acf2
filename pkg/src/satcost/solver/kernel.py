"""Compiled CDCL search loop.

All solver state lives in flat numpy arrays owned by the Python driver
(``satcost.solver.core``).  ``search`` runs until the event buffer needs
flushing, an arena needs growing, a requested conflict count is reached, or
the search ends; it can be resumed at any of those points because it only
returns at the top of the main loop.

Literal encoding: ``2*v + neg`` for 0-based variable ``v``.
Watch lists are intrusive singly linked lists over watch slots; clause ``c``
owns slots ``2c`` and ``2c+1``.
"""

import numpy as np
from numba import njit

# integer registers
R_TRAIL = 0
R_QHEAD = 1
R_LEVEL = 2
R_CONFLICTS = 3
R_DECISIONS = 4
R_RESTART = 5
R_RESTART_CONFLICTS = 6
R_NCLAUSES = 7
R_ARENA = 8
R_NLEARNT = 9
R_STATUS = 10
R_EVENTS = 11
R_HEAP = 12
R_STARTED = 13
R_DB_CLAUSES = 14
R_DB_BIN = 15
R_DB_TER = 16
R_DB_LITS = 17
R_RNG = 18
R_NORIG = 19
R_PROPAGATIONS = 20
R_DB_LIMIT = 21
N_REGS = 24

# float registers
F_VAR_INC = 0
F_CLA_INC = 1
N_FREGS = 4

# status
ST_UNKNOWN = 0
ST_SAT = 1
ST_UNSAT = 2
ST_BUDGET = 3

# return codes
RC_FLUSH = 1
RC_GROW = 2
RC_STOP = 3
RC_DONE = 4

# event rows: [kind, a, b, c, d, e, f, g, h]
EV_DECIDE = 1
EV_PROPAGATE = 2
EV_CONFLICT = 3
EV_BACKJUMP = 4
EV_RESTART = 5
EV_SOLVED = 6
EV_WIDTH = 9

# integer parameters
P_RESTARTS_ON = 0
P_DB_CAP = 1
P_POLARITY = 2
P_BUDGET = 3
P_STOP_AT = 4
P_EMIT_PROP = 5
P_RANDOM_FREQ_PPM = 6
N_PARAMS = 8

# float parameters
Q_VAR_DECAY = 0
Q_CLA_DECAY = 1
N_FPARAMS = 2


@njit(cache=True, inline="always")
def _lit_value(assigns, lit):
    a = assigns[lit >> 1]
    if a < 0:
        return -1
    return a ^ (lit & 1)


@njit(cache=True, inline="always")
def _to_dimacs(lit):
    v = (lit >> 1) + 1
    return -v if lit & 1 else v


@njit(cache=True, inline="always")
def _heap_before(activity, a, b):
    return activity[a] > activity[b] or (activity[a] == activity[b] and a < b)


@njit(cache=True)
def _heap_up(heap, pos, activity, i):
    v = heap[i]
    while i > 0:
        parent = (i - 1) >> 1
        u = heap[parent]
        if _heap_before(activity, v, u):
            heap[i] = u
            pos[u] = i
            i = parent
        else:
            break
    heap[i] = v
    pos[v] = i


@njit(cache=True)
def _heap_down(heap, pos, activity, i, size):
    v = heap[i]
    while True:
        child = 2 * i + 1
        if child >= size:
            break
        right = child + 1
        if right < size and _heap_before(activity, heap[right], heap[child]):
            child = right
        u = heap[child]
        if _heap_before(activity, u, v):
            heap[i] = u
            pos[u] = i
            i = child
        else:
            break
    heap[i] = v
    pos[v] = i


@njit(cache=True)
def _heap_insert(heap, pos, activity, regs, v):
    if pos[v] >= 0:
        return
    size = regs[R_HEAP]
    heap[size] = v
    pos[v] = size
    regs[R_HEAP] = size + 1
    _heap_up(heap, pos, activity, size)


@njit(cache=True)
def _heap_pop(heap, pos, activity, regs):
    size = regs[R_HEAP]
    top = heap[0]
    pos[top] = -1
    size -= 1
    regs[R_HEAP] = size
    if size > 0:
        heap[0] = heap[size]
        pos[heap[0]] = 0
        _heap_down(heap, pos, activity, 0, size)
    return top


@njit(cache=True)
def _bump_var(activity, heap, pos, fregs, v):
    activity[v] += fregs[F_VAR_INC]
    if activity[v] > 1e100:
        for i in range(activity.shape[0]):
            activity[i] *= 1e-100
        fregs[F_VAR_INC] *= 1e-100
    if pos[v] >= 0:
        _heap_up(heap, pos, activity, pos[v])


@njit(cache=True)
def _bump_clause(c_act, c_learnt, c_deleted, fregs, regs, c):
    c_act[c] += fregs[F_CLA_INC]
    if c_act[c] > 1e20:
        for i in range(regs[R_NCLAUSES]):
            if c_learnt[i] and not c_deleted[i]:
                c_act[i] *= 1e-20
        fregs[F_CLA_INC] *= 1e-20


@njit(cache=True)
def _emit(events, regs, kind, a, b, c, d, e, f, g, h):
    n = regs[R_EVENTS]
    events[n, 0] = kind
    events[n, 1] = a
    events[n, 2] = b
    events[n, 3] = c
    events[n, 4] = d
    events[n, 5] = e
    events[n, 6] = f
    events[n, 7] = g
    events[n, 8] = h
    regs[R_EVENTS] = n + 1


@njit(cache=True)
def _enqueue(assigns, level, reason, trail, regs, lit, why):
    v = lit >> 1
    assigns[v] = 1 - (lit & 1)
    level[v] = regs[R_LEVEL]
    reason[v] = why
    trail[regs[R_TRAIL]] = lit
    regs[R_TRAIL] += 1


@njit(cache=True)
def _db_account(regs, size, sign):
    regs[R_DB_CLAUSES] += sign
    regs[R_DB_LITS] += sign * size
    if size == 2:
        regs[R_DB_BIN] += sign
    elif size == 3:
        regs[R_DB_TER] += sign


@njit(cache=True)
def load_clauses(arena, c_start, c_size, c_learnt, c_deleted, w_lit, w_next, w_head, regs, flat, offsets):
    """Install original clauses of width >= 2 and set up their watches."""
    n = offsets.shape[0] - 1
    pos = regs[R_ARENA]
    nc = regs[R_NCLAUSES]
    for i in range(n):
        lo = offsets[i]
        hi = offsets[i + 1]
        size = hi - lo
        c_start[nc] = pos
        c_size[nc] = size
        c_learnt[nc] = 0
        c_deleted[nc] = 0
        for k in range(size):
            arena[pos + k] = flat[lo + k]
        for slot in range(2):
            s = 2 * nc + slot
            lit = flat[lo + slot]
            w_lit[s] = lit
            w_next[s] = w_head[lit]
            w_head[lit] = s
        pos += size
        _db_account(regs, size, 1)
        nc += 1
    regs[R_ARENA] = pos
    regs[R_NCLAUSES] = nc
    regs[R_NORIG] = nc
    regs[R_DB_LIMIT] = nc


@njit(cache=True)
def _propagate(assigns, level, reason, trail, regs, params, events,
               arena, c_start, c_size, c_deleted, w_lit, w_next, w_head):
    emit = params[P_EMIT_PROP] != 0
    while regs[R_QHEAD] < regs[R_TRAIL]:
        p = trail[regs[R_QHEAD]]
        regs[R_QHEAD] += 1
        regs[R_PROPAGATIONS] += 1
        false_lit = p ^ 1
        prev = -1
        s = w_head[false_lit]
        while s != -1:
            nxt = w_next[s]
            c = s >> 1
            if c_deleted[c]:
                if prev == -1:
                    w_head[false_lit] = nxt
                else:
                    w_next[prev] = nxt
                s = nxt
                continue
            other = w_lit[s ^ 1]
            other_val = _lit_value(assigns, other)
            if other_val == 1:
                prev = s
                s = nxt
                continue
            st = c_start[c]
            found = -1
            for k in range(c_size[c]):
                lit = arena[st + k]
                if lit != false_lit and lit != other and _lit_value(assigns, lit) != 0:
                    found = lit
                    break
            if found != -1:
                if prev == -1:
                    w_head[false_lit] = nxt
                else:
                    w_next[prev] = nxt
                w_lit[s] = found
                w_next[s] = w_head[found]
                w_head[found] = s
                s = nxt
                continue
            if other_val == 0:
                regs[R_QHEAD] = regs[R_TRAIL]
                return c
            _enqueue(assigns, level, reason, trail, regs, other, c)
            if emit:
                _emit(events, regs, EV_PROPAGATE, regs[R_LEVEL], _to_dimacs(other), 0, 0, 0, 0, 0, 0)
            prev = s
            s = nxt
    return -1


@njit(cache=True)
def _cancel_until(assigns, reason, trail, trail_lim, regs, heap, pos, activity, target):
    if regs[R_LEVEL] <= target:
        return
    stop = trail_lim[target]
    for i in range(regs[R_TRAIL] - 1, stop - 1, -1):
        v = trail[i] >> 1
        assigns[v] = -1
        reason[v] = -1
        _heap_insert(heap, pos, activity, regs, v)
    regs[R_TRAIL] = stop
    regs[R_QHEAD] = stop
    regs[R_LEVEL] = target


@njit(cache=True)
def _analyze(confl, level, reason, trail, seen, out, regs, fregs, activity, heap, pos,
             arena, c_start, c_size, c_learnt, c_deleted, c_act):
    """First-UIP learning.  Fills ``out`` and returns (length, backjump level)."""
    path = 0
    p = -1
    out_len = 1
    idx = regs[R_TRAIL] - 1
    dlevel = regs[R_LEVEL]
    while True:
        if c_learnt[confl]:
            _bump_clause(c_act, c_learnt, c_deleted, fregs, regs, confl)
        st = c_start[confl]
        for k in range(c_size[confl]):
            q = arena[st + k]
            if q == p:
                continue
            v = q >> 1
            if seen[v] == 0 and level[v] > 0:
                _bump_var(activity, heap, pos, fregs, v)
                seen[v] = 1
                if level[v] >= dlevel:
                    path += 1
                else:
                    out[out_len] = q
                    out_len += 1
        while seen[trail[idx] >> 1] == 0:
            idx -= 1
        p = trail[idx]
        idx -= 1
        confl = reason[p >> 1]
        seen[p >> 1] = 0
        path -= 1
        if path <= 0:
            break
    out[0] = p ^ 1
    bt = 0
    if out_len > 1:
        best = 1
        for i in range(1, out_len):
            if level[out[i] >> 1] > level[out[best] >> 1]:
                best = i
        tmp = out[1]
        out[1] = out[best]
        out[best] = tmp
        bt = level[out[1] >> 1]
    for i in range(1, out_len):
        seen[out[i] >> 1] = 0
    return out_len, bt


@njit(cache=True)
def _reduce_db(assigns, reason, regs, arena, c_start, c_size, c_learnt, c_deleted, c_act):
    """Delete the lower-activity half of the removable learnt clauses."""
    nc = regs[R_NCLAUSES]
    cand = np.empty(regs[R_NLEARNT], dtype=np.int64)
    n = 0
    for c in range(regs[R_NORIG], nc):
        if not c_learnt[c] or c_deleted[c] or c_size[c] <= 2:
            continue
        locked = False
        st = c_start[c]
        for k in range(c_size[c]):
            lit = arena[st + k]
            if reason[lit >> 1] == c and _lit_value(assigns, lit) == 1:
                locked = True
                break
        if not locked:
            cand[n] = c
            n += 1
    if n == 0:
        return
    cand = cand[:n]
    keys = np.empty(n, dtype=np.float64)
    for i in range(n):
        keys[i] = c_act[cand[i]]
    order = np.argsort(keys, kind="mergesort")
    for i in range(n // 2):
        c = cand[order[i]]
        c_deleted[c] = 1
        regs[R_NLEARNT] -= 1
        _db_account(regs, c_size[c], -1)


@njit(cache=True)
def _next_random(regs):
    x = regs[R_RNG]
    x ^= (x << 13) & 0x7FFFFFFFFFFFFFFF
    x ^= x >> 7
    x ^= (x << 17) & 0x7FFFFFFFFFFFFFFF
    x &= 0x7FFFFFFFFFFFFFFF
    if x == 0:
        x = 88172645463325252
    regs[R_RNG] = x
    return x


@njit(cache=True)
def search(assigns, level, reason, trail, trail_lim, seen, out, activity, heap, pos,
           arena, c_start, c_size, c_learnt, c_deleted, c_act, w_lit, w_next, w_head,
           units, restart_limits, regs, fregs, params, fparams, events):
    nv = assigns.shape[0]
    emit_prop = params[P_EMIT_PROP] != 0
    headroom = (nv + 8) if emit_prop else 8
    ev_cap = events.shape[0]

    if regs[R_STARTED] == 0:
        regs[R_STARTED] = 1
        limit = restart_limits[0] if params[P_RESTARTS_ON] else -1
        _emit(events, regs, EV_RESTART, 0, limit, 0, 0, 0, 0, 0, 0)
        for i in range(units.shape[0]):
            lit = units[i]
            val = _lit_value(assigns, lit)
            if val == 1:
                continue
            if val == 0:
                regs[R_CONFLICTS] += 1
                regs[R_RESTART_CONFLICTS] += 1
                _emit(events, regs, EV_CONFLICT, 1, 0, regs[R_TRAIL], 0,
                      regs[R_DB_CLAUSES], regs[R_DB_BIN], regs[R_DB_TER], regs[R_DB_LITS])
                _emit(events, regs, EV_SOLVED, ST_UNSAT, 0, 0, 0, 0, 0, 0, 0)
                regs[R_STATUS] = ST_UNSAT
                return RC_DONE
            _enqueue(assigns, level, reason, trail, regs, lit, -1)
            if emit_prop:
                # the driver sizes the buffer for one event per variable up front
                _emit(events, regs, EV_PROPAGATE, 0, _to_dimacs(lit), 0, 0, 0, 0, 0, 0)

    if regs[R_STATUS] != ST_UNKNOWN:
        return RC_DONE

    while True:
        if regs[R_EVENTS] + headroom >= ev_cap:
            return RC_FLUSH
        if regs[R_ARENA] + nv + 1 > arena.shape[0] or regs[R_NCLAUSES] + 1 > c_start.shape[0]:
            return RC_GROW
        if params[P_BUDGET] >= 0 and regs[R_CONFLICTS] >= params[P_BUDGET]:
            regs[R_STATUS] = ST_BUDGET
            return RC_DONE
        if params[P_STOP_AT] >= 0 and regs[R_CONFLICTS] >= params[P_STOP_AT]:
            return RC_STOP
        if params[P_RESTARTS_ON]:
            ridx = regs[R_RESTART]
            limit = restart_limits[min(ridx, restart_limits.shape[0] - 1)]
            if regs[R_RESTART_CONFLICTS] >= limit:
                _cancel_until(assigns, reason, trail, trail_lim, regs, heap, pos, activity, 0)
                ridx += 1
                regs[R_RESTART] = ridx
                regs[R_RESTART_CONFLICTS] = 0
                limit = restart_limits[min(ridx, restart_limits.shape[0] - 1)]
                _emit(events, regs, EV_RESTART, ridx, limit, 0, 0, 0, 0, 0, 0)
                continue

        confl = _propagate(assigns, level, reason, trail, regs, params, events,
                           arena, c_start, c_size, c_deleted, w_lit, w_next, w_head)
        if confl >= 0:
            regs[R_CONFLICTS] += 1
            regs[R_RESTART_CONFLICTS] += 1
            dlevel = regs[R_LEVEL]
            assigned_before = regs[R_TRAIL]
            if dlevel == 0:
                _emit(events, regs, EV_CONFLICT, c_size[confl], 0, assigned_before, 0,
                      regs[R_DB_CLAUSES], regs[R_DB_BIN], regs[R_DB_TER], regs[R_DB_LITS])
                _emit(events, regs, EV_SOLVED, ST_UNSAT, 0, 0, 0, 0, 0, 0, 0)
                regs[R_STATUS] = ST_UNSAT
                return RC_DONE
            out_len, bt = _analyze(confl, level, reason, trail, seen, out, regs, fregs,
                                   activity, heap, pos, arena, c_start, c_size, c_learnt,
                                   c_deleted, c_act)
            if out_len > 1:
                nc = regs[R_NCLAUSES]
                st = regs[R_ARENA]
                c_start[nc] = st
                c_size[nc] = out_len
                c_learnt[nc] = 1
                c_deleted[nc] = 0
                c_act[nc] = 0.0
                for k in range(out_len):
                    arena[st + k] = out[k]
                for slot in range(2):
                    s = 2 * nc + slot
                    lit = out[slot]
                    w_lit[s] = lit
                    w_next[s] = w_head[lit]
                    w_head[lit] = s
                regs[R_ARENA] = st + out_len
                regs[R_NCLAUSES] = nc + 1
                regs[R_NLEARNT] += 1
                _db_account(regs, out_len, 1)
                _bump_clause(c_act, c_learnt, c_deleted, fregs, regs, nc)
            _emit(events, regs, EV_CONFLICT, c_size[confl], out_len, assigned_before, dlevel,
                  regs[R_DB_CLAUSES], regs[R_DB_BIN], regs[R_DB_TER], regs[R_DB_LITS])
            _cancel_until(assigns, reason, trail, trail_lim, regs, heap, pos, activity, bt)
            _emit(events, regs, EV_BACKJUMP, dlevel, bt, regs[R_TRAIL], 0, 0, 0, 0, 0)
            why = regs[R_NCLAUSES] - 1 if out_len > 1 else -1
            _enqueue(assigns, level, reason, trail, regs, out[0], why)
            if emit_prop:
                _emit(events, regs, EV_PROPAGATE, bt, _to_dimacs(out[0]), 0, 0, 0, 0, 0, 0)
            fregs[F_VAR_INC] /= fparams[Q_VAR_DECAY]
            fregs[F_CLA_INC] /= fparams[Q_CLA_DECAY]
            continue

        if params[P_DB_CAP] >= 0 and regs[R_NLEARNT] > regs[R_DB_LIMIT]:
            _reduce_db(assigns, reason, regs, arena, c_start, c_size, c_learnt, c_deleted, c_act)
            # locked and binary clauses are never evicted; avoid rescanning every decision
            if regs[R_NLEARNT] > regs[R_DB_LIMIT]:
                regs[R_DB_LIMIT] = regs[R_NLEARNT]

        v = -1
        if params[P_RANDOM_FREQ_PPM] > 0 and regs[R_HEAP] > 0:
            if _next_random(regs) % 1000000 < params[P_RANDOM_FREQ_PPM]:
                cand = heap[_next_random(regs) % regs[R_HEAP]]
                if assigns[cand] < 0:
                    v = cand
        while v < 0 and regs[R_HEAP] > 0:
            cand = _heap_pop(heap, pos, activity, regs)
            if assigns[cand] < 0:
                v = cand
        if v < 0:
            regs[R_STATUS] = ST_SAT
            _emit(events, regs, EV_SOLVED, ST_SAT, 0, 0, 0, 0, 0, 0, 0)
            return RC_DONE
        regs[R_DECISIONS] += 1
        trail_lim[regs[R_LEVEL]] = regs[R_TRAIL]
        regs[R_LEVEL] += 1
        lit = 2 * v + (0 if params[P_POLARITY] else 1)
        _enqueue(assigns, level, reason, trail, regs, lit, -1)
        _emit(events, regs, EV_DECIDE, regs[R_LEVEL], _to_dimacs(lit), 0, 0, 0, 0, 0, 0)
