"""Minimal CDCL solver with an observable event stream."""

from .core import SolveOutcome, Solver, SolverConfig, restart_schedule, solve
from .events import (
    Backjump,
    Conflict,
    Decide,
    EventRecorder,
    Propagate,
    Restart,
    SearchEvent,
    Solved,
    TraceWriter,
    read_trace,
    write_trace,
)

__all__ = [
    "Backjump",
    "Conflict",
    "Decide",
    "EventRecorder",
    "Propagate",
    "Restart",
    "SearchEvent",
    "SolveOutcome",
    "Solved",
    "Solver",
    "SolverConfig",
    "TraceWriter",
    "read_trace",
    "restart_schedule",
    "solve",
    "write_trace",
]
