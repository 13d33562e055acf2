"""Search events emitted by the solver, and their line-delimited JSON trace form."""

from __future__ import annotations

import json
from typing import IO, Iterable, Iterator, NamedTuple, Union


class Decide(NamedTuple):
    level: int
    literal: int


class Propagate(NamedTuple):
    level: int
    literal: int


class Conflict(NamedTuple):
    conflict_clause_size: int
    learnt_clause_size: int
    assigned_before: int
    level: int
    # clause database after the learnt clause was added
    db_clauses: int
    db_binary: int
    db_ternary: int
    db_literals: int


class Backjump(NamedTuple):
    from_level: int
    to_level: int
    assigned_after: int


class Restart(NamedTuple):
    index: int
    conflict_limit: int | None


class Solved(NamedTuple):
    status: str
    model: tuple[int, ...] | None = None


SearchEvent = Union[Decide, Propagate, Conflict, Backjump, Restart, Solved]

_KINDS = {
    "decide": Decide,
    "propagate": Propagate,
    "conflict": Conflict,
    "backjump": Backjump,
    "restart": Restart,
    "solved": Solved,
}
_NAMES = {cls: name for name, cls in _KINDS.items()}


def event_to_record(event: SearchEvent) -> dict:
    record = {"type": _NAMES[type(event)]}
    record.update(event._asdict())
    if isinstance(event, Solved) and event.model is not None:
        record["model"] = list(event.model)
    return record


def record_to_event(record: dict) -> SearchEvent:
    cls = _KINDS[record["type"]]
    fields = {k: record[k] for k in cls._fields if k in record}
    if cls is Solved and fields.get("model") is not None:
        fields["model"] = tuple(fields["model"])
    return cls(**fields)


class TraceWriter:
    """Observer that writes every event as one JSON object per line."""

    def __init__(self, fh: IO[str]):
        self.fh = fh

    def on_event(self, event: SearchEvent) -> None:
        self.fh.write(json.dumps(event_to_record(event), separators=(",", ":")))
        self.fh.write("\n")


def write_trace(events: Iterable[SearchEvent], fh: IO[str]) -> None:
    writer = TraceWriter(fh)
    for event in events:
        writer.on_event(event)


def read_trace(fh: IO[str]) -> Iterator[SearchEvent]:
    for line in fh:
        line = line.strip()
        if line:
            yield record_to_event(json.loads(line))


class EventRecorder:
    """Observer that keeps every event in memory (tests, small traces)."""

    def __init__(self):
        self.events: list[SearchEvent] = []

    def on_event(self, event: SearchEvent) -> None:
        self.events.append(event)
