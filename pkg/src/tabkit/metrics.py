"""Producer/consumer/solution counters derived from the tabling event log."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import TabkitError
from .tabling import ANSWER_DUPLICATE, ANSWER_EMITTED, ANSWER_INSERTED, CONSUMER_REGISTERED, PRODUCER_STARTED


class EventOrderError(TabkitError):
    pass


@dataclass
class Metrics:
    n_p: int = 0
    n_c: int = 0
    n_s: int = 0
    duplicates: int = 0
    emitted: int = 0
    cont_frames_total: int = 0
    max_cont_frames: int = 0
    captures: int = 0
    resumptions: int = 0
    last_ordinal: int = 0

    @property
    def r_c(self) -> float | None:
        return self.n_c / self.n_p if self.n_p else None

    @property
    def r_s(self) -> float | None:
        return self.n_s / self.n_p if self.n_p else None

    @property
    def tabled_calls(self) -> int:
        return self.n_p + self.n_c


_COUNTER = {
    PRODUCER_STARTED: "n_p",
    CONSUMER_REGISTERED: "n_c",
    ANSWER_INSERTED: "n_s",
    ANSWER_DUPLICATE: "duplicates",
    ANSWER_EMITTED: "emitted",
}


def record(event, m: Metrics) -> Metrics:
    """Count one event.  Events must arrive in increasing ordinal order."""
    if event.ordinal <= m.last_ordinal:
        raise EventOrderError(f"event ordinal {event.ordinal} after {m.last_ordinal}")
    m.last_ordinal = event.ordinal
    field = _COUNTER[event.kind]
    setattr(m, field, getattr(m, field) + 1)
    return m


def from_run(run) -> Metrics:
    """Metrics of a finished :class:`~tabkit.tabling.TabledRun`."""
    m = Metrics()
    for ev in run.events:
        record(ev, m)
    mach = run.machine
    m.cont_frames_total = mach.captured_frames
    m.max_cont_frames = mach.max_captured_frames
    m.captures = mach.captures
    m.resumptions = run.resumptions
    return m


def fmt_ratio(x: float | None) -> str:
    return "-" if x is None else f"{x:.1f}"


def report(m: Metrics, name: str = "") -> tuple:
    """``(name, n_p, n_c, n_s, r_c, r_s)`` with ratios as one-decimal strings."""
    return (name, m.n_p, m.n_c, m.n_s, fmt_ratio(m.r_c), fmt_ratio(m.r_s))
