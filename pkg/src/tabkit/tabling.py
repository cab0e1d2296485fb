"""Tabled execution as an effect handler for the ``tab`` prompt.

A tabled predicate ``p/n`` is compiled (see :mod:`tabkit.program`) into a
wrapper that performs ``Shift(tab, 'p#'(Args))``.  The handler installed by
:func:`run_tabled` receives the call together with the continuation up to the
enclosing ``tab`` reset and decides between two cases:

* the call's variant class has no table yet: it becomes the *producer*.  A
  table entry is created holding the caller's continuation ``KP``, and the
  worker clauses are run under a fresh reset, followed by a step that records
  each new answer and passes it to ``KP`` first and then to every registered
  consumer;
* otherwise it is a *consumer*: its continuation is registered with the entry
  and resumed with each answer already in the table.

Tables live for the whole run and are not affected by backtracking.  If an
error escapes, the tables built so far stay in the store (see
:attr:`TabledRun.store`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

from .machine import DONE, Alternatives, Call, Conj, Continuation, Host, Machine, Reset, resume
from .program import TAB_PROMPT, WORKER_SUFFIX, parse_query
from .term import Slot, Struct, TStruct, instantiate, rename_fresh, resolve, templatize, term_str, term_variables, variant_key


@dataclass(frozen=True)
class AnswerEvent:
    kind: str
    key: object
    tuple: tuple | None
    ordinal: int


PRODUCER_STARTED = "producer_started"
CONSUMER_REGISTERED = "consumer_registered"
ANSWER_INSERTED = "answer_inserted"
ANSWER_DUPLICATE = "answer_duplicate"
ANSWER_EMITTED = "answer_emitted"
EVENT_KINDS = (PRODUCER_STARTED, CONSUMER_REGISTERED, ANSWER_INSERTED, ANSWER_DUPLICATE, ANSWER_EMITTED)


class TableEntry:
    """Answers of one variant class plus the continuations waiting on them.

    ``answers`` holds canonical answer tuples (templates) in insertion order.
    The producer's continuation is kept apart from the consumers; :attr:`conts`
    gives the dispatch order, producer first and then the consumers newest
    first.
    """

    __slots__ = ("key", "answers", "_seen", "producer", "consumers")

    def __init__(self, key, producer: Continuation):
        self.key = key
        self.answers: list[tuple] = []
        self._seen: set = set()
        self.producer = producer
        self.consumers: list[Continuation] = []

    def add(self, answer: tuple) -> bool:
        if answer in self._seen:
            return False
        self._seen.add(answer)
        self.answers.append(answer)
        return True

    @property
    def conts(self) -> list[Continuation]:
        return [self.producer, *reversed(self.consumers)]

    def answer_terms(self) -> list[tuple]:
        """Answers as terms, each with its own fresh variables."""
        return [tuple(instantiate(a, [None] * _nslots(a)) for a in ans) for ans in self.answers]


def _nslots(t) -> int:
    # slots in an answer template are numbered densely from 0 across the tuple
    top = -1
    todo = [t]
    while todo:
        x = todo.pop()
        if type(x) is Slot:
            top = max(top, x.index)
        elif type(x) is TStruct:
            todo.extend(x.args)
    return top + 1


class TableStore(dict):
    """Map from variant key to :class:`TableEntry`."""

    def dump(self) -> dict:
        return table_dump(self)


def table_dump(store: TableStore) -> dict:
    """``{key: (answer count, continuation count)}``, keys in creation order."""
    return {k: (len(e.answers), 1 + len(e.consumers)) for k, e in store.items()}


def table_key(head, s=None):
    """Variant key of a tabled call, named after the user predicate."""
    key = variant_key(head, s)
    if type(key) is Struct and key.functor.endswith(WORKER_SUFFIX):
        return Struct(key.functor[: -len(WORKER_SUFFIX)], key.args)
    return key


class TabledRun:
    """State of one tabled query: machine, table store and event log."""

    def __init__(self, db, step_budget: int | None = None, on_event: Callable | None = None, keep_events=True):
        self.machine = Machine(db, step_budget=step_budget)
        self.store = TableStore()
        self.events: list[AnswerEvent] = []
        self.ordinal = 0
        self.keep_events = keep_events
        self.on_event = on_event
        self.ans: list = []
        self.resumptions = 0
        self.on_tab = self._on_tab

    # -- events ----------------------------------------------------------------

    def _event(self, kind, key, tup=None):
        self.ordinal += 1
        ev = AnswerEvent(kind, key, tup, self.ordinal)
        if self.keep_events:
            self.events.append(ev)
        if self.on_event is not None:
            self.on_event(ev)

    # -- handler -----------------------------------------------------------------

    def _on_tab(self, result):
        if result is DONE:
            return True
        m = self.machine
        s = m.bindings
        head = result.signal
        ys = term_variables(head, s)
        k = result.cont.with_params(ys + self.ans, s)
        key = table_key(head, s)
        entry = self.store.get(key)
        if entry is not None:
            entry.consumers.append(k)
            self._event(CONSUMER_REGISTERED, key)
            answers = entry.answers[:]
            if not answers:
                return False
            return Alternatives(self._resume_each(k, answers))
        entry = self.store[key] = TableEntry(key, k)
        self._event(PRODUCER_STARTED, key)
        work, mapping = rename_fresh(head, (), s)
        ys2 = tuple(mapping[v] for v in ys)
        return Reset(TAB_PROMPT, Conj(Call(work), Host(_add_solution, ys2, (self, entry))), self.on_tab, True)

    handle_suspension = _on_tab

    def _resume_each(self, k, answers):
        pad = [None] * len(self.ans)
        for ans in answers:
            slots = [None] * _nslots_tuple(ans)
            self.resumptions += 1
            yield Reset(TAB_PROMPT, resume(k, [instantiate(a, slots) for a in ans] + pad), self.on_tab, True)

    def _dispatch(self, ys, conts):
        pad = [None] * len(self.ans)
        args = list(ys) + pad
        for k in conts:
            self.resumptions += 1
            yield Reset(TAB_PROMPT, resume(k, args), self.on_tab, True)

    # -- top level ---------------------------------------------------------------

    def solve(self, query, names: dict | None = None) -> Iterator[dict]:
        """Run ``query`` (a term) with tabling; yields ``{name: term}``."""
        from .machine import query_variables
        from .program import goal_from_term

        m = self.machine
        self.ans = term_variables(query, m.bindings)
        qvars = query_variables(query, names)
        goal = Reset(TAB_PROMPT, goal_from_term(query, m.builtins), self.on_tab)
        for _ in m.run(goal):
            sol = {n: resolve(v, m.bindings) for n, v in qvars}
            self._event(ANSWER_EMITTED, None, tuple(sol.values()))
            yield sol


def _nslots_tuple(ans) -> int:
    return max((_nslots(a) for a in ans), default=0)


def _add_solution(m, *args):
    *ys, (run, entry) = args
    s = m.bindings
    slot_of: dict = {}
    answer = tuple(templatize(y, s, slot_of) for y in ys)
    if not entry.add(answer):
        run._event(ANSWER_DUPLICATE, entry.key, answer)
        return False
    run._event(ANSWER_INSERTED, entry.key, answer)
    return Alternatives(run._dispatch(ys, entry.conts))


add_solution = _add_solution


def run_tabled(db, query, names: dict | None = None, step_budget: int | None = None, run: TabledRun | None = None):
    """Stream the solutions of ``query`` under tabling.

    ``query`` is a term or query text.  The returned :class:`TabledRun`
    exposes the table store and event log; iterate :meth:`TabledRun.solve`
    (or use :func:`solve_tabled`) to get solutions.
    """
    run = run or TabledRun(db, step_budget=step_budget)
    if isinstance(query, str):
        q = parse_query(query)
        query, names = q.term, q.names
    return run, run.solve(query, names)


def solve_tabled(db, query, names: dict | None = None, step_budget: int | None = None) -> Iterator[dict]:
    _, stream = run_tabled(db, query, names, step_budget)
    return stream


def format_solution(sol: dict) -> str:
    if not sol:
        return "true"
    return ", ".join(f"{n}={term_str(v)}" for n, v in sol.items())
