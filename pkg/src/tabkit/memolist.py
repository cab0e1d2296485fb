"""Memoised nondeterminism over answer lists, in continuation-passing style.

A computation is a function from a continuation ``k`` (value -> list of
results) to the list of all results.  ``choose`` applies ``k`` to each
alternative and concatenates; ``memo`` turns a binary relation into a
memoised one in which the first application to an input becomes the producer
and later applications register their continuation and replay the results
found so far.  New results are sent to every registered continuation and
repeated results contribute the empty list.

Recursion is closed with an explicit parameter: a relation is written as
``rel(self, x)`` and receives its own memoised version as ``self``.  This is
the independent oracle the tabling engine is checked against on binary
relations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable

from .errors import ProgramError
from .term import Struct, Var

Cont = Callable[[Any], list]
Comp = Callable[[Cont], list]


def pure(x) -> Comp:
    return lambda k: k(x)


def choose(xs: Iterable) -> Comp:
    xs = list(xs)

    def comp(k):
        out = []
        for x in xs:
            out.extend(k(x))
        return out

    return comp


def bind(m: Comp, f: Callable[[Any], Comp]) -> Comp:
    return lambda k: m(lambda x: f(x)(k))


def run_memo(comp: Comp) -> list:
    return comp(lambda x: [x])


@dataclass
class MemoCell:
    results: dict = field(default_factory=dict)  # insertion-ordered set
    consumers: list = field(default_factory=list)


class Memo:
    """Memoised version of ``rel(self, x) -> Comp``; call it with an input."""

    def __init__(self, rel: Callable[["Memo", Hashable], Comp]):
        self.rel = rel
        self.cells: dict[Hashable, MemoCell] = {}
        self.producer_runs = 0

    def __call__(self, x) -> Comp:
        return lambda k: self._apply(x, k)

    def _apply(self, x, k):
        cell = self.cells.get(x)
        if cell is not None:
            cell.consumers.insert(0, k)
            out = []
            for y in list(cell.results):
                out.extend(k(y))
            return out
        cell = self.cells[x] = MemoCell()
        self.producer_runs += 1

        def on_result(y):
            if y in cell.results:
                return []
            cell.results[y] = None
            out = list(k(y))
            for kc in list(cell.consumers):
                out.extend(kc(y))
            return out

        return self.rel(self, x)(on_result)


def memo(rel) -> Memo:
    return Memo(rel)


# --------------------------------------------------------------------------
# Chain-form binary programs


class NotChainForm(ProgramError):
    pass


def _chain_body(head, body) -> list[str] | None:
    """Predicate names ``[q1..qn]`` if the clause is
    ``p(X,Z) :- q1(X,Y1), q2(Y1,Y2), ..., qn(Yn-1,Z)`` with distinct variables."""
    goals = []
    todo = [body]
    while todo:
        g = todo.pop()
        if type(g) is Struct and g.functor == "," and len(g.args) == 2:
            todo.append(g.args[1])
            todo.append(g.args[0])
        else:
            goals.append(g)
    x, z = head.args
    if type(x) is not Var or type(z) is not Var or x is z:
        return None
    seen = {x}
    cur = x
    names = []
    for i, g in enumerate(goals):
        if type(g) is not Struct or len(g.args) != 2:
            return None
        a, b = g.args
        if a is not cur or type(b) is not Var or b in seen:
            return None
        if (i == len(goals) - 1) != (b is z):
            return None
        seen.add(b)
        cur = b
        names.append(g.functor)
    return names


def relations_from_db(db) -> dict[str, Memo]:
    """Memoised relations for a program of binary facts and chain rules.

    Tabling directives are ignored: every predicate is memoised, which does
    not change the answer sets.
    """
    from .machine import TRUE

    rules: dict[str, list[list[str]]] = {}
    for (name, arity), clauses in db.source.items():
        if arity != 2:
            raise NotChainForm(f"{name}/{arity} is not binary")
        rules.setdefault(name, [])
        for c in clauses:
            if c.body is TRUE:
                a, b = c.head.args
                if type(a) is Var or type(b) is Var or (type(a) is Struct and not a.ground) or (
                    type(b) is Struct and not b.ground
                ):
                    raise NotChainForm(f"non-ground fact for {name}/2")
                rules[name].append(("fact", a, b))
            else:
                chain = _chain_body(c.head, c.body)
                if chain is None:
                    raise NotChainForm(f"clause for {name}/2 is not in chain form")
                rules[name].append(("chain", chain))

    memos: dict[str, Memo] = {}

    def make_rel(name):
        alts = rules[name]

        def rel(self, x):
            def run_alt(alt):
                if alt[0] == "fact":
                    _, a, b = alt
                    return choose([b] if a == x else [])
                comp = pure(x)
                for q in alt[1]:
                    if q not in memos:
                        raise NotChainForm(f"unknown relation {q}/2")
                    comp = bind(comp, memos[q])
                return comp

            return bind(choose(range(len(alts))), lambda i: run_alt(alts[i]))

        return rel

    for name in rules:
        memos[name] = Memo(make_rel(name))
    return memos


def memo_answers(db, pred: str, x) -> list:
    """All ``Y`` with ``pred(x, Y)``, via the memoised list semantics."""
    memos = relations_from_db(db)
    if pred not in memos:
        raise NotChainForm(f"unknown relation {pred}/2")
    return run_memo(memos[pred](x))


def solve_query(db, query_term, names: dict) -> list[dict]:
    """Answer a ``p(c, Y)`` query with the memo oracle (CLI ``--memolist``)."""
    if type(query_term) is not Struct or len(query_term.args) != 2:
        raise NotChainForm("memolist queries must have the form p(Input, Output)")
    x, y = query_term.args
    if type(x) is Var or (type(x) is Struct and not x.ground):
        raise NotChainForm("memolist queries need a ground input argument")
    outs = memo_answers(db, query_term.functor, x)
    yname = next((n for n, v in names.items() if v is y), None)
    if type(y) is Var:
        return [{yname: o} if yname and not yname.startswith("_") else {} for o in outs]
    return [{} for o in outs if o == y]


__all__ = [
    "MemoCell",
    "Memo",
    "NotChainForm",
    "bind",
    "choose",
    "memo",
    "memo_answers",
    "pure",
    "relations_from_db",
    "run_memo",
    "solve_query",
]
