"""Nondeterministic goal machine with multi-prompt delimited control.

The machine keeps three pieces of state:

* the *goal stack*, an immutable linked list ``(goal, rest)`` of pending
  frames; ``None`` is the empty stack (success);
* the *choice-point stack*, each entry remembering a goal stack, a trail mark
  and the alternatives still to try;
* a :class:`~tabkit.term.Bindings` store shared by both.

``Reset(p, g, handler)`` pushes a ``ResetMarker`` for prompt ``p`` under
``g``.  If ``g`` runs to completion the marker is popped and the handler is
called with ``DONE``.  ``Shift(p, sig)`` removes the frames above the nearest
marker for ``p``, freezes them into a :class:`Continuation` and calls that
marker's handler with ``Susp(sig, k)``; the marker itself is consumed, so the
continuation does not re-establish the delimited context.  Choice points are
untouched by a shift: alternatives created inside the reset stay on the
machine and are explored on backtracking.

Handlers and builtins report back with an *outcome*: ``True`` to continue,
``False`` to fail, a goal to run next, or :class:`Alternatives` to run each
of several goals on successive backtracks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import ExistenceError, ResumeArityError, StepBudgetExceeded, UnhandledShift
from .term import (
    Atom,
    Bindings,
    Struct,
    Slot,
    Var,
    instantiate,
    match_template,
    resolve,
    templatize,
    term_variables,
)


# --------------------------------------------------------------------------
# Goals
#
# Every goal class can build a template of itself (``templ``) and rebuild a
# live goal from a template (``inst``).


class Goal:
    __slots__ = ()

    def templ(self, s, slot_of):
        return self

    def inst(self, slots):
        return self


class _True(Goal):
    __slots__ = ()

    def __repr__(self):
        return "True"


class _Fail(Goal):
    __slots__ = ()

    def __repr__(self):
        return "Fail"


TRUE = _True()
FAIL = _Fail()


class Call(Goal):
    __slots__ = ("term",)

    def __init__(self, term):
        self.term = term

    def templ(self, s, slot_of):
        return Call(templatize(self.term, s, slot_of))

    def inst(self, slots):
        return Call(instantiate(self.term, slots))

    def __repr__(self):
        return f"Call({self.term!r})"


class Conj(Goal):
    __slots__ = ("left", "right")

    def __init__(self, left, right):
        self.left = left
        self.right = right

    def templ(self, s, slot_of):
        return Conj(self.left.templ(s, slot_of), self.right.templ(s, slot_of))

    def inst(self, slots):
        return Conj(self.left.inst(slots), self.right.inst(slots))

    def __repr__(self):
        return f"Conj({self.left!r}, {self.right!r})"


class Disj(Goal):
    __slots__ = ("left", "right")

    def __init__(self, left, right):
        self.left = left
        self.right = right

    def templ(self, s, slot_of):
        return Disj(self.left.templ(s, slot_of), self.right.templ(s, slot_of))

    def inst(self, slots):
        return Disj(self.left.inst(slots), self.right.inst(slots))

    def __repr__(self):
        return f"Disj({self.left!r}, {self.right!r})"


class Builtin(Goal):
    """Call of a registered builtin; ``op`` is ``"name/arity"``."""

    __slots__ = ("op", "args")

    def __init__(self, op: str, args: tuple):
        self.op = op
        self.args = args

    def templ(self, s, slot_of):
        return Builtin(self.op, tuple(templatize(a, s, slot_of) for a in self.args))

    def inst(self, slots):
        return Builtin(self.op, tuple([instantiate(a, slots) for a in self.args]))

    def __repr__(self):
        return f"Builtin({self.op}, {self.args!r})"


class Host(Goal):
    """Engine-internal step: ``fn(machine, *terms, data)`` returns an outcome.

    ``terms`` take part in capture and renaming; ``data`` is opaque.
    """

    __slots__ = ("fn", "terms", "data")

    def __init__(self, fn, terms: tuple, data=None):
        self.fn = fn
        self.terms = terms
        self.data = data

    def templ(self, s, slot_of):
        return Host(self.fn, tuple(templatize(a, s, slot_of) for a in self.terms), self.data)

    def inst(self, slots):
        return Host(self.fn, tuple([instantiate(a, slots) for a in self.terms]), self.data)

    def __repr__(self):
        return f"Host({getattr(self.fn, '__name__', self.fn)}, {self.terms!r})"


class Shift(Goal):
    __slots__ = ("prompt", "signal")

    def __init__(self, prompt, signal):
        self.prompt = prompt
        self.signal = signal

    def templ(self, s, slot_of):
        return Shift(self.prompt, templatize(self.signal, s, slot_of))

    def inst(self, slots):
        return Shift(self.prompt, instantiate(self.signal, slots))

    def __repr__(self):
        return f"Shift({self.prompt!r}, {self.signal!r})"


class Frames(Goal):
    """Goal sequence whose members become separate stack entries when run.

    Resumed continuations use this instead of a ``Conj`` chain so that any
    reset markers among the frames are visible to a later shift.
    """

    __slots__ = ("goals",)

    def __init__(self, goals: tuple):
        self.goals = goals

    def templ(self, s, slot_of):
        return Frames(tuple(g.templ(s, slot_of) for g in self.goals))

    def inst(self, slots):
        return Frames(tuple([g.inst(slots) for g in self.goals]))

    def __repr__(self):
        return f"Frames({len(self.goals)})"


class Reset(Goal):
    """Run ``goal`` delimited by a marker for ``prompt``.

    With ``merge`` set, a reset started directly on top of a marker with the
    same prompt and handler reuses that marker instead of pushing a second
    one.  This is only sound when the handler treats ``DONE`` as a no-op, and
    it keeps chains of resumed continuations from piling up markers.
    """

    __slots__ = ("prompt", "goal", "handler", "merge")

    def __init__(self, prompt, goal, handler, merge=False):
        self.prompt = prompt
        self.goal = goal
        self.handler = handler
        self.merge = merge

    def templ(self, s, slot_of):
        return Reset(self.prompt, self.goal.templ(s, slot_of), self.handler, self.merge)

    def inst(self, slots):
        return Reset(self.prompt, self.goal.inst(slots), self.handler, self.merge)

    def __repr__(self):
        return f"Reset({self.prompt!r}, {self.goal!r})"


class ResetMarker(Goal):
    __slots__ = ("prompt", "handler")

    def __init__(self, prompt, handler):
        self.prompt = prompt
        self.handler = handler

    def __repr__(self):
        return f"ResetMarker({self.prompt!r})"


def conj(goals: Sequence[Goal]) -> Goal:
    goals = [g for g in goals if g is not TRUE]
    if not goals:
        return TRUE
    out = goals[-1]
    for g in reversed(goals[:-1]):
        out = Conj(g, out)
    return out


class Alternatives:
    """Outcome that runs each goal of ``goals`` on successive backtracks.

    ``goals`` is consumed lazily, after the bindings of the choice point have
    been restored.
    """

    __slots__ = ("goals",)

    def __init__(self, goals: Iterable[Goal]):
        self.goals = iter(goals)


# --------------------------------------------------------------------------
# Reset results and continuations


class _Done:
    __slots__ = ()

    def __repr__(self):
        return "Done"


DONE = _Done()


@dataclass
class Susp:
    signal: object
    cont: "Continuation"


class Continuation:
    """Frozen goal segment between a shift and its reset.

    Frames are stored as templates with the bindings at capture time resolved
    in; every free variable of the segment has a slot.  ``params`` designates
    the variables that are supplied by the caller on :func:`resume`; all other
    variables are renamed apart on every resumption.
    """

    __slots__ = ("frames", "nslots", "slot_of", "params", "param_vars")

    def __init__(self, frames: tuple, slot_of: dict, params: tuple = (), param_vars: tuple = (), nslots=None):
        self.frames = frames
        self.slot_of = slot_of
        self.params = params
        self.param_vars = param_vars
        self.nslots = len(slot_of) if nslots is None else nslots

    @classmethod
    def capture(cls, frames: Sequence[Goal], s: Bindings) -> "Continuation":
        slot_of: dict = {}
        templ = tuple(f.templ(s, slot_of) for f in frames if f is not TRUE)
        return cls(templ, slot_of)

    def with_params(self, params: Sequence[Var], s: Bindings | None = None) -> "Continuation":
        """Designate ``params`` as the caller-supplied parameters.

        A parameter that is bound under ``s`` is recorded by its current value
        (as a template), so resuming unifies the supplied argument with it.
        """
        slot_of = dict(self.slot_of)
        idx = tuple(templatize(v, s, slot_of) for v in params)
        return Continuation(self.frames, slot_of, idx, tuple(params), len(slot_of))

    def __len__(self):
        return len(self.frames)

    def __repr__(self):
        return f"Continuation({len(self.frames)} frames, {len(self.params)} params)"


def resume(k: Continuation, args: Sequence | None = None) -> Goal:
    """Goal running a fresh copy of ``k`` with its parameters set to ``args``.

    A parameter whose argument is ``None`` (or all of them, when ``args`` is
    omitted) keeps the original variable, so it stays shared with the signal.
    Building the goal does not touch any bindings.
    """
    params = k.params
    if args is not None and len(args) != len(params):
        raise ResumeArityError(f"continuation takes {len(params)} parameters, got {len(args)}")
    slots: list = [None] * k.nslots
    pending = []
    for j, p in enumerate(params):
        a = None if args is None else args[j]
        if a is None:
            a = k.param_vars[j]
        if type(p) is Slot and slots[p.index] is None:
            slots[p.index] = a
        else:
            pending.append((p, a))
    goals: list = [Builtin("=/2", (instantiate(p, slots), a)) for p, a in pending]
    goals.extend(f.inst(slots) for f in k.frames)
    if not goals:
        return TRUE
    return goals[0] if len(goals) == 1 else Frames(tuple(goals))


# --------------------------------------------------------------------------
# The machine


class Machine:
    """One engine instance: bindings, program and step accounting.

    ``db`` is anything with a ``procedure(name, arity)`` method returning a
    compiled procedure or ``None`` (see :mod:`tabkit.program`).
    """

    def __init__(self, db=None, builtins: dict | None = None, step_budget: int | None = None):
        if builtins is None:
            from .builtins import BUILTINS

            builtins = BUILTINS
        self.db = db
        self.builtins = builtins
        self.bindings = Bindings()
        self.step_budget = step_budget
        self.steps = 0
        self.captures = 0
        self.captured_frames = 0
        self.max_captured_frames = 0
        self.merged_markers = 0

    # -- public entry points -------------------------------------------------

    def run(self, goal: Goal) -> Iterator[None]:
        """Run ``goal``; yields once per success with bindings in place."""
        return self._run(goal)

    def reset_run(self, prompt, goal: Goal) -> Iterator[object]:
        """Run ``goal`` under a reset for ``prompt``; yields DONE or Susp."""
        box: list = []

        def handler(result):
            box.append(result)
            return True

        for _ in self._run(Reset(prompt, goal, handler)):
            yield box.pop()

    def solve(self, query, names: dict | None = None) -> Iterator[dict]:
        """Plain SLD resolution of a query term (or goal).

        Yields ``{name: value}`` for the named variables of the query.
        """
        from .program import goal_from_term

        goal = query if isinstance(query, Goal) else goal_from_term(query, self.builtins)
        qvars = query_variables(query, names)
        for _ in self._run(goal):
            yield {n: resolve(v, self.bindings) for n, v in qvars}

    # -- core loop -----------------------------------------------------------

    def _run(self, goal: Goal) -> Iterator[None]:
        s = self.bindings
        trail = s.trail
        builtins = self.builtins
        db = self.db
        budget = self.step_budget
        cps: list = []
        stack = (goal, None)

        while True:
            if stack is None:
                yield
                stack = self._backtrack(cps, s)
                if stack is _EXHAUSTED:
                    return
                continue

            self.steps += 1
            if budget is not None and self.steps > budget:
                raise StepBudgetExceeded(budget)

            g, rest = stack
            tg = type(g)

            if tg is Call:
                t = s.deref(g.term)
                if type(t) is Struct:
                    name, args = t.functor, t.args
                elif type(t) is Atom:
                    name, args = t.name, ()
                else:
                    from .errors import InstantiationError, PrologTypeError

                    if type(t) is Var:
                        raise InstantiationError("call of an unbound variable")
                    raise PrologTypeError("callable", t)
                proc = db.procedure(name, len(args)) if db is not None else None
                if proc is None:
                    key = f"{name}/{len(args)}"
                    fn = builtins.get(key)
                    if fn is None:
                        raise ExistenceError(name, len(args))
                    stack = self._outcome(fn(self, args), rest, cps, s)
                    continue
                clauses = proc.select(args, s)
                stack = self._try_clauses(args, clauses, 0, rest, cps, s, None)

            elif tg is Conj:
                stack = (g.left, (g.right, rest))

            elif tg is Frames:
                for f in reversed(g.goals):
                    rest = (f, rest)
                stack = rest

            elif tg is Builtin:
                stack = self._outcome(builtins[g.op](self, g.args), rest, cps, s)

            elif tg is Host:
                stack = self._outcome(g.fn(self, *g.terms, g.data), rest, cps, s)

            elif g is TRUE:
                stack = rest

            elif tg is Disj:
                cps.append([_CP_GOAL, len(trail), rest, g.right])
                stack = (g.left, rest)

            elif tg is Shift:
                stack = self._shift(g, rest, cps, s)

            elif tg is Reset:
                if (
                    g.merge
                    and rest is not None
                    and type(rest[0]) is ResetMarker
                    and rest[0].handler == g.handler
                    and rest[0].prompt == g.prompt
                ):
                    self.merged_markers += 1
                    stack = (g.goal, rest)
                else:
                    stack = (g.goal, (ResetMarker(g.prompt, g.handler), rest))

            elif tg is ResetMarker:
                stack = self._outcome(g.handler(DONE), rest, cps, s)

            elif g is FAIL:
                stack = _FAILED

            else:
                raise TypeError(f"not a goal: {g!r}")

            if stack is _FAILED:
                stack = self._backtrack(cps, s)
            if stack is _EXHAUSTED:
                return

    def _shift(self, g: Shift, rest, cps, s):
        prompt = g.prompt
        frames = []
        st = rest
        while st is not None:
            f, nxt = st
            if type(f) is ResetMarker and f.prompt == prompt:
                break
            frames.append(f)
            st = nxt
        else:
            raise UnhandledShift(prompt, resolve(g.signal, s))
        k = Continuation.capture(frames, s)
        n = len(k.frames)
        self.captures += 1
        self.captured_frames += n
        if n > self.max_captured_frames:
            self.max_captured_frames = n
        return self._outcome(f.handler(Susp(g.signal, k)), nxt, cps, s)

    def _outcome(self, out, rest, cps, s):
        if out is True:
            return rest
        if out is False or out is None:
            return _FAILED
        if type(out) is Alternatives:
            cp = [_CP_ALTS, len(s.trail), rest, out.goals]
            cps.append(cp)
            nxt = next(out.goals, None)
            if nxt is None:
                cps.pop()
                return _FAILED
            return (nxt, rest)
        return (out, rest)

    def _try_clauses(self, args, clauses, i, rest, cps, s, cp):
        n = len(clauses)
        trail = s.trail
        mark = len(trail) if cp is None else cp[1]
        while i < n:
            cl = clauses[i]
            i += 1
            slots = [None] * cl.nslots
            ok = True
            for ta, a in zip(cl.head, args):
                if not match_template(ta, a, slots, s):
                    ok = False
                    break
            if not ok:
                s.undo(mark)
                continue
            if i < n:
                if cp is None:
                    cps.append([_CP_CLAUSES, mark, rest, args, clauses, i])
                else:
                    cp[5] = i
            elif cp is not None:
                cps.pop()
            st = rest
            body = cl.body
            for j in range(len(body) - 1, -1, -1):
                st = (body[j].inst(slots), st)
            return st
        if cp is not None:
            cps.pop()
        return _FAILED

    def _backtrack(self, cps, s):
        while cps:
            cp = cps[-1]
            s.undo(cp[1])
            kind = cp[0]
            if kind == _CP_CLAUSES:
                st = self._try_clauses(cp[3], cp[4], cp[5], cp[2], cps, s, cp)
                if st is not _FAILED:
                    return st
            elif kind == _CP_GOAL:
                cps.pop()
                return (cp[3], cp[2])
            else:
                nxt = next(cp[3], None)
                if nxt is None:
                    cps.pop()
                else:
                    return (nxt, cp[2])
        return _EXHAUSTED


_CP_CLAUSES = 0
_CP_GOAL = 1
_CP_ALTS = 2
_FAILED = object()
_EXHAUSTED = object()


def query_variables(query, names: dict | None = None) -> list[tuple[str, Var]]:
    """Named variables of a query in first-occurrence order.

    ``names`` maps names to variables (as returned by the parser); otherwise
    variables carrying a ``name`` attribute are used.
    """
    if names is not None:
        return [(n, v) for n, v in names.items() if not n.startswith("_")]
    if isinstance(query, Goal):
        return []
    out = []
    for v in term_variables(query):
        if v.name and not v.name.startswith("_"):
            out.append((v.name, v))
    return out


SolutionStream = Iterator[dict]
