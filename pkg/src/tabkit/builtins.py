"""Builtin predicates: unification, integer arithmetic and comparison.

Each builtin is ``fn(machine, args) -> outcome`` (see :mod:`tabkit.machine`)
registered under ``"name/arity"``.  All are deterministic except
``between/3``.
"""

from __future__ import annotations

import operator

from .errors import EvaluationError, InstantiationError, PrologTypeError
from .machine import Alternatives, Builtin
from .term import Bindings, Struct, Var, term_str, unify

BUILTINS: dict = {}


def builtin(key):
    def register(fn):
        BUILTINS[key] = fn
        return fn

    return register


def _trunc_div(a, b):
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


_BINARY = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "//": _trunc_div,
    "mod": operator.mod,
}


def eval_arith(expr, s: Bindings | None) -> int:
    """Evaluate an integer expression over ``+ - * // mod`` and unary minus."""
    t = s.deref(expr) if s is not None else expr
    if type(t) is int:
        return t
    if type(t) is Var:
        raise InstantiationError("arithmetic on an unbound variable")
    if type(t) is Struct:
        if len(t.args) == 2:
            fn = _BINARY.get(t.functor)
            if fn is not None:
                a = eval_arith(t.args[0], s)
                b = eval_arith(t.args[1], s)
                if b == 0 and t.functor in ("//", "mod"):
                    raise EvaluationError("zero_divisor")
                return fn(a, b)
        elif len(t.args) == 1 and t.functor == "-":
            return -eval_arith(t.args[0], s)
        raise PrologTypeError("evaluable", f"{t.functor}/{len(t.args)}")
    raise PrologTypeError("evaluable", term_str(t))


_COMPARE = {
    "<": operator.lt,
    "=<": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "=:=": operator.eq,
    "=\\=": operator.ne,
}


def compare_ints(op: str, a, b, s: Bindings | None) -> bool:
    return _COMPARE[op](eval_arith(a, s), eval_arith(b, s))


@builtin("true/0")
def _true(m, args):
    return True


@builtin("fail/0")
def _fail(m, args):
    return False


@builtin("=/2")
def _unify(m, args):
    return unify(args[0], args[1], m.bindings)


@builtin("is/2")
def _is(m, args):
    return unify(args[0], eval_arith(args[1], m.bindings), m.bindings)


def _make_compare(op):
    def compare(m, args):
        return compare_ints(op, args[0], args[1], m.bindings)

    compare.__name__ = f"compare_{op}"
    return compare


for _op in _COMPARE:
    BUILTINS[f"{_op}/2"] = _make_compare(_op)


@builtin("between/3")
def _between(m, args):
    s = m.bindings
    lo = eval_arith(args[0], s)
    hi = eval_arith(args[1], s)
    x = s.deref(args[2])
    if type(x) is int:
        return lo <= x <= hi
    if type(x) is not Var:
        raise PrologTypeError("integer", term_str(x))
    if lo > hi:
        return False
    if lo == hi:
        return unify(x, lo, s)
    return Alternatives(Builtin("=/2", (x, i)) for i in range(lo, hi + 1))


def is_builtin(name: str, arity: int) -> bool:
    return f"{name}/{arity}" in BUILTINS or (name, arity) in CONTROL


# Control constructs handled by the body compiler rather than at run time.
CONTROL = {(",", 2), (";", 2), ("tabled_call", 1)}
