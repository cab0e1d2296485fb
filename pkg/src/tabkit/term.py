"""Terms, bindings with an undo trail, and the variable-level operations on them.

Terms are immutable Python values:

* ``Var``      a logic variable, identified by a unique integer
* ``Atom``     an interned symbol; compare with ``is``
* ``int``      integers are plain Python ints (arbitrary precision)
* ``Struct``   a compound term with a non-empty argument tuple

Variable bindings live outside the terms, in a ``Bindings`` store, so a term
can be shared freely between engine states.  Everything that copies terms with
variables replaced goes through *templates*: a template is a term in which
variables have been replaced by numbered ``Slot`` markers.  Clause bodies,
captured continuations and stored answers are all held as templates and
turned back into live terms with :func:`instantiate`.
"""

from __future__ import annotations

import itertools
import re
import sys
from typing import Iterable, Sequence, Union

_var_ids = itertools.count()


class Var:
    __slots__ = ("id", "name")

    def __init__(self, name: str | None = None):
        self.id = next(_var_ids)
        self.name = name

    def __repr__(self):
        return f"Var({self.name or '_'}#{self.id})"


class Atom:
    __slots__ = ("name",)
    _table: dict[str, "Atom"] = {}

    def __new__(cls, name: str):
        atom = cls._table.get(name)
        if atom is None:
            atom = object.__new__(cls)
            atom.name = sys.intern(name)
            cls._table[name] = atom
        return atom

    def __reduce__(self):
        return (Atom, (self.name,))

    def __repr__(self):
        return f"Atom({self.name!r})"


class Struct:
    """Compound term.  ``ground`` records that no variable occurs inside, which
    lets the variable-level walks skip the whole subterm."""

    __slots__ = ("functor", "args", "_hash", "ground")

    def __init__(self, functor: str, args: tuple):
        self.functor = functor
        self.args = args
        self._hash = None
        ground = True
        for a in args:
            ta = type(a)
            if ta is Var or (ta is Struct and not a.ground):
                ground = False
                break
        self.ground = ground

    @property
    def arity(self) -> int:
        return len(self.args)

    def __eq__(self, other):
        return self is other or (type(other) is Struct and _struct_eq(self, other))

    def __hash__(self):
        h = self._hash
        if h is None:
            h = _struct_hash(self)
        return h

    def __repr__(self):
        return f"Struct({self.functor!r}, {self.args!r})"


Term = Union[Var, Atom, int, Struct]


# Hashing and equality walk the term with an explicit stack: lists with tens
# of thousands of cells are ordinary here and would overflow the C stack if
# left to tuple.__hash__ / tuple.__eq__.

_COMPOUND = ()  # filled in once TStruct is defined


def _struct_hash(t) -> int:
    stack = [t]
    while stack:
        x = stack[-1]
        pending = False
        for a in x.args:
            if type(a) in _COMPOUND and a._hash is None:
                stack.append(a)
                pending = True
        if pending:
            continue
        stack.pop()
        if x._hash is None:
            x._hash = hash((x.functor, type(x) is Struct, tuple([hash(a) for a in x.args])))
    return t._hash


def _struct_eq(a, b) -> bool:
    todo = [(a, b)]
    while todo:
        x, y = todo.pop()
        if x is y:
            continue
        if x.functor != y.functor or len(x.args) != len(y.args):
            return False
        if x._hash is not None and y._hash is not None and x._hash != y._hash:
            return False
        for p, q in zip(x.args, y.args):
            if p is q:
                continue
            tp = type(p)
            if tp is not type(q):
                return False
            if tp in _COMPOUND:
                todo.append((p, q))
            elif p != q:
                return False
    return True


NIL = Atom("[]")
TRUE = Atom("true")
CONS = "."
VAR_MARKER = "$VAR"


def mkstruct(functor: str, *args: Term) -> Term:
    """Build ``functor(args...)``; zero arguments gives an atom."""
    if not args:
        return Atom(functor)
    return Struct(sys.intern(functor), tuple(args))


def make_list(items: Iterable[Term], tail: Term = NIL) -> Term:
    result = tail
    for item in reversed(list(items)):
        result = Struct(CONS, (item, result))
    return result


def is_atomic(t) -> bool:
    return type(t) is Atom or type(t) is int


def functor_key(t) -> tuple[str, int] | None:
    if type(t) is Struct:
        return (t.functor, len(t.args))
    if type(t) is Atom:
        return (t.name, 0)
    return None


# --------------------------------------------------------------------------
# Bindings


class Bindings:
    """Variable store with a trail of bound variables.

    ``mark()`` returns a checkpoint; ``undo(mark)`` removes every binding made
    since, leaving the store exactly as it was.
    """

    __slots__ = ("values", "trail")

    def __init__(self):
        self.values: dict[Var, Term] = {}
        self.trail: list[Var] = []

    def deref(self, t):
        values = self.values
        while type(t) is Var:
            nxt = values.get(t)
            if nxt is None:
                return t
            t = nxt
        return t

    def bind(self, var: Var, value: Term) -> None:
        self.values[var] = value
        self.trail.append(var)

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        trail = self.trail
        values = self.values
        while len(trail) > mark:
            del values[trail.pop()]

    def snapshot(self) -> dict:
        return dict(self.values)

    def __len__(self):
        return len(self.values)


def deref(t, s: Bindings | None):
    if s is None:
        return t
    return s.deref(t)


def occurs(var: Var, t, s: Bindings) -> bool:
    values = s.values
    todo = [t]
    while todo:
        t = todo.pop()
        while type(t) is Var:
            nxt = values.get(t)
            if nxt is None:
                break
            t = nxt
        if t is var:
            return True
        if type(t) is Struct and not t.ground:
            todo.extend(t.args)
    return False


def _bind_checked(var: Var, t, s: Bindings) -> bool:
    if type(t) is Struct and not t.ground and occurs(var, t, s):
        return False
    s.bind(var, t)
    return True


def unify(a, b, s: Bindings) -> bool:
    """Unify ``a`` and ``b`` under ``s``, with occurs check.

    On success the new bindings are recorded on ``s`` (and its trail); on
    failure ``s`` is left unchanged.
    """
    mark = len(s.trail)
    if _unify(a, b, s):
        return True
    s.undo(mark)
    return False


def _unify(a, b, s: Bindings) -> bool:
    values = s.values
    todo = [(a, b)]
    while todo:
        a, b = todo.pop()
        while type(a) is Var:
            nxt = values.get(a)
            if nxt is None:
                break
            a = nxt
        while type(b) is Var:
            nxt = values.get(b)
            if nxt is None:
                break
            b = nxt
        if a is b:
            continue
        ta = type(a)
        tb = type(b)
        if ta is Var:
            if tb is Var:
                # bind the younger variable to the older one
                if a.id < b.id:
                    s.bind(b, a)
                else:
                    s.bind(a, b)
            elif not _bind_checked(a, b, s):
                return False
        elif tb is Var:
            if not _bind_checked(b, a, s):
                return False
        elif ta is Struct:
            if tb is not Struct or a.functor != b.functor or len(a.args) != len(b.args):
                return False
            if a.ground and b.ground:
                if not _struct_eq(a, b):
                    return False
                continue
            todo.extend(zip(a.args, b.args))
        elif ta is int:
            if tb is not int or a != b:
                return False
        else:
            return False
    return True


def resolve(t, s: Bindings | None):
    """Return ``t`` with all bound variables replaced by their values."""
    if s is None:
        return t
    t = s.deref(t)
    if type(t) is not Struct or t.ground:
        return t
    return _rebuild(t, s, _identity)


def _identity(v):
    return v


def term_variables(t, s: Bindings | None = None) -> list[Var]:
    """Distinct free variables of ``t`` in depth-first, left-to-right order."""
    seen = set()
    out = []
    todo = [t]
    while todo:
        t = deref(todo.pop(), s)
        if type(t) is Var:
            if t not in seen:
                seen.add(t)
                out.append(t)
        elif type(t) is Struct and not t.ground:
            todo.extend(reversed(t.args))
    return out


_markers: list[Struct] = []


def var_marker(i: int) -> Struct:
    while len(_markers) <= i:
        _markers.append(Struct(VAR_MARKER, (len(_markers),)))
    return _markers[i]


def variant_key(call, s: Bindings | None = None):
    """Ground canonical form of ``call``: each distinct free variable becomes
    ``'$VAR'(i)``, numbered in order of first occurrence."""
    numbering: dict[Var, Struct] = {}

    def number(v):
        m = numbering.get(v)
        if m is None:
            m = numbering[v] = var_marker(len(numbering))
        return m

    return _rebuild(call, s, number)


def rename_fresh(t, protected: Sequence[Var] = (), s: Bindings | None = None):
    """Copy ``t`` with every free variable except ``protected`` replaced by a
    fresh one.  Returns ``(copy, mapping)`` where mapping sends old variables to
    their replacements."""
    keep = set(protected)
    mapping: dict[Var, Var] = {}

    def fresh(v):
        if v in keep:
            return v
        w = mapping.get(v)
        if w is None:
            w = mapping[v] = Var(v.name)
        return w

    return _rebuild(t, s, fresh), mapping


def is_variant(a, b, s: Bindings | None = None) -> bool:
    """Simultaneous-traversal variant check (independent of variant_key)."""
    fwd: dict[Var, Var] = {}
    back: dict[Var, Var] = {}
    todo = [(a, b)]
    while todo:
        x, y = todo.pop()
        x = deref(x, s)
        y = deref(y, s)
        if type(x) is Var or type(y) is Var:
            if type(x) is not Var or type(y) is not Var:
                return False
            if fwd.setdefault(x, y) is not y or back.setdefault(y, x) is not x:
                return False
        elif type(x) is Struct:
            if type(y) is not Struct or x.functor != y.functor or len(x.args) != len(y.args):
                return False
            todo.extend(zip(x.args, y.args))
        elif type(x) is not type(y) or x != y:
            return False
    return True


# --------------------------------------------------------------------------
# Templates


class Slot:
    """Numbered hole in a template.  Slots are interned per index."""

    __slots__ = ("index",)
    _cache: list["Slot"] = []

    def __new__(cls, index: int):
        cache = cls._cache
        while len(cache) <= index:
            s = object.__new__(cls)
            s.index = len(cache)
            cache.append(s)
        return cache[index]

    def __repr__(self):
        return f"Slot({self.index})"


class TStruct:
    """Compound template: a struct with at least one slot somewhere inside."""

    __slots__ = ("functor", "args", "_hash")

    def __init__(self, functor: str, args: tuple):
        self.functor = functor
        self.args = args
        self._hash = None

    def __eq__(self, other):
        return self is other or (type(other) is TStruct and _struct_eq(self, other))

    def __hash__(self):
        h = self._hash
        if h is None:
            h = _struct_hash(self)
        return h

    def __repr__(self):
        return f"TStruct({self.functor!r}, {self.args!r})"


_COMPOUND = (Struct, TStruct)


def _rebuild(t, s: Bindings | None, on_var, templ: bool = False):
    """Copy ``t`` bottom-up, replacing each free variable ``v`` by ``on_var(v)``.

    Unchanged subterms are shared with the input.  With ``templ`` set, a
    compound that ends up containing a ``Slot`` or ``TStruct`` is built as a
    ``TStruct``.  The walk uses an explicit stack, so depth is unbounded.
    """
    values = s.values if s is not None else None
    x = t
    stack = []
    while True:
        if values is not None:
            while type(x) is Var:
                nxt = values.get(x)
                if nxt is None:
                    break
                x = nxt
        tx = type(x)
        if tx is Struct and not x.ground:
            stack.append([x, [], False, False])
            x = x.args[0]
            continue
        r = on_var(x) if tx is Var else x
        while True:
            if not stack:
                return r
            fr = stack[-1]
            orig, new = fr[0], fr[1]
            a = orig.args[len(new)]
            new.append(r)
            if r is not a:
                fr[2] = True
                if templ and (type(r) is Slot or type(r) is TStruct):
                    fr[3] = True
            if len(new) < len(orig.args):
                x = orig.args[len(new)]
                break
            stack.pop()
            if fr[3]:
                r = TStruct(orig.functor, tuple(new))
            elif fr[2]:
                r = Struct(orig.functor, tuple(new))
            else:
                r = orig


def templatize(t, s: Bindings | None, slot_of: dict):
    """Replace the free variables of ``t`` (under ``s``) by slots.

    ``slot_of`` maps variables to slot indices and is extended in
    first-occurrence order, so templatizing several terms with the same dict
    numbers them consistently.  Ground subterms are returned unchanged.
    """
    t = deref(t, s)
    tt = type(t)
    if tt is Var:
        i = slot_of.get(t)
        if i is None:
            i = slot_of[t] = len(slot_of)
        return Slot(i)
    if tt is not Struct:
        return t

    def slot(v):
        i = slot_of.get(v)
        if i is None:
            i = slot_of[v] = len(slot_of)
        return Slot(i)

    return _rebuild(t, s, slot, True)


def instantiate(t, slots: list):
    """Build a live term from a template; empty slots get fresh variables."""
    tt = type(t)
    if tt is Slot:
        v = slots[t.index]
        if v is None:
            v = slots[t.index] = Var()
        return v
    if tt is not TStruct:
        return t
    # iterative walk over TStruct nodes; Struct children are ground templates
    stack = [[t, []]]
    while True:
        fr = stack[-1]
        node, new = fr
        args = node.args
        while len(new) < len(args):
            a = args[len(new)]
            ta = type(a)
            if ta is Slot:
                v = slots[a.index]
                if v is None:
                    v = slots[a.index] = Var()
                new.append(v)
            elif ta is TStruct:
                break
            else:
                new.append(a)
        if len(new) < len(args):
            stack.append([args[len(new)], []])
            continue
        stack.pop()
        r = Struct(node.functor, tuple(new))
        if not stack:
            return r
        stack[-1][1].append(r)


def match_template(templ, t, slots: list, s: Bindings) -> bool:
    """Unify a template against a live term, filling slots.

    A slot seen for the first time is simply assigned, so head arguments that
    are plain variables cost nothing and never need an occurs check.  The
    caller is responsible for undoing ``s`` on failure.
    """
    tt = type(templ)
    if tt is Slot:
        cur = slots[templ.index]
        if cur is None:
            slots[templ.index] = t
            return True
        return _unify(cur, t, s)
    if tt is TStruct:
        t = s.deref(t)
        if type(t) is Var:
            return _bind_checked(t, instantiate(templ, slots), s)
        if type(t) is not Struct or t.functor != templ.functor or len(t.args) != len(templ.args):
            return False
        for a, b in zip(templ.args, t.args):
            if not match_template(a, b, slots, s):
                return False
        return True
    return _unify(templ, t, s)


# --------------------------------------------------------------------------
# Lists


def list_items(t, s: Bindings | None = None) -> tuple[list, object]:
    """Split a (possibly partial) list into its items and its tail."""
    items = []
    t = deref(t, s)
    while type(t) is Struct and t.functor == CONS and len(t.args) == 2:
        items.append(t.args[0])
        t = deref(t.args[1], s)
    return items, t


# --------------------------------------------------------------------------
# Printing

_plain_atom = re.compile(r"^[a-z][a-zA-Z0-9_]*$")
_symbol_atom = re.compile(r"^[+\-*/\\^<>=~:.?@#&$]+$")
_solo = {"[]", "!", ";", "{}", ","}

INFIX_OPS = {
    ":-": 1200, ";": 1100, ",": 1000,
    "=": 700, "is": 700, "<": 700, "=<": 700, ">": 700, ">=": 700, "=:=": 700, "=\\=": 700,
    "+": 500, "-": 500, "*": 400, "//": 400, "mod": 400, "/": 400,
}


def atom_text(name: str) -> str:
    if _plain_atom.match(name) or name in ("[]", "!", ";", "{}"):
        return name
    if _symbol_atom.match(name) and name != ".":
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'").replace("\n", "\\n")
    return f"'{escaped}'"


def term_str(t, s: Bindings | None = None, names: dict | None = None) -> str:
    """Render a term in re-readable Prolog syntax."""
    names = names or {}

    def var_name(v):
        n = names.get(v)
        if n is not None:
            return n
        return f"_G{v.id}"

    def arg(x):
        x = deref(x, s)
        if type(x) is Struct and x.functor in INFIX_OPS and len(x.args) == 2:
            return "(" + go(x) + ")"
        if type(x) is int and x < 0:
            return "(" + str(x) + ")"
        return go(x)

    def go(x):
        x = deref(x, s)
        tx = type(x)
        if tx is Var:
            return var_name(x)
        if tx is int:
            return str(x)
        if tx is Atom:
            return atom_text(x.name)
        if tx is Struct:
            if x.functor == CONS and len(x.args) == 2:
                items, tail = list_items(x, s)
                body = ",".join(go_arg(i) for i in items)
                if tail is NIL:
                    return f"[{body}]"
                return f"[{body}|{go_arg(tail)}]"
            if x.functor in INFIX_OPS and len(x.args) == 2:
                op = x.functor
                sep = ", " if op == "," else f" {op} "
                right = x.args[1]
                rd = deref(right, s)
                if op in (",", ";") and type(rd) is Struct and rd.functor == op and len(rd.args) == 2:
                    return arg(x.args[0]) + sep + go(rd)
                return arg(x.args[0]) + sep + arg(right)
            return atom_text(x.functor) + "(" + ",".join(go_arg(a) for a in x.args) + ")"
        if tx is Slot:
            return f"_S{x.index}"
        if tx is TStruct:
            return atom_text(x.functor) + "(" + ",".join(go_arg(a) for a in x.args) + ")"
        return repr(x)

    def go_arg(x):
        # arguments are parsed at priority 999, so comma terms need brackets
        x = deref(x, s)
        if type(x) is Struct and x.functor in INFIX_OPS and len(x.args) == 2 and INFIX_OPS[x.functor] >= 1000:
            return "(" + go(x) + ")"
        return go(x)

    return go(t)
