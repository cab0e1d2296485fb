"""Reader and loader for clause files.

The accepted language is a small Prolog subset: atoms, variables, integers,
compound terms, lists, ``,`` and ``;`` in bodies, ``:-`` clauses and
directives, ``%`` and ``/* */`` comments, and infix arithmetic/comparison
operators.  The only directive is ``:- table Name/Arity, ...``.

Tabling is a load-time transformation: the clauses of a tabled ``p/n`` are
moved to the worker predicate ``'p#'/n`` and ``p/n`` gets the single clause
``p(A1..An) :- tabled_call('p#'(A1..An))``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .builtins import BUILTINS, CONTROL
from .errors import ProgramError, ProgramSyntaxError
from .machine import FAIL, TRUE, Builtin, Call, Conj, Disj, Goal, Shift
from .term import (
    NIL,
    Atom,
    Slot,
    Struct,
    TStruct,
    Var,
    make_list,
    mkstruct,
    templatize,
    term_str,
    term_variables,
)

TAB_PROMPT = "tab"
WORKER_SUFFIX = "#"

# --------------------------------------------------------------------------
# Tokenizer

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*|/\*.*?\*/)
  | (?P<int>\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<qname>'(?:[^'\\]|\\.|'')*')
  | (?P<punct>[()\[\],|])
  | (?P<solo>[;!])
  | (?P<sym>[+\-*/\\^<>=~:.?@#&$]+)
  | (?P<bad>.)
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass
class Token:
    kind: str  # int var name punct end eof
    text: str
    line: int
    col: int
    pre_ws: bool  # whitespace before the token


def _unquote(text: str) -> str:
    body = text[1:-1].replace("''", "'")
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), body)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    pre_ws = True
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        kind = m.lastgroup
        tok = m.group()
        col = pos - line_start + 1
        if kind == "ws":
            pre_ws = True
        elif kind == "bad":
            raise ProgramSyntaxError(f"unexpected character {tok!r}", line, col)
        else:
            if kind == "sym" and tok == "." and (m.end() == n or text[m.end()].isspace() or text[m.end()] == "%"):
                kind = "end"
            elif kind == "sym" and tok.endswith(".") and len(tok) > 1 and (
                m.end() == n or text[m.end()].isspace()
            ):
                # e.g. "X = a+b." never happens, but "foo :- bar=." would
                tokens.append(Token("name", tok[:-1], line, col, pre_ws))
                tok, kind, col, pre_ws = ".", "end", col + len(tok) - 1, False
            elif kind == "solo":
                kind = "name"
            elif kind in ("sym", "qname"):
                tok = tok if kind == "sym" else _unquote(tok)
                kind = "name" if kind == "sym" else "qname"
            tokens.append(Token(kind, tok, line, col, pre_ws))
            pre_ws = False
        newlines = tok.count("\n") if kind == "ws" else m.group().count("\n")
        if newlines:
            line += newlines
            line_start = pos + m.group().rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1, True))
    return tokens


# --------------------------------------------------------------------------
# Parser

INFIX = {
    ":-": (1200, "xfx"),
    ";": (1100, "xfy"),
    ",": (1000, "xfy"),
    "=": (700, "xfx"),
    "is": (700, "xfx"),
    "<": (700, "xfx"),
    "=<": (700, "xfx"),
    ">": (700, "xfx"),
    ">=": (700, "xfx"),
    "=:=": (700, "xfx"),
    "=\\=": (700, "xfx"),
    "+": (500, "yfx"),
    "-": (500, "yfx"),
    "*": (400, "yfx"),
    "/": (400, "yfx"),
    "//": (400, "yfx"),
    "mod": (400, "yfx"),
}
PREFIX = {"-": (200, "fy"), ":-": (1200, "fx"), "table": (1150, "fx")}


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.varmap: dict[str, Var] = {}

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message, tok=None):
        tok = tok or self.tok
        if tok.kind == "eof":
            raise ProgramSyntaxError(f"{message} (unexpected end of input)", tok.line, tok.col)
        raise ProgramSyntaxError(message, tok.line, tok.col)

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind, text=None):
        tok = self.tok
        if tok.kind != kind or (text is not None and tok.text != text):
            self.error(f"expected {text or kind}, found {tok.text or tok.kind!r}")
        return self.advance()

    def at_eof(self) -> bool:
        return self.tok.kind == "eof"

    # clause level

    def read_clause(self):
        """Parse one ``term.``; returns (term, varmap)."""
        self.varmap = {}
        t = self.parse(1200)
        self.expect("end")
        return t, self.varmap

    # term level

    def parse(self, max_prec: int):
        left, left_prec = self.parse_primary(max_prec)
        return self.parse_infix(left, left_prec, max_prec)

    def parse_infix(self, left, left_prec, max_prec):
        while True:
            tok = self.tok
            if tok.kind == "punct" and tok.text == ",":
                op = ","
            elif tok.kind == "name" and tok.text in INFIX:
                op = tok.text
            else:
                return left
            prec, kind = INFIX[op]
            if prec > max_prec:
                return left
            la = prec if kind == "yfx" else prec - 1
            ra = prec if kind == "xfy" else prec - 1
            if left_prec > la:
                return left
            self.advance()
            right = self.parse(ra)
            left = Struct(op, (left, right))
            left_prec = prec

    def _starts_term(self, tok: Token) -> bool:
        if tok.kind in ("int", "var", "name", "qname"):
            return True
        return tok.kind == "punct" and tok.text in ("(", "[")

    def parse_primary(self, max_prec):
        tok = self.advance()
        kind = tok.kind
        if kind == "int":
            return int(tok.text), 0
        if kind == "var":
            if tok.text == "_":
                return Var("_"), 0
            v = self.varmap.get(tok.text)
            if v is None:
                v = self.varmap[tok.text] = Var(tok.text)
            return v, 0
        if kind == "punct":
            if tok.text == "(":
                t = self.parse(1200)
                self.expect("punct", ")")
                return t, 0
            if tok.text == "[":
                return self.parse_list(), 0
            self.error(f"unexpected {tok.text!r}", tok)
        if kind in ("name", "qname"):
            name = tok.text
            nxt = self.tok
            if nxt.kind == "punct" and nxt.text == "(" and not nxt.pre_ws:
                self.advance()
                args = [self.parse(999)]
                while self.tok.kind == "punct" and self.tok.text == ",":
                    self.advance()
                    args.append(self.parse(999))
                self.expect("punct", ")")
                return Struct(name, tuple(args)), 0
            if kind == "name" and name == "-" and nxt.kind == "int" and not nxt.pre_ws:
                self.advance()
                return -int(nxt.text), 0
            if kind == "name" and name in PREFIX and self._starts_term(nxt):
                prec, pkind = PREFIX[name]
                if prec > max_prec:
                    prec = 999
                arg_max = prec if pkind == "fy" else prec - 1
                arg = self.parse(arg_max)
                return Struct(name, (arg,)), prec
            prec = 0
            if kind == "name" and (name in INFIX or name in PREFIX):
                prec = max(INFIX.get(name, (0,))[0], PREFIX.get(name, (0,))[0])
                if prec > max_prec:
                    prec = 0
            return Atom(name), prec
        if kind == "end":
            self.error("unexpected end of clause", tok)
        self.error("unexpected end of input", tok)

    def parse_list(self):
        if self.tok.kind == "punct" and self.tok.text == "]":
            self.advance()
            return NIL
        items = [self.parse(999)]
        tail = NIL
        while True:
            tok = self.tok
            if tok.kind == "punct" and tok.text == ",":
                self.advance()
                items.append(self.parse(999))
            elif tok.kind == "punct" and tok.text == "|":
                self.advance()
                tail = self.parse(999)
                self.expect("punct", "]")
                break
            else:
                self.expect("punct", "]")
                break
        return make_list(items, tail)


# --------------------------------------------------------------------------
# Goals from terms


def goal_from_term(t, builtins=None) -> Goal:
    """Translate a body term into a machine goal."""
    builtins = BUILTINS if builtins is None else builtins
    if type(t) is Var:
        return Call(t)
    if type(t) is int:
        raise ProgramError(f"integer {t} is not callable")
    if type(t) is Atom:
        if t.name == "true":
            return TRUE
        if t.name in ("fail", "false"):
            return FAIL
        key = f"{t.name}/0"
        if key in builtins:
            return Builtin(key, ())
        return Call(t)
    if type(t) is Struct:
        n = len(t.args)
        if n == 2 and t.functor == ",":
            return Conj(goal_from_term(t.args[0], builtins), goal_from_term(t.args[1], builtins))
        if n == 2 and t.functor == ";":
            return Disj(goal_from_term(t.args[0], builtins), goal_from_term(t.args[1], builtins))
        if n == 1 and t.functor == "tabled_call":
            return Shift(TAB_PROMPT, t.args[0])
        key = f"{t.functor}/{n}"
        if key in builtins:
            return Builtin(key, t.args)
        return Call(t)
    raise ProgramError(f"not a goal: {t!r}")


def flatten_conj(g: Goal) -> list[Goal]:
    out = []
    todo = [g]
    while todo:
        g = todo.pop()
        if type(g) is Conj:
            todo.append(g.right)
            todo.append(g.left)
        elif g is not TRUE:
            out.append(g)
    return out


# --------------------------------------------------------------------------
# Clause database


@dataclass
class Clause:
    head: object
    body: object = TRUE  # body term; ``true`` for facts

    @property
    def key(self) -> tuple[str, int]:
        h = self.head
        return (h.functor, len(h.args)) if type(h) is Struct else (h.name, 0)

    @property
    def goal(self) -> Goal:
        return goal_from_term(self.body) if self.body is not TRUE else TRUE

    def __str__(self):
        return clause_str(self)


class CompiledClause:
    __slots__ = ("head", "body", "nslots", "first")

    def __init__(self, clause: Clause, builtins):
        slot_of: dict = {}
        h = clause.head
        args = h.args if type(h) is Struct else ()
        self.head = tuple(templatize(a, None, slot_of) for a in args)
        body = TRUE if clause.body is TRUE else goal_from_term(clause.body, builtins)
        self.body = tuple(g.templ(None, slot_of) for g in flatten_conj(body))
        self.nslots = len(slot_of)
        self.first = _index_key(self.head[0]) if self.head else None


def _index_key(t):
    tt = type(t)
    if tt is Slot:
        return None
    if tt is Struct or tt is TStruct:
        return (t.functor, len(t.args))
    return t


class Procedure:
    """Compiled clauses of one predicate, with first-argument indexing."""

    __slots__ = ("clauses", "_index", "_var_clauses")

    def __init__(self, clauses: list[CompiledClause]):
        self.clauses = clauses
        self._index = None
        self._var_clauses = None

    def select(self, args, s):
        clauses = self.clauses
        if not args or len(clauses) < 4:
            return clauses
        if self._index is None:
            self._build_index()
        a = s.deref(args[0])
        ta = type(a)
        if ta is Var:
            return clauses
        key = (a.functor, len(a.args)) if ta is Struct else a
        return self._index.get(key, self._var_clauses)

    def _build_index(self):
        keys = {c.first for c in self.clauses if c.first is not None}
        index = {k: [] for k in keys}
        var_clauses = []
        for c in self.clauses:
            if c.first is None:
                var_clauses.append(c)
                for lst in index.values():
                    lst.append(c)
            else:
                index[c.first].append(c)
        self._index = index
        self._var_clauses = var_clauses


def worker_name(name: str) -> str:
    return name + WORKER_SUFFIX


class ClauseDB:
    """Clauses by predicate indicator, in source order, plus the tabled set.

    ``source`` holds the clauses as written; the effective predicates
    (workers and wrappers for tabled predicates) are derived from it by
    :meth:`finalize`.
    """

    def __init__(self, builtins=None):
        self.builtins = BUILTINS if builtins is None else builtins
        self.source: dict[tuple[str, int], list[Clause]] = {}
        self.tabled: dict[tuple[str, int], None] = {}
        self.preds: dict[tuple[str, int], list[Clause]] = {}
        self._procs: dict = {}
        self._final = False

    def add_clause(self, clause: Clause) -> None:
        key = clause.key
        name, arity = key
        if (name, arity) in CONTROL or f"{name}/{arity}" in self.builtins:
            raise ProgramError(f"cannot redefine builtin {name}/{arity}")
        self.source.setdefault(key, []).append(clause)
        self._final = False

    def apply_table_directive(self, name: str, arity: int) -> "ClauseDB":
        if not isinstance(arity, int) or isinstance(arity, bool) or arity < 0:
            raise ProgramError(f"bad arity in table directive: {name}/{arity}")
        if (name, arity) in CONTROL or f"{name}/{arity}" in self.builtins:
            raise ProgramError(f"cannot table builtin {name}/{arity}")
        self.tabled[(name, arity)] = None
        self._final = False
        return self

    def finalize(self) -> "ClauseDB":
        preds: dict[tuple[str, int], list[Clause]] = {}
        for key, clauses in self.source.items():
            if key in self.tabled:
                name, arity = key
                wkey = (worker_name(name), arity)
                preds.setdefault(wkey, []).extend(
                    Clause(_rename_head(c.head, wkey[0]), c.body) for c in clauses
                )
            else:
                preds.setdefault(key, []).extend(clauses)
        for name, arity in self.tabled:
            args = tuple(Var(f"A{i + 1}") for i in range(arity))
            head = mkstruct(name, *args)
            worker = mkstruct(worker_name(name), *args)
            preds[(name, arity)] = [Clause(head, Struct("tabled_call", (worker,)))]
            preds.setdefault((worker_name(name), arity), [])
        self.preds = preds
        self._procs = {}
        self._final = True
        return self

    def procedure(self, name: str, arity: int):
        if not self._final:
            self.finalize()
        key = (name, arity)
        proc = self._procs.get(key)
        if proc is None:
            clauses = self.preds.get(key)
            if clauses is None:
                return None
            proc = self._procs[key] = Procedure([CompiledClause(c, self.builtins) for c in clauses])
        return proc

    def is_tabled(self, name: str, arity: int) -> bool:
        return (name, arity) in self.tabled

    def clauses(self, name: str, arity: int) -> list[Clause]:
        if not self._final:
            self.finalize()
        return list(self.preds.get((name, arity), []))

    def to_source(self) -> str:
        lines = [f":- table {term_str(Atom(n))}/{a}." for n, a in self.tabled]
        for clauses in self.source.values():
            lines.extend(clause_str(c) for c in clauses)
        return "\n".join(lines) + "\n"


def _rename_head(head, name):
    if type(head) is Struct:
        return Struct(name, head.args)
    return Atom(name)


def clause_str(c: Clause) -> str:
    names = {}
    for i, v in enumerate(term_variables(Struct(":-", (c.head, c.body)))):
        names[v] = _letters(i)
    head = term_str(c.head, names=names)
    if c.body is TRUE or c.body == Atom("true"):
        return head + "."
    return f"{head} :- {term_str(c.body, names=names)}."


def _letters(i: int) -> str:
    out = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        out = chr(65 + r) + out
    return out if len(out) > 1 else out + "_"


# --------------------------------------------------------------------------
# Loading


def _table_specs(t):
    if type(t) is Struct and t.functor == "," and len(t.args) == 2:
        yield from _table_specs(t.args[0])
        yield from _table_specs(t.args[1])
        return
    if type(t) is Struct and t.functor == "/" and len(t.args) == 2:
        name, arity = t.args
        if type(name) is Atom and type(arity) is int:
            yield name.name, arity
            return
    if type(t) is Struct and t.functor == "//" and len(t.args) == 2:
        raise ProgramError("DCG table specifications (Name//Arity) are not supported")
    raise ProgramError(f"bad table specification: {term_str(t)}")


def parse_program(text: str, db: ClauseDB | None = None) -> ClauseDB:
    db = ClauseDB() if db is None else db
    p = Parser(text)
    while not p.at_eof():
        start = p.tok
        t, _ = p.read_clause()
        try:
            _load_term(db, t)
        except ProgramError as e:
            raise ProgramError(f"line {start.line}: {e}") from None
    db.finalize()
    _check_table_arity(db)
    return db


def _load_term(db: ClauseDB, t):
    if type(t) is Struct and t.functor == ":-" and len(t.args) == 1:
        d = t.args[0]
        if type(d) is Struct and d.functor == "table" and len(d.args) == 1:
            for name, arity in _table_specs(d.args[0]):
                db.apply_table_directive(name, arity)
            return
        raise ProgramError(f"unknown directive: {term_str(d)}")
    if type(t) is Struct and t.functor == ":-" and len(t.args) == 2:
        head, body = t.args
    else:
        head, body = t, TRUE
    if type(head) is Var or type(head) is int:
        raise ProgramError(f"clause head is not callable: {term_str(head)}")
    if body is not TRUE:
        goal_from_term(body, db.builtins)  # reject non-callable bodies now
        if body == Atom("true"):
            body = TRUE
    db.add_clause(Clause(head, body))


def _check_table_arity(db: ClauseDB):
    names = {}
    for name, arity in db.source:
        names.setdefault(name, set()).add(arity)
    for name, arity in db.tabled:
        defined = names.get(name, set())
        if defined and arity not in defined:
            raise ProgramError(
                f"table directive {name}/{arity} does not match defined arities "
                + ", ".join(f"{name}/{a}" for a in sorted(defined))
            )


@dataclass
class Query:
    term: object
    names: dict = field(default_factory=dict)

    @property
    def goal(self) -> Goal:
        return goal_from_term(self.term)


def parse_query(text: str) -> Query:
    text = text.strip()
    if not text.endswith("."):
        text += " ."
    p = Parser(text)
    t, varmap = p.read_clause()
    if not p.at_eof():
        p.error("trailing input after query")
    goal_from_term(t)
    return Query(t, dict(varmap))


def load_file(path) -> ClauseDB:
    with open(path, encoding="utf-8") as f:
        return parse_program(f.read())
