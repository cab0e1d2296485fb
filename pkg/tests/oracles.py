"""Reference implementations the engine is checked against.

None of this code imports the engine.  Programs are plain Python data:

* a variable is an ``OV`` instance
* an atom is a ``str`` (lower-case first letter)
* an integer is an ``int``
* a compound term is a tuple ``(functor, arg1, ..., argn)``

A clause is ``(head, [goal, ...])``.  :func:`render_program` turns a program
into source text for the engine; :func:`canon` puts answers from either side
into a comparable form.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

# --------------------------------------------------------------------------
# Terms


class OV:
    _ids = itertools.count()
    __slots__ = ("name", "id")

    def __init__(self, name=None):
        self.id = next(OV._ids)
        self.name = name or f"V{self.id}"

    def __repr__(self):
        return self.name


def walk(t, sub):
    while isinstance(t, OV) and t in sub:
        t = sub[t]
    return t


def occurs(v, t, sub):
    t = walk(t, sub)
    if t is v:
        return True
    if isinstance(t, tuple):
        return any(occurs(v, a, sub) for a in t[1:])
    return False


def unify(a, b, sub):
    """Most general unifier extending ``sub`` (a dict), or ``None``."""
    a, b = walk(a, sub), walk(b, sub)
    if a is b:
        return sub
    if isinstance(a, OV):
        if occurs(a, b, sub):
            return None
        return {**sub, a: b}
    if isinstance(b, OV):
        return unify(b, a, sub)
    if isinstance(a, tuple) and isinstance(b, tuple):
        if a[0] != b[0] or len(a) != len(b):
            return None
        for x, y in zip(a[1:], b[1:]):
            sub = unify(x, y, sub)
            if sub is None:
                return None
        return sub
    if type(a) is type(b) and a == b:
        return sub
    return None


def resolve(t, sub):
    t = walk(t, sub)
    if isinstance(t, tuple):
        return (t[0],) + tuple(resolve(a, sub) for a in t[1:])
    return t


def rename(t, mapping):
    if isinstance(t, OV):
        if t not in mapping:
            mapping[t] = OV()
        return mapping[t]
    if isinstance(t, tuple):
        return (t[0],) + tuple(rename(a, mapping) for a in t[1:])
    return t


def canon(t, names=None):
    """Replace variables by ``('$VAR', i)`` in first-occurrence order."""
    names = {} if names is None else names
    if isinstance(t, OV):
        return ("$VAR", names.setdefault(t, len(names)))
    if isinstance(t, tuple):
        return (t[0],) + tuple(canon(a, names) for a in t[1:])
    return t


def vars_of(t, acc=None):
    acc = [] if acc is None else acc
    if isinstance(t, OV):
        if t not in acc:
            acc.append(t)
    elif isinstance(t, tuple):
        for a in t[1:]:
            vars_of(a, acc)
    return acc


def from_engine(t):
    """Engine term (already resolved) to the tuple representation."""
    from tabkit.term import Atom, Struct, Var

    memo = {}

    def go(x):
        if type(x) is Var:
            return memo.setdefault(x, OV())
        if type(x) is Atom:
            return x.name
        if type(x) is Struct:
            return (x.functor,) + tuple(go(a) for a in x.args)
        return x

    return go(t)


# --------------------------------------------------------------------------
# Rendering


def term_text(t, names):
    if isinstance(t, OV):
        return names.setdefault(t, f"V{len(names)}")
    if isinstance(t, tuple):
        return t[0] + "(" + ",".join(term_text(a, names) for a in t[1:]) + ")"
    return str(t)


def clause_text(clause):
    head, body = clause
    names: dict = {}
    h = term_text(head, names)
    if not body:
        return h + "."
    return h + " :- " + ", ".join(goal_text(g, names) for g in body) + "."


def goal_text(g, names):
    if isinstance(g, tuple) and g[0] == "=" and len(g) == 3:
        return f"{term_text(g[1], names)} = {term_text(g[2], names)}"
    return term_text(g, names)


def render_program(clauses, tabled=()):
    lines = [f":- table {p}/{n}." for p, n in tabled]
    lines += [clause_text(c) for c in clauses]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Reference SLD interpreter


def sld_solve(clauses, goals, sub=None, depth=0, max_depth=200):
    """Depth-first, left-to-right SLD resolution; yields substitutions."""
    sub = {} if sub is None else sub
    if not goals:
        yield sub
        return
    if depth > max_depth:
        raise RecursionError("reference interpreter depth limit")
    g, rest = goals[0], goals[1:]
    if isinstance(g, tuple) and g[0] == "=" and len(g) == 3:
        s2 = unify(g[1], g[2], sub)
        if s2 is not None:
            yield from sld_solve(clauses, rest, s2, depth + 1, max_depth)
        return
    if g == "true":
        yield from sld_solve(clauses, rest, sub, depth + 1, max_depth)
        return
    for head, body in clauses:
        mapping: dict = {}
        h = rename(head, mapping)
        s2 = unify(h, g, sub)
        if s2 is None:
            continue
        b = [rename(x, mapping) for x in body]
        yield from sld_solve(clauses, b + list(rest), s2, depth + 1, max_depth)


def sld_answers(clauses, query, limit=None):
    """Resolved, canonical query instances in SLD order."""
    out = []
    for sub in sld_solve(clauses, [query]):
        out.append(canon(resolve(query, sub)))
        if limit is not None and len(out) >= limit:
            break
    return out


# --------------------------------------------------------------------------
# Bottom-up Datalog


def match_atom(pattern, fact, sub):
    if pattern[0] != fact[0] or len(pattern) != len(fact):
        return None
    for p, c in zip(pattern[1:], fact[1:]):
        if isinstance(p, OV):
            if p in sub:
                if sub[p] != c:
                    return None
            else:
                sub = {**sub, p: c}
        elif p != c:
            return None
    return sub


def datalog_fixpoint(clauses):
    """Least model of a function-free, range-restricted program (naive)."""
    facts: set = set()
    while True:
        new = set()
        for head, body in clauses:
            subs = [{}]
            for atom in body:
                nxt = []
                for sub in subs:
                    for f in facts:
                        s2 = match_atom(atom, f, sub)
                        if s2 is not None:
                            nxt.append(s2)
                subs = nxt
            for sub in subs:
                fact = (head[0],) + tuple(sub[a] if isinstance(a, OV) else a for a in head[1:])
                if fact not in facts:
                    new.add(fact)
        if not new:
            return facts
        facts |= new


def datalog_query(model, query):
    """Answers of a query atom against a model, as canonical instances."""
    out = set()
    for f in model:
        sub = match_atom(query, f, {})
        if sub is not None:
            out.add(f)
    return out


# --------------------------------------------------------------------------
# Random programs


@dataclass
class DatalogCase:
    clauses: list
    preds: dict  # name -> arity
    idb: list
    constants: list
    chain: bool
    queries: list = field(default_factory=list)

    def source(self):
        return render_program(self.clauses, [(p, self.preds[p]) for p in self.idb])


def random_datalog(rng: random.Random, chain: bool) -> DatalogCase:
    """Random function-free program; left recursion allowed.

    With ``chain`` set, every predicate is binary and every rule has the
    form ``p(X,Z) :- q1(X,Y1), ..., qn(Yn-1,Z)``.
    """
    nconst = rng.randint(2, 8)
    constants = [f"c{i}" for i in range(nconst)]
    n_edb = rng.randint(1, 2)
    n_idb = rng.randint(1, 5 - n_edb)
    preds = {}
    for i in range(n_edb):
        preds[f"e{i}"] = 2 if chain else rng.choice([1, 2, 2])
    idb = []
    for i in range(n_idb):
        preds[f"p{i}"] = 2 if chain else rng.choice([1, 2, 2])
        idb.append(f"p{i}")
    names = list(preds)
    clauses = []
    for e in names[:n_edb]:
        for _ in range(rng.randint(1, 2 * nconst)):
            clauses.append(((e,) + tuple(rng.choice(constants) for _ in range(preds[e])), []))
    for p in idb:
        for _ in range(rng.randint(1, 3)):
            if chain:
                clauses.append(_chain_rule(rng, p, names))
            else:
                clauses.append(_random_rule(rng, p, preds, names, constants))
        if not chain and rng.random() < 0.3:
            clauses.append(((p,) + tuple(rng.choice(constants) for _ in range(preds[p])), []))
    rng.shuffle(clauses)
    case = DatalogCase(clauses, preds, idb, constants, chain)
    for p in idb:
        n = preds[p]
        x, y = OV("X"), OV("Y")
        case.queries.append((p,) + (x, y)[:n])
        case.queries.append((p, rng.choice(constants)) + ((y,) if n == 2 else ()))
        if n == 2 and rng.random() < 0.3:
            case.queries.append((p, x, x))
    return case


def _chain_rule(rng, p, names):
    n = rng.randint(1, 3)
    vs = [OV() for _ in range(n + 1)]
    body = [(rng.choice(names), vs[i], vs[i + 1]) for i in range(n)]
    if rng.random() < 0.4:
        body[0] = (p, vs[0], vs[1])  # left recursion
    return ((p, vs[0], vs[-1]), body)


def _random_rule(rng, p, preds, names, constants):
    pool = [OV() for _ in range(4)]
    body = []
    for i in range(rng.randint(1, 3)):
        q = p if i == 0 and rng.random() < 0.3 else rng.choice(names)
        args = tuple(rng.choice(constants) if rng.random() < 0.15 else rng.choice(pool) for _ in range(preds[q]))
        body.append((q,) + args)
    bvars = []
    for atom in body:
        vars_of(atom, bvars)
    head_args = tuple(
        rng.choice(bvars) if bvars and rng.random() < 0.85 else rng.choice(constants) for _ in range(preds[p])
    )
    return ((p,) + head_args, body)


def random_sld_program(rng: random.Random):
    """Random non-left-recursive program: ``q_i`` only calls ``q_j`` with j < i.

    Terms include compound arguments so unification is exercised beyond
    constants.  Returns ``(clauses, query)``.
    """
    atoms = ["a", "b", "c"]
    n_preds = rng.randint(1, 4)
    arity = {f"q{i}": rng.randint(0, 2) for i in range(n_preds)}

    def rand_term(pool, depth=0):
        r = rng.random()
        if r < 0.35:
            return rng.choice(pool)
        if r < 0.65 or depth >= 2:
            return rng.choice(atoms + [0, 1])
        if r < 0.85:
            return ("f", rand_term(pool, depth + 1))
        return ("g", rand_term(pool, depth + 1), rand_term(pool, depth + 1))

    def atom_for(name, pool):
        n = arity[name]
        return name if n == 0 else (name,) + tuple(rand_term(pool) for _ in range(n))

    clauses = []
    for i in range(n_preds):
        name = f"q{i}"
        for _ in range(rng.randint(1, 3)):
            pool = [OV() for _ in range(3)]
            body = []
            if i > 0:
                for _ in range(rng.randint(0, 2)):
                    if rng.random() < 0.2:
                        body.append(("=", rand_term(pool), rand_term(pool)))
                    else:
                        body.append(atom_for(f"q{rng.randrange(i)}", pool))
            clauses.append((atom_for(name, pool), body))
    top = f"q{n_preds - 1}"
    qpool = [OV("X"), OV("Y")]
    return clauses, atom_for(top, qpool)


# --------------------------------------------------------------------------
# Reset/shift model


def model_control(prog):
    """Event log of a reset/shift program under an explicit frame stack.

    Instructions: ``("emit", tag)``, ``("shift", prompt, sid)`` and
    ``("reset", prompt, rid, body, mode)`` with ``mode`` one of ``abort``,
    ``resume`` or ``resume2``.  A shift is caught by the nearest enclosing
    reset for its prompt; the handler logs it and then drops the captured
    frames (``abort``), runs them once under a new reset (``resume``), or
    twice in sequence (``resume2``).  The second run of a ``resume2``
    handler is a pending item whose frames are pushed only when it starts.  A reset whose body completes logs
    ``done``.  Returns the log, with ``("unhandled", sid)`` as the final
    entry if a shift finds no reset.
    """
    log = []
    stack = list(reversed(prog))  # top of stack at the end
    while stack:
        item = stack.pop()
        kind = item[0]
        if kind == "emit":
            log.append(("emit", item[1]))
        elif kind == "reset":
            _, prompt, rid, body, mode = item
            stack.append(("MARK", prompt, rid, mode))
            stack.extend(reversed(body))
        elif kind == "MARK":
            log.append(("done", item[2]))
        elif kind == "RESUME":
            # a pending resumption: its frames appear only when it starts
            stack.append(item[1])
            stack.extend(item[2])
        elif kind == "shift":
            _, prompt, sid = item
            for i in range(len(stack) - 1, -1, -1):
                f = stack[i]
                if f[0] == "MARK" and f[1] == prompt:
                    break
            else:
                log.append(("unhandled", sid))
                return log
            mark = stack[i]
            k = stack[i + 1 :]
            del stack[i:]
            log.append(("caught", mark[2], sid))
            mode = mark[3]
            if mode == "resume":
                stack.append(mark)
                stack.extend(k)
            elif mode == "resume2":
                stack.append(("RESUME", mark, k))
                stack.append(mark)
                stack.extend(k)
    return log


def random_control(rng: random.Random, prompts=("p", "q"), max_depth=4):
    """Random reset/shift program; the outermost item is always a reset."""
    counter = itertools.count()

    def body(depth, enclosing):
        items = []
        for _ in range(rng.randint(0, 4)):
            r = rng.random()
            if r < 0.3:
                items.append(("emit", next(counter)))
            elif r < 0.65 and enclosing:
                # mostly shift to a prompt that is in scope
                prompt = rng.choice(sorted(enclosing)) if rng.random() < 0.95 else rng.choice(prompts)
                items.append(("shift", prompt, next(counter)))
            elif depth < max_depth:
                prompt = rng.choice(prompts)
                mode = rng.choice(["abort", "resume", "resume2"])
                items.append(("reset", prompt, next(counter), body(depth + 1, enclosing | {prompt}), mode))
        return items

    prompt = rng.choice(prompts)
    return [("reset", prompt, next(counter), body(1, {prompt}), rng.choice(["abort", "resume", "resume2"]))]
