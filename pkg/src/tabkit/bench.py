"""Benchmark programs, the metrics table and the ``tabkit`` command line.

``tabkit solve FILE QUERY`` streams answers, one line each, flushed as soon
as they are found.  ``tabkit bench`` runs the benchmark suite and prints one
TSV row per benchmark.

Exit codes: 0 success, 1 metric mismatch under ``--check``, 2 load or parse
error, 3 run-time error (including an exhausted ``--steps`` budget).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass
from typing import Callable

from .errors import ProgramError, ProgramSyntaxError, StepBudgetExceeded, TabkitError
from .metrics import Metrics, fmt_ratio, record
from .program import load_file, parse_program, parse_query
from .tabling import TabledRun, format_solution

# --------------------------------------------------------------------------
# Programs


def fib_program(n: int) -> tuple[str, str]:
    src = """\
:- table fib/2.
fib(0, 0).
fib(1, 1).
fib(N, F) :- N > 1, N1 is N-1, N2 is N-2, fib(N1, F1), fib(N2, F2), F is F1+F2.
"""
    return src, f"fib({n}, F)"


def nrev_program(n: int) -> tuple[str, str]:
    src = """\
:- table nrev/2.
nrev([], []).
nrev([X|Xs], Ys) :- nrev(Xs, Zs), app(Zs, [X], Ys).
app([], L, L).
app([H|T], L, [H|R]) :- app(T, L, R).
numlist(0, []).
numlist(N, [N|T]) :- N > 0, M is N-1, numlist(M, T).
"""
    return src, f"numlist({n}, L), nrev(L, R)"


def shuttle_program(n: int) -> tuple[str, str]:
    src = f"""\
:- table s/1.
s(0).
s(X) :- s(Y), Y < {n}, X is Y+1.
s(X) :- s(Y), Y > -{n}, X is Y-1.
"""
    return src, "s(X)"


def ping_pong_program(n: int) -> tuple[str, str]:
    src = f"""\
:- table ping/1, pong/1.
ping(0).
pong(0).
ping(X) :- pong(Y), Y < {n}, X is Y+1.
pong(X) :- ping(Y), Y < {n}, X is Y+1.
"""
    return src, "ping(X) ; pong(X)"


_PATH_RULES = """\
:- table path/2.
path(X, Y) :- path(X, Z), path(Z, Y).
path(X, Y) :- edge(X, Y).
"""


def path_dfst_program(n: int) -> tuple[str, str]:
    edges = "".join(f"edge({i}, {i + 1}).\n" for i in range(1, n))
    return _PATH_RULES + edges, "path(X, Y)"


def path_dfst_loop_program(n: int) -> tuple[str, str]:
    m = n - 1
    edges = "".join(f"edge({i}, {i % m + 1}).\n" for i in range(1, n))
    return _PATH_RULES + edges, "path(X, Y)"


def recognise_program(n: int) -> tuple[str, str]:
    src = """\
:- table s/2, t/2.
s(S0, S) :- s(S0, S1), S1 = [b|S].
s(S0, S) :- t(S0, S1), S1 = [b|S].
t(S0, S) :- t(S0, S1), S1 = [a|S].
t(S0, S) :- S0 = [a|S].
"""
    k = n // 2
    word = ",".join(["a"] * k + ["b"] * (n - k))
    return src, f"s([{word}], R)"


def pyramid_program(n: int) -> tuple[str, str]:
    src = """\
:- table pyramid/2.
pyramid(1, 0).
pyramid(N, X) :- N > 1, M is N-1, pyramid(M, X).
pyramid(N, X) :- N > 1, M is N-1, pyramid(M, Y), X is Y+1.
pyramid(N, X) :- N > 1, M is N-2, pyramid(M, Y), X is Y-1.
"""
    return src, f"pyramid({n - 1}, X)"


PROGRAMS: dict[str, Callable[[int], tuple[str, str]]] = {
    "fib": fib_program,
    "nrev": nrev_program,
    "shuttle": shuttle_program,
    "ping_pong": ping_pong_program,
    "path_dfst": path_dfst_program,
    "path_dfst_loop": path_dfst_loop_program,
    "recognise": recognise_program,
    "pyramid": pyramid_program,
}

# --------------------------------------------------------------------------
# Expected counters

# Reference rows: exact expected counters at the acceptance sizes.
REFERENCE_TABLE: dict[tuple[str, int], tuple[int, int, int]] = {
    ("fib", 1000): (1001, 998, 1001),
    ("fib", 2000): (2001, 1998, 2001),
    ("nrev", 500): (501, 0, 501),
    ("nrev", 1000): (1001, 0, 1001),
    ("shuttle", 2000): (1, 2, 4001),
    ("shuttle", 5000): (1, 2, 10001),
    ("ping_pong", 10000): (2, 2, 20002),
    ("path_dfst", 50): (50, 2402, 2401),
    ("path_dfst", 100): (100, 9802, 9801),
    ("path_dfst_loop", 50): (50, 4803, 4802),
    ("recognise", 20000): (2, 2, 20000),
    ("pyramid", 500): (500, 995, 186751),
}


def _pyramid_answers(n: int) -> int:
    # answers per level k: 0, 1, then 3j-1 at k = 2j and 3j+1 at k = 2j+1
    total = 0
    for k in range(n):
        j, odd = divmod(k, 2)
        total += (3 * j + 1) if odd else max(3 * j - 1, 0)
    return total


# Closed forms in the size parameter, anchored to the table rows above.
CLOSED_FORM: dict[str, Callable[[int], tuple[int, int, int]]] = {
    "fib": lambda n: (n + 1, n - 2, n + 1),
    "nrev": lambda n: (n + 1, 0, n + 1),
    "shuttle": lambda n: (1, 2, 2 * n + 1),
    "ping_pong": lambda n: (2, 2, 2 * n + 2),
    "path_dfst": lambda n: (n, (n - 1) ** 2 + 1, (n - 1) ** 2),
    "path_dfst_loop": lambda n: (n, 2 * (n - 1) ** 2 + 1, 2 * (n - 1) ** 2),
    "recognise": lambda n: (2, 2, n),
    "pyramid": lambda n: (n, 2 * n - 5, _pyramid_answers(n)),
}

# Smallest size for which each closed form holds.
CLOSED_FORM_MIN = {
    "fib": 2,
    "nrev": 0,
    "shuttle": 1,
    "ping_pong": 1,
    "path_dfst": 3,
    "path_dfst_loop": 3,
    "recognise": 2,
    "pyramid": 3,
}


@dataclass(frozen=True)
class BenchSpec:
    name: str
    size: int
    source: str
    query: str
    expected: tuple[int, int, int] | None = None
    provenance: str = ""

    @property
    def label(self) -> str:
        return f"{self.name}({self.size})"


def make_spec(name: str, size: int) -> BenchSpec:
    if name not in PROGRAMS:
        raise KeyError(f"unknown benchmark {name!r}")
    src, query = PROGRAMS[name](size)
    if (name, size) in REFERENCE_TABLE:
        return BenchSpec(name, size, src, query, REFERENCE_TABLE[(name, size)], "reference table")
    if size >= CLOSED_FORM_MIN[name]:
        return BenchSpec(name, size, src, query, CLOSED_FORM[name](size), "closed form")
    return BenchSpec(name, size, src, query)


SUITES: dict[str, list[tuple[str, int]]] = {
    "core": [
        ("fib", 1000),
        ("nrev", 500),
        ("shuttle", 2000),
        ("shuttle", 5000),
        ("ping_pong", 10000),
        ("path_dfst", 50),
        ("path_dfst", 100),
        ("path_dfst_loop", 50),
        ("recognise", 20000),
        ("pyramid", 500),
    ],
}
SUITES["all"] = SUITES["core"] + [("fib", 2000), ("nrev", 1000), ("shuttle", 10000)]

# --------------------------------------------------------------------------
# Running


@dataclass
class BenchResult:
    spec: BenchSpec
    metrics: Metrics
    wall_ms: float
    solutions: int

    @property
    def counters(self) -> tuple[int, int, int]:
        m = self.metrics
        return (m.n_p, m.n_c, m.n_s)

    @property
    def ok(self) -> bool | None:
        if self.spec.expected is None:
            return None
        return self.counters == self.spec.expected

    def row(self) -> tuple:
        m = self.metrics
        return (self.spec.label, m.n_p, m.n_c, m.n_s, fmt_ratio(m.r_c), fmt_ratio(m.r_s), self.wall_ms)


def run_program(source: str, query: str, step_budget: int | None = None, keep_events: bool = False):
    """Load ``source`` and run ``query`` to completion under tabling.

    Returns ``(run, metrics, solutions, wall_ms)``; counting is done from
    the event stream, so the event log itself need not be kept.
    """
    db = parse_program(source)
    q = parse_query(query)
    m = Metrics()
    run = TabledRun(db, step_budget=step_budget, on_event=lambda ev: record(ev, m), keep_events=keep_events)
    t0 = time.perf_counter()
    count = 0
    for _ in run.solve(q.term, q.names):
        count += 1
    wall_ms = (time.perf_counter() - t0) * 1000.0
    mach = run.machine
    m.cont_frames_total = mach.captured_frames
    m.max_cont_frames = mach.max_captured_frames
    m.captures = mach.captures
    m.resumptions = run.resumptions
    return run, m, count, wall_ms


def run_bench(spec: BenchSpec, step_budget: int | None = None) -> BenchResult:
    _, m, count, wall_ms = run_program(spec.source, spec.query, step_budget)
    return BenchResult(spec, m, wall_ms, count)


HEADER = ("name", "N_p", "N_c", "N_s", "R_c", "R_s")


def emit_table(rows, timings: bool = False) -> str:
    """Header plus one tab-separated line per row.

    A row is ``(name, n_p, n_c, n_s, r_c, r_s[, wall_ms])`` or a
    :class:`BenchResult`; ratios are printed with one decimal.
    """
    header = HEADER + (("wall_ms",) if timings else ())
    lines = ["\t".join(header)]
    for r in rows:
        if isinstance(r, BenchResult):
            r = r.row()
        name, n_p, n_c, n_s, r_c, r_s = r[:6]
        cells = [str(name), str(n_p), str(n_c), str(n_s), _ratio_cell(r_c), _ratio_cell(r_s)]
        if timings:
            cells.append(f"{r[6]:.0f}" if len(r) > 6 else "")
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def _ratio_cell(x) -> str:
    return x if isinstance(x, str) else fmt_ratio(x)


def env_seed(default: int = 0) -> int:
    """Seed for randomized harnesses, from ``TABKIT_SEED`` when set."""
    value = os.environ.get("TABKIT_SEED")
    return int(value) if value not in (None, "") else default


# --------------------------------------------------------------------------
# Command line


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tabkit", description="Tabled logic programming on delimited control.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run a query against a program file, streaming answers")
    s.add_argument("file")
    s.add_argument("query")
    s.add_argument("--steps", type=int, default=None, help="abort after this many machine steps")
    s.add_argument("--metrics", action="store_true", help="print producer/consumer/solution counts to stderr")
    s.add_argument("--memolist", action="store_true", help="answer with the list-memoisation oracle instead")

    b = sub.add_parser("bench", help="run the benchmark suite and print a TSV table")
    b.add_argument("--suite", choices=sorted(SUITES), default="core")
    b.add_argument("--check", action="store_true", help="exit 1 if any counter differs from its expected value")
    b.add_argument("--sizes", default=None, help="comma-separated sizes to run every benchmark at")
    b.add_argument("--out", default=None, help="also write the table to this file")
    b.add_argument("--only", default=None, help="comma-separated benchmark names to keep")
    return p


def _solve(args, out, err) -> int:
    try:
        db = load_file(args.file)
        q = parse_query(args.query)
    except OSError as e:
        print(f"tabkit: cannot read {args.file}: {e.strerror or e}", file=err)
        return 2
    except (ProgramSyntaxError, ProgramError) as e:
        print(f"tabkit: {e}", file=err)
        return 2

    if args.memolist:
        from .memolist import solve_query

        try:
            sols = solve_query(db, q.term, q.names)
        except ProgramError as e:
            print(f"tabkit: {e}", file=err)
            return 2
        for sol in sols:
            print(format_solution(sol), file=out, flush=True)
        if not sols:
            print("false", file=out, flush=True)
        return 0

    m = Metrics()
    run = TabledRun(db, step_budget=args.steps, on_event=lambda ev: record(ev, m), keep_events=False)
    count = 0
    status = 0
    try:
        for sol in run.solve(q.term, q.names):
            count += 1
            print(format_solution(sol), file=out, flush=True)
    except StepBudgetExceeded as e:
        print(f"tabkit: {e}", file=err)
        status = 3
    except TabkitError as e:
        print(f"tabkit: {e}", file=err)
        status = 3
    if count == 0 and status == 0:
        print("false", file=out, flush=True)
    if args.metrics:
        print(emit_table([("metrics", m.n_p, m.n_c, m.n_s, m.r_c, m.r_s)]), end="", file=err)
    return status


def _bench(args, out, err) -> int:
    suite = SUITES[args.suite]
    if args.sizes:
        sizes = [int(x) for x in args.sizes.split(",") if x.strip()]
        names = list(dict.fromkeys(name for name, _ in suite))
        suite = [(name, n) for name in names for n in sizes]
    if args.only:
        keep = {x.strip() for x in args.only.split(",")}
        suite = [(name, n) for name, n in suite if name in keep]
    results = []
    status = 0
    print("\t".join(HEADER + ("wall_ms",)), file=out, flush=True)
    for name, size in suite:
        spec = make_spec(name, size)
        try:
            res = run_bench(spec)
        except TabkitError as e:
            print(f"tabkit: {spec.label}: {e}", file=err)
            return 3
        results.append(res)
        print(emit_table([res], timings=True).splitlines()[1], file=out, flush=True)
        if args.check and res.ok is False:
            status = 1
            print(
                f"tabkit: {spec.label}: expected {spec.expected} ({spec.provenance}), got {res.counters}",
                file=err,
            )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(emit_table(results, timings=True))
    return status


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = _parser().parse_args(argv)
    if args.command == "solve":
        return _solve(args, out, err)
    return _bench(args, out, err)


def cli() -> None:
    sys.exit(main())
