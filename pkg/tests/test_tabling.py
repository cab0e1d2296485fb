import random
from collections import Counter

import pytest

from oracles import random_datalog, render_program, term_text
from tabkit.bench import env_seed, fib_program
from tabkit.errors import PrologTypeError
from tabkit.metrics import from_run
from tabkit.program import parse_program, parse_query
from tabkit.tabling import (
    ANSWER_DUPLICATE,
    ANSWER_EMITTED,
    ANSWER_INSERTED,
    CONSUMER_REGISTERED,
    PRODUCER_STARTED,
    TabledRun,
    format_solution,
    run_tabled,
    solve_tabled,
    table_dump,
    table_key,
)
from tabkit.term import Atom, Struct, term_str, var_marker

PATH = """\
:- table path/2.
path(X, Y) :- edge(X, Y).
path(X, Y) :- path(X, Z), edge(Z, Y).
edge(a, b). edge(a, c). edge(b, d). edge(c, d).
"""

PATH_KEY = Struct("path", (Atom("a"), var_marker(0)))


def answers(src, query, **kw):
    db = parse_program(src)
    return [format_solution(s) for s in solve_tabled(db, query, **kw)]


def test_path_example():
    run, stream = run_tabled(parse_program(PATH), "path(a,W)")
    sols = [format_solution(s) for s in stream]
    assert sorted(sols) == ["W=b", "W=c", "W=d"]
    assert table_dump(run.store)[PATH_KEY][0] == 3
    inserted = [e for e in run.events if e.kind == ANSWER_INSERTED]
    dups = [e for e in run.events if e.kind == ANSWER_DUPLICATE]
    assert [term_str(e.tuple[0]) for e in inserted].count("d") == 1
    assert len(dups) == 1 and term_str(dups[0].tuple[0]) == "d"
    assert [term_str(t) for t in run.store[PATH_KEY].answer_terms()[0]] == ["b"]


def test_first_call_is_producer_under_variant_key():
    run, stream = run_tabled(parse_program(PATH), "path(a,W)")
    next(stream)
    first = run.events[0]
    assert first.kind == PRODUCER_STARTED
    assert first.key == PATH_KEY
    assert term_str(first.key) == "path(a,'$VAR'(0))"


def test_first_answer_is_dispatched_to_producer_and_emitted():
    run, stream = run_tabled(parse_program(PATH), "path(a,W)")
    sol = next(stream)
    kinds = [e.kind for e in run.events]
    assert kinds[:2] == [PRODUCER_STARTED, ANSWER_INSERTED]
    assert format_solution(sol) == "W=b"
    assert kinds[-1] == ANSWER_EMITTED


def test_second_variant_call_is_consumer():
    run, stream = run_tabled(parse_program(PATH), "path(a,W), path(a,W2)")
    sols = [format_solution(s) for s in stream]
    assert len(sols) == 9
    kinds = [e.kind for e in run.events]
    assert kinds.count(PRODUCER_STARTED) == 1
    assert kinds.count(CONSUMER_REGISTERED) >= 2
    assert "W=b, W2=b" in sols


def test_no_derivations_gives_empty_table():
    src = ":- table p/1.\np(X) :- q(X).\nq(1) :- fail."
    run, stream = run_tabled(parse_program(src), "p(X)")
    assert list(stream) == []
    assert table_dump(run.store) == {Struct("p", (var_marker(0),)): (0, 1)}


def test_untouched_store_dumps_empty():
    run = TabledRun(parse_program(PATH))
    assert run.store.dump() == {}


def test_fib_10():
    src, _ = fib_program(10)
    run, stream = run_tabled(parse_program(src), "fib(10, F)")
    assert [format_solution(s) for s in stream] == ["F=55"]
    dump = table_dump(run.store)
    assert len(dump) == 11
    assert all(n == 1 for n, _ in dump.values())


@pytest.mark.parametrize("n", [5, 10, 20])
def test_fib_counters_closed_form(n):
    src, query = fib_program(n)
    run, stream = run_tabled(parse_program(src), query)
    list(stream)
    m = from_run(run)
    assert (m.n_p, m.n_c, m.n_s) == (n + 1, n - 2, n + 1)


def test_consumers_equal_calls_minus_one():
    calls = Counter()

    class CountingRun(TabledRun):
        def _on_tab(self, result):
            if hasattr(result, "signal"):
                calls[table_key(result.signal, self.machine.bindings)] += 1
            return super()._on_tab(result)

    for src, query in [fib_program(12), (PATH, "path(a,W), path(b,V)")]:
        calls.clear()
        run = CountingRun(parse_program(src))
        list(run.solve(parse_query(query).term))
        for key, entry in run.store.items():
            assert len(entry.consumers) == calls[key] - 1
        assert run.machine.captures == sum(calls.values())


def test_directive_equals_manual_tabled_call():
    manual = """\
path(X, Y) :- tabled_call('path#'(X, Y)).
'path#'(X, Y) :- edge(X, Y).
'path#'(X, Y) :- path(X, Z), edge(Z, Y).
edge(a, b). edge(a, c). edge(b, d). edge(c, d).
"""
    r1, s1 = run_tabled(parse_program(PATH), "path(a,W)")
    r2, s2 = run_tabled(parse_program(manual), "path(a,W)")
    assert [format_solution(s) for s in s1] == [format_solution(s) for s in s2]
    assert [(e.kind, e.key) for e in r1.events] == [(e.kind, e.key) for e in r2.events]


def test_answers_deduplicated_up_to_variants():
    src = ":- table p/1.\np(f(X)).\np(f(Y)).\np(g(X, X)).\np(g(X, Y))."
    sols = answers(src, "p(Z)")
    assert len(sols) == 3
    assert sols[0].startswith("Z=f(_G")


def test_non_ground_answers_get_fresh_variables():
    src = ":- table p/2.\np(X, f(X))."
    sols = answers(src, "p(A, B), p(C, D)")
    assert len(sols) == 1
    assert sols[0].count("f(") == 2


def test_bound_and_partially_bound_calls():
    assert sorted(answers(PATH, "path(X, d)")) == ["X=a", "X=b", "X=c"]
    assert answers(PATH, "path(a, d)") == ["true"]
    assert answers(PATH, "path(d, X)") == []


def test_tables_survive_backtracking():
    run, stream = run_tabled(parse_program(PATH), "(path(a,X) ; path(a,Y))")
    sols = list(stream)
    assert len(sols) == 6
    kinds = [e.kind for e in run.events]
    assert kinds.count(PRODUCER_STARTED) == 1
    assert kinds.count(CONSUMER_REGISTERED) == 2  # one inside, one from the second disjunct


def test_error_leaves_partial_tables():
    src = ":- table p/1.\np(1).\np(X) :- X is foo + 1."
    run, stream = run_tabled(parse_program(src), "p(X)")
    with pytest.raises(PrologTypeError):
        list(stream)
    assert table_dump(run.store) == {Struct("p", (var_marker(0),)): (1, 1)}


def test_step_budget_applies_to_tabled_runs():
    from tabkit.errors import StepBudgetExceeded

    src, query = fib_program(200)
    with pytest.raises(StepBudgetExceeded):
        list(solve_tabled(parse_program(src), query, step_budget=1000))


def test_mixed_tabled_and_plain_predicates():
    src = PATH + "reach(X, Y) :- path(X, Y).\nreach2(X, Y) :- reach(X, Z), reach(Z, Y).\n"
    assert answers(src, "reach2(a, Y)") == ["Y=d", "Y=d"]  # reach2 itself is not tabled
    assert sorted(answers(src, "reach(a, Y)")) == ["Y=b", "Y=c", "Y=d"]


def test_clause_order_does_not_change_answer_sets():
    rng = random.Random(env_seed(0) + 7)
    for _ in range(40):
        case = random_datalog(rng, chain=rng.random() < 0.5)
        q = case.queries[0]
        text = term_text(q, {})
        base = None
        for _ in range(3):
            clauses = case.clauses[:]
            rng.shuffle(clauses)
            src = render_program(clauses, [(p, case.preds[p]) for p in case.idb])
            got = set(term_str(Struct("t", tuple(s.values()))) for s in solve_tabled(parse_program(src), text))
            base = got if base is None else base
            assert got == base


def test_emitted_events_carry_solutions():
    run, stream = run_tabled(parse_program(PATH), "path(a,W)")
    list(stream)
    emitted = [e for e in run.events if e.kind == ANSWER_EMITTED]
    assert sorted(term_str(e.tuple[0]) for e in emitted) == ["b", "c", "d"]
    ords = [e.ordinal for e in run.events]
    assert ords == sorted(ords) and len(set(ords)) == len(ords)
