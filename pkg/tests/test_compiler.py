import random
import sqlite3

import pytest
from hypothesis import given, settings, strategies as st

from helpers import (
    L, SA_CONSTS, SA_SCHEMA_TEXT, answer_lit, brute_force_instances, random_schematic_answer, random_store,
)
from schematic_answers.compiler import (
    Case, ConcreteAnswer, UnsupportedAnswer, build_query, classify_case, compile_answer, ed_redundant_free,
    evaluate_sql, flatten, instances_of_flat, instantiate, iter_instances, merge_answer_literals, normalize_answer,
    render_statement, sql_literal, to_sql,
)
from schematic_answers.parsing import load_facts, parse_schema
from schematic_answers.store import FactStore, solve_constraint
from schematic_answers.terms import ANSWER, Clause, Fn, Literal, Var, const, variant

X, Y, W = Var("X"), Var("Y"), Var("W")

UNIVERSITY = parse_schema("table graduateStudent(id) as grStud/1.\n"
                          "table person(id) as person/1.\n"
                          "table takesCourse(student, course) as takesCourse/2.\n"
                          "table course(id) as course/1.\n"
                          "table p(c1, c2) as p/2.\n")
SA_SCHEMA = parse_schema(SA_SCHEMA_TEXT)


def sa(*recording):
    return Clause((), tuple(answer_lit(r) if "@" in r else L(r) for r in recording))


def students(n=100):
    return load_facts(UNIVERSITY, "\n".join(f"graduateStudent: s{i}" for i in range(1, n + 1)))


def join_store(n=100):
    return load_facts(UNIVERSITY, "\n".join(f"person: p{i}\ntakesCourse: p{i}, c{i}\ncourse: c{i}"
                                            for i in range(1, n + 1)))


# -- cases ----------------------------------------------------------------------


def test_cases():
    assert classify_case(Clause()) is Case.KB_REFUTATION
    assert classify_case(sa("~@(a)")) is Case.PURE_ANSWER
    assert classify_case(sa("grStud(X)")) is Case.KB_DB_INCONSISTENCY
    assert classify_case(sa("~@(X)", "grStud(X)")) is Case.STANDARD


def test_kb_db_inconsistency_reported_only_when_satisfiable():
    assert compile_answer(sa("grStud(X)"), UNIVERSITY, students(3)).diagnostics
    assert not compile_answer(sa("grStud(X)"), UNIVERSITY, FactStore(UNIVERSITY)).diagnostics


def test_pure_answer():
    compiled = compile_answer(sa("~@(a)"), UNIVERSITY, students(1))
    assert list(iter_instances(students(1), compiled)) == [ConcreteAnswer((const("a"),))]


def test_pure_answer_with_universal_variable():
    compiled = compile_answer(sa("~@(a, X)"), UNIVERSITY, students(1))
    (answer,) = iter_instances(students(1), compiled)
    assert not answer.is_ground
    assert answer.format(["A", "B"]) == "A=a, B=*  % forall"
    assert set(answer.ground_instances(["a", "b"])) == {("a", "a"), ("a", "b")}


# -- merging --------------------------------------------------------------------


def test_merge_unifies_answer_literals():
    merged = merge_answer_literals(sa("~@(X)", "~@(Y)", "p(X, Y)"))
    assert variant(merged, sa("~@(X)", "p(X, X)"))


def test_merge_example_instance_sets_by_brute_force():
    store = load_facts(UNIVERSITY, "p: a, a\np: a, b\np: b, b\np: c, a")
    before = sa("~@(X)", "~@(Y)", "p(X, Y)")
    merged = merge_answer_literals(before)
    domain = ["a", "b", "c"]
    assert brute_force_instances(before, store, domain) == brute_force_instances(merged, store, domain) \
        == {("a",), ("b",)}


def test_merge_failure_and_identity():
    assert merge_answer_literals(sa("~@(a)", "~@(b)", "p(X, X)")) is None
    single = sa("~@(X)", "grStud(X)")
    assert merge_answer_literals(single) == single


# -- normalisation --------------------------------------------------------------


def test_normalize_projects_compound_answer():
    c = Clause((), (Literal(False, ANSWER, (Fn("f", (X,)), W)), L("p(X, X)")))
    core, template = normalize_answer(c)
    assert core.answer_literals()[0].args == (X,)
    assert template.args == (Fn("f", (X,)), W)
    answer = template.reconstruct([const("c")])
    assert answer.values[0] == Fn("f", (const("c"),))
    assert not answer.is_ground
    assert answer.as_strings() == ("f(c)", "*")


def test_normalize_trivial():
    core, template = normalize_answer(sa("~@(X)", "grStud(X)"))
    assert core == sa("~@(X)", "grStud(X)")
    assert template.trivial


def test_normalize_duplicate_variable():
    core, template = normalize_answer(sa("~@(X, X)", "grStud(X)"))
    assert core.answer_literals()[0].args == (X,)
    assert template.reconstruct([const("s1")]).values == (const("s1"), const("s1"))


# -- flattening -----------------------------------------------------------------


def test_flatten_single_table():
    flat = flatten(sa("~@(X)", "grStud(X)"), UNIVERSITY)
    assert flat.literals == (("grStud", 1),)
    assert flat.e_a == ((1, 1),)
    assert flat.e_c == () and flat.e_d == ()


def test_flatten_join():
    flat = flatten(sa("~@(X)", "person(X)", "takesCourse(X, Y)", "course(Y)"), UNIVERSITY)
    assert flat.e_a == ((1, 1),)
    assert set(flat.e_d) == {((1, 1), (2, 1)), ((2, 2), (3, 1))}
    assert flat.e_c == ()


def test_flatten_constant():
    flat = flatten(sa("~@(X)", "p(a, X)"), UNIVERSITY)
    assert flat.e_c == ((1, 1, "a"),)
    assert flat.e_a == ((1, 2),)
    store = load_facts(UNIVERSITY, "p: a, x\np: a, y\np: b, z\np: c, x\np: a, a")
    direct = {(s[X].name,) for s in solve_constraint(store, [L("p(a, X)")])}
    assert set(instances_of_flat(store, flat)) == direct == {("x",), ("y",), ("a",)}


def test_flatten_rejects_compound_arguments():
    with pytest.raises(UnsupportedAnswer):
        flatten(sa("~@(X)", "p(f(X), X)"), UNIVERSITY)
    compiled = compile_answer(sa("~@(X)", "p(f(X), X)"), UNIVERSITY, students(1))
    assert compiled.flat is None and compiled.diagnostics


def test_ed_redundancy():
    assert ed_redundant_free([((1, 1), (2, 1)), ((2, 1), (3, 1))])
    assert not ed_redundant_free([((1, 1), (2, 1)), ((2, 1), (3, 1)), ((1, 1), (3, 1))])
    assert not ed_redundant_free([((1, 1), (2, 1)), ((2, 1), (3, 1)), ((3, 1), (4, 1)), ((1, 1), (4, 1))])


# -- SQL ------------------------------------------------------------------------


def test_sql_single_table():
    flat = flatten(sa("~@(X)", "grStud(X)"), UNIVERSITY)
    assert to_sql(flat, UNIVERSITY) == "SELECT R1.id AS X FROM graduateStudent AS R1"
    assert render_statement(to_sql(flat, UNIVERSITY)) == "SELECT R1.id AS X FROM graduateStudent AS R1;"


def test_sql_join():
    flat = flatten(sa("~@(X)", "takesCourse(X, Y)", "course(Y)", "person(X)"), UNIVERSITY)
    assert to_sql(flat, UNIVERSITY) == ("SELECT R1.id AS X FROM person AS R1, takesCourse AS R2, course AS R3 "
                                        "WHERE R1.id = R2.student AND R3.id = R2.course")


def test_sql_constant():
    flat = flatten(sa("~@(X)", "p(a, X)"), UNIVERSITY)
    assert to_sql(flat, UNIVERSITY) == "SELECT R1.c2 AS X FROM p AS R1 WHERE R1.c1 = 'a'"


def test_sql_literal_quoting():
    assert sql_literal("42") == "42"
    assert sql_literal("it's") == "'it''s'"
    assert sql_literal("4a") == "'4a'"


def test_sql_boolean_query():
    flat = flatten(sa("~@", "p(a, X)"), UNIVERSITY)
    assert to_sql(flat, UNIVERSITY) == "SELECT 1 FROM p AS R1 WHERE R1.c1 = 'a'"


def test_sql_is_deterministic():
    c = sa("~@(X)", "takesCourse(X, Y)", "course(Y)", "person(X)")
    assert len({to_sql(flatten(c, UNIVERSITY), UNIVERSITY) for _ in range(5)}) == 1


# -- instantiation --------------------------------------------------------------


def test_instantiate_single_table():
    got = instantiate(students(), sa("~@(X)", "grStud(X)"), UNIVERSITY)
    assert got == {ConcreteAnswer((const(f"s{i}"),)) for i in range(1, 101)}
    assert instantiate(FactStore(UNIVERSITY), sa("~@(X)", "grStud(X)"), UNIVERSITY) == set()


def test_instantiate_join():
    got = instantiate(join_store(), sa("~@(X)", "person(X)", "takesCourse(X, Y)", "course(Y)"), UNIVERSITY)
    assert got == {ConcreteAnswer((const(f"p{i}"),)) for i in range(1, 101)}


def test_instances_follow_store_order():
    compiled = compile_answer(sa("~@(X)", "grStud(X)"), UNIVERSITY, students(12))
    assert [a.values[0].name for a in iter_instances(students(12), compiled)] == [f"s{i}" for i in range(1, 13)]


def test_instantiate_unsupported_gives_diagnostic():
    notes = []
    assert instantiate(students(1), sa("~@(X)", "p(f(X), X)"), UNIVERSITY, notes) == set()
    assert notes


# -- properties -----------------------------------------------------------------


def _expand(answers, domain):
    out = set()
    for a in answers:
        out.update(a.ground_instances(domain))
    return out


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_pipeline_matches_brute_force(seed):
    rng = random.Random(seed)
    store = random_store(rng, SA_SCHEMA)
    clause = random_schematic_answer(rng, rng.randint(1, 3), rng.randint(1, 2))
    domain = sorted(set(store.active_domain()) | set(SA_CONSTS))
    got = _expand(instantiate(store, clause, SA_SCHEMA), domain)
    assert got == brute_force_instances(clause, store, domain)


def _sqlite(store, schema):
    db = sqlite3.connect(":memory:")
    for t in schema:
        db.execute(f"CREATE TABLE {t.name} ({', '.join(c + ' TEXT' for c in t.columns)})")
        db.executemany(f"INSERT INTO {t.name} VALUES ({', '.join('?' * t.arity)})", store.rows(t.predicate))
    return db


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_sql_agrees_with_sqlite_and_internal_evaluator(seed):
    rng = random.Random(seed)
    store = random_store(rng, SA_SCHEMA)
    clause = random_schematic_answer(rng, 1, rng.randint(1, 2))
    merged = merge_answer_literals(clause)
    core, _ = normalize_answer(merged)
    if not core.answer_literals()[0].args:
        return
    flat = flatten(core, SA_SCHEMA)
    query = build_query(flat, SA_SCHEMA)
    expected = set(instances_of_flat(store, flat))
    assert evaluate_sql(query, store, SA_SCHEMA) == expected
    rows = _sqlite(store, SA_SCHEMA).execute(query.render()).fetchall()
    assert set(rows) == expected
    assert ed_redundant_free(flat.e_d)
