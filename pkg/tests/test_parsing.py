import pytest
from hypothesis import given, strategies as st

from helpers import L
from schematic_answers.parsing import (
    ParseError, format_clause, load_facts, parse_clause, parse_documents, parse_kb, parse_query, parse_schema,
    split_values,
)
from schematic_answers.terms import ANSWER, Clause, Fn, Literal, SymbolTable, Var, const


def test_kb_disjunction():
    (c,) = parse_kb("~grStud(X) | pers(X).")
    assert c.literals == (L("~grStud(X)"), L("pers(X)"))
    assert c.recording == ()


def test_kb_four_literal_clause():
    (c,) = parse_kb("~takesC(X,Y) | ~course(Y) | ~pers(X) | stud(X).")
    assert len(c.literals) == 4
    assert [l.positive for l in c.literals] == [False, False, False, True]


def test_kb_repeated_literal_is_kept():
    (c,) = parse_kb("p(X) | p(X).")
    assert c.literals == (L("p(X)"), L("p(X)"))


def test_kb_horn_rule_syntax():
    (c,) = parse_kb("stud(P) :- person(P), takesC(P, C), course(C).")
    assert c.literals == (L("stud(P)"), L("~person(P)"), L("~takesC(P, C)"), L("~course(C)"))


def test_kb_comments_and_quoted_symbols():
    kb = parse_kb("% a comment\np('Hello World', f(x)). % trailing\n")
    assert kb[0].literals[0].args == (const("Hello World"), Fn("f", (const("x"),)))


def test_kb_namespaced_symbols():
    (c,) = parse_kb("~zoo:elephant(X) | animal(X).")
    assert c.literals[0].predicate == "zoo:elephant"


def test_kb_arity_clash():
    with pytest.raises(ParseError):
        parse_kb("p(a). p(a, b).")


def test_kb_rejects_answer_predicate():
    with pytest.raises(ParseError):
        parse_kb("@(X).")


def test_kb_error_position():
    with pytest.raises(ParseError) as info:
        parse_kb("p(a).\nq(a")
    assert info.value.line == 2


def test_query_default_distinguished():
    q = parse_query("?- stud(X).")
    assert q.goal.literals == (L("~stud(X)"),)
    assert q.goal.recording == (Literal(False, ANSWER, (Var("X"),)),)
    assert q.answer_names == ("X",)


def test_query_answer_list():
    q = parse_query("?- person(P), takesCourse(P,C), course(C) answer P.")
    assert q.goal.literals == (L("~person(P)"), L("~takesCourse(P,C)"), L("~course(C)"))
    assert q.goal.recording == (Literal(False, ANSWER, (Var("P"),)),)
    assert q.undistinguished == (Var("C"),)


def test_boolean_query():
    q = parse_query("?- p(a).")
    assert q.distinguished == ()
    assert q.goal.recording == (Literal(False, ANSWER, ()),)


def test_query_unknown_answer_variable():
    with pytest.raises(ParseError):
        parse_query("?- p(X) answer Y.")


def test_query_declares_answer_arity():
    s = SymbolTable()
    parse_query("?- p(X, Y).", s)
    assert s.predicate_arity(ANSWER) == 2


def test_schema():
    schema = parse_schema("table graduateStudent(id) as grStud/1.\n"
                          "table takesCourse(student, course) as takesCourse/2.\n")
    t = schema.for_predicate("grStud")
    assert (t.name, t.columns) == ("graduateStudent", ("id",))
    assert schema.table("takesCourse").columns == ("student", "course")


def test_schema_arity_mismatch():
    with pytest.raises(ParseError):
        parse_schema("table t(a) as p/2.")


def test_schema_bijection():
    with pytest.raises(ParseError):
        parse_schema("table t(a) as p/1.\ntable u(a) as p/1.")


def test_load_facts():
    schema = parse_schema("table takesCourse(student, course) as takesCourse/2.")
    store = load_facts(schema, "takesCourse: s1, c1\ntakesCourse: s1, c1\n")
    assert store.rows("takesCourse") == [("s1", "c1")]


def test_load_facts_arity_error():
    schema = parse_schema("table graduateStudent(id) as grStud/1.")
    with pytest.raises(ParseError):
        load_facts(schema, "graduateStudent: s1, s2")


def test_load_facts_namespaced_table():
    schema = parse_schema("table zoo:animals(id) as zoo:animal/1.")
    store = load_facts(schema, "zoo:animals: 'http://x/e1'")
    assert store.rows("zoo:animal") == [("http://x/e1",)]


def test_split_values_quoting():
    assert split_values("a, 'b, c', \"d\"") == ["a", "b, c", "d"]
    with pytest.raises(ParseError):
        split_values("a, , b")


def test_documents():
    docs = parse_documents('''
        doc d1 {
          zoo:elephant(X) pref(X, "http://www.myelephants.com/").
          colors:pink(X).
        }
        doc d2 { }
    ''')
    assert [d.docid for d in docs] == ["d1", "d2"]
    first = docs[0].clauses[0]
    assert first.literals == first.recording == (L("zoo:elephant(X)"),)
    assert first.prefs == ((Var("X"), "http://www.myelephants.com/"),)
    assert docs[1].clauses == ()


def test_documents_pref_on_unknown_variable():
    with pytest.raises(ParseError):
        parse_documents('doc d { p(X) pref(Y, "u"). }')


# -- round trip -----------------------------------------------------------------

_names = st.sampled_from(["a", "b", "s1", "zoo:x", "Hello World", "it's", "42"])
_vars = st.sampled_from(["X", "Y", "_Z"])


def _term(depth=2):
    leaf = st.one_of(_names.map(const), _vars.map(Var))
    if depth == 0:
        return leaf
    return st.one_of(leaf, st.builds(lambda n, args: Fn(n, tuple(args)), st.sampled_from(["f", "g:h"]),
                                     st.lists(_term(depth - 1), min_size=1, max_size=1)))


@st.composite
def kb_clauses(draw):
    lits = []
    for _ in range(draw(st.integers(1, 3))):
        pred = draw(st.sampled_from(["p", "q", "ns:r"]))
        lits.append(Literal(draw(st.booleans()), pred, (draw(_term()),)))
    return Clause(tuple(lits))


@given(kb_clauses())
def test_clause_round_trip(c):
    assert parse_clause(format_clause(c)) == c
