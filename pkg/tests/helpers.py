"""Shared builders for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

from schematic_answers.parsing import parse_clause
from schematic_answers.terms import ANSWER, Clause, Fn, Literal, Var

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def L(text: str) -> Literal:
    """One literal from concrete syntax, e.g. ``L("~p(X, a)")``."""
    return parse_clause(text + ".").literals[0]


def C(ordinary: str = "", recording: str = "") -> Clause:
    """Clause from ``"p(X) | q(Y)"`` and a comma-free recording list ``"g(X); ~@(X)"``."""
    lits = tuple(parse_clause(ordinary + ".").literals) if ordinary else ()
    rec = tuple(answer_lit(r) if "@" in r else L(r.strip()) for r in recording.split(";") if r.strip())
    return Clause(lits, rec)


def answer_lit(text: str) -> Literal:
    """``~@(X, a)`` written with any argument list."""
    inner = text.strip().lstrip("~").strip()
    args = L("tmp" + inner[1:]).args if inner != "@" else ()
    return Literal(False, ANSWER, args)


def fixture_text(name: str, part: str) -> str:
    return (FIXTURES / name / f"{part}.txt").read_text()


def university(n: int = 100):
    """The graduate-student example: KB text, schema text, data text."""
    data = "\n".join(f"graduateStudent: s{i}" for i in range(1, n + 1))
    return fixture_text("university", "kb"), fixture_text("university", "schema"), data


def join_example(n: int = 100):
    data = "\n".join(f"person: p{i}\ntakesCourse: p{i}, c{i}\ncourse: c{i}" for i in range(1, n + 1))
    return fixture_text("join", "kb"), fixture_text("join", "schema"), data


# ---------------------------------------------------------------------------
# randomized function-free fixtures


def random_fixture(seed: int):
    """A layered, non-recursive, range-restricted Horn problem over a small store.

    Returns (kb_text, schema_text, data_text, query_text).
    """
    rng = random.Random(seed)
    consts = [f"k{i}" for i in range(rng.randint(3, 6))]
    n_tables = rng.randint(1, 5)
    tables = [(f"t{i}", rng.randint(1, 3)) for i in range(n_tables)]
    schema = "\n".join(f"table t{i}({', '.join(f'c{j}' for j in range(1, a + 1))}) as t{i}/{a}."
                       for i, (_, a) in enumerate(tables))
    rows = []
    for name, arity in tables:
        for _ in range(rng.randint(0, 30 // n_tables)):
            rows.append(f"{name}: " + ", ".join(rng.choice(consts) for _ in range(arity)))
    layers = [list(tables)]
    rules = []
    n_rules = rng.randint(0, 15)
    derived = []
    for r in range(n_rules):
        head = f"d{r}"
        arity = rng.randint(0, 2)
        pool = [p for layer in layers for p in layer]
        body, vars_ = [], []
        for _ in range(rng.randint(1, 3)):
            pred, pa = rng.choice(pool)
            args = []
            for _ in range(pa):
                roll = rng.random()
                if vars_ and roll < 0.5:
                    args.append(rng.choice(vars_))
                elif roll < 0.85:
                    v = f"V{len(vars_)}"
                    vars_.append(v)
                    args.append(v)
                else:
                    args.append(rng.choice(consts))
            body.append(_atom(pred, args))
        if len(vars_) < arity:
            arity = len(vars_)
        head_args = rng.sample(vars_, arity) if arity else []
        rules.append(f"{_atom(head, head_args)} :- {', '.join(body)}.")
        derived.append((head, arity))
        layers.append([(head, arity)])
    pool = [p for layer in layers for p in layer]
    goal_pred, ga = rng.choice(derived or pool)
    k = rng.randint(0, min(3, ga))
    qvars = [f"X{i}" for i in range(ga)]
    goal = [_atom(goal_pred, qvars)]
    if rng.random() < 0.4:
        pred, pa = rng.choice(pool)
        goal.append(_atom(pred, [rng.choice(qvars) if qvars and rng.random() < 0.6 else f"Y{j}" for j in range(pa)]))
    names = list(dict.fromkeys(v for v in qvars))[:k]
    answer = f" answer {', '.join(names)}" if names else " answer"
    query = f"?- {', '.join(goal)}{answer}."
    return "\n".join(rules), schema, "\n".join(rows), query


def _atom(pred, args):
    return f"{pred}({', '.join(args)})" if args else pred


# ---------------------------------------------------------------------------
# randomized schematic answers over a small store

SA_SCHEMA_TEXT = "table ta(x) as ta/1.\ntable tb(x, y) as tb/2.\ntable tc(x, y, z) as tc/3.\n"
SA_CONSTS = ["a", "b", "c", "d"]


def random_store(rng: random.Random, schema, max_rows: int = 30):
    from schematic_answers.store import FactStore

    store = FactStore(schema)
    tables = list(schema)
    for _ in range(rng.randint(0, max_rows)):
        t = rng.choice(tables)
        store.add(t.predicate, [rng.choice(SA_CONSTS) for _ in range(t.arity)])
    return store


def random_schematic_answer(rng: random.Random, n_answers: int, width: int, flat_answers: bool = True):
    """A clause ``[] | ~@(..)..., db literals`` over ta/tb/tc, function-free."""
    from schematic_answers.terms import Clause

    vars_ = [Var(f"V{i}") for i in range(rng.randint(1, 5))]

    def term():
        return rng.choice(vars_) if rng.random() < 0.75 else Fn(rng.choice(SA_CONSTS))

    db = []
    for _ in range(rng.randint(1, 4)):
        pred, arity = rng.choice([("ta", 1), ("tb", 2), ("tc", 3)])
        db.append(Literal(True, pred, tuple(term() for _ in range(arity))))
    answers = [Literal(False, ANSWER, tuple(term() for _ in range(width))) for _ in range(n_answers)]
    return Clause((), tuple(answers) + tuple(db))


def brute_force_instances(clause, store, domain):
    """Ground answer tuples of a function-free schematic answer by enumeration."""
    import itertools

    vs = clause.variables()
    out = set()
    db = clause.db_literals()
    answers = clause.answer_literals()
    for combo in itertools.product(domain, repeat=len(vs)):
        env = dict(zip(vs, combo))

        def val(t):
            return env[t] if isinstance(t, Var) else t.name

        if not all(store.contains(l.predicate, [val(a) for a in l.args]) for l in db):
            continue
        tuples = {tuple(val(a) for a in l.args) for l in answers}
        if len(tuples) == 1:
            out |= tuples
    return out
