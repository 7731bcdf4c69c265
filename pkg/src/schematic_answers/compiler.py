"""Turning schematic answers into SQL queries and concrete answers."""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .store import FactStore, UnsupportedConstraint, constraint_satisfiable, solve_constraint
from .terms import (
    ANSWER, Clause, Fn, Literal, Var, simultaneous_mgu, substitute,
)


class Case(str, enum.Enum):
    KB_REFUTATION = "kb-refutation"
    PURE_ANSWER = "pure-answer"
    KB_DB_INCONSISTENCY = "kb-db-inconsistency"
    STANDARD = "standard"


class UnsupportedAnswer(ValueError):
    """The schematic answer has compound terms in its database literals."""


def _clause(sa) -> Clause:
    return sa.clause if hasattr(sa, "clause") else sa


def classify_case(sa) -> Case:
    c = _clause(sa)
    p, n = len(c.db_literals()), len(c.answer_literals())
    if p == 0:
        return Case.KB_REFUTATION if n == 0 else Case.PURE_ANSWER
    return Case.KB_DB_INCONSISTENCY if n == 0 else Case.STANDARD


def merge_answer_literals(sa) -> Optional[Clause]:
    """Unify all answer literals; None when they have no common instance."""
    c = _clause(sa)
    answers = c.answer_literals()
    if not answers:
        raise ValueError("schematic answer has no answer literals")
    theta = simultaneous_mgu([l.atom for l in answers])
    if theta is None:
        return None
    db = tuple(dict.fromkeys(substitute_literal(theta, l) for l in c.db_literals()))
    return Clause((), (substitute_literal(theta, answers[0]),) + db, c.origin)


def substitute_literal(theta, lit: Literal) -> Literal:
    return Literal(lit.positive, lit.predicate, tuple(substitute(a, theta) for a in lit.args))


# ---------------------------------------------------------------------------
# Normalisation


@dataclass(frozen=True)
class AnswerTemplate:
    """Rebuilds original answer terms from instances of the core answer."""

    args: tuple  # original @-arguments
    core_vars: tuple  # variables of the core answer literal, in order

    @property
    def trivial(self) -> bool:
        return self.args == self.core_vars

    def reconstruct(self, values: Sequence) -> "ConcreteAnswer":
        theta = {v: (val if isinstance(val, (Var, Fn)) else Fn(str(val))) for v, val in zip(self.core_vars, values)}
        return ConcreteAnswer.of(tuple(substitute(a, theta) for a in self.args))


def normalize_answer(clause) -> tuple[Clause, AnswerTemplate]:
    """Project a single-answer-literal schematic answer onto vars(A) & vars(D)."""
    c = _clause(clause)
    answers = c.answer_literals()
    if len(answers) != 1:
        raise ValueError("normalize_answer expects exactly one answer literal")
    a = answers[0]
    db = c.db_literals()
    db_vars = {v for l in db for v in l.variables()}
    core_vars = tuple(dict.fromkeys(v for v in a.variables() if v in db_vars))
    core = Clause((), (Literal(False, ANSWER, core_vars),) + tuple(db), c.origin)
    return core, AnswerTemplate(tuple(a.args), core_vars)


# ---------------------------------------------------------------------------
# Concrete answers


@dataclass(frozen=True)
class ConcreteAnswer:
    """A tuple of answer terms; variables left in it are universally quantified."""

    values: tuple

    @classmethod
    def of(cls, values: Iterable) -> "ConcreteAnswer":
        values = tuple(values)
        names = {}
        for t in values:
            for v in t.variables():
                names.setdefault(v, Var(f"_U{len(names)}"))
        return cls(tuple(substitute(t, names) for t in values))

    @property
    def is_ground(self) -> bool:
        return all(t.is_ground for t in self.values)

    def universal_vars(self) -> list:
        return list(dict.fromkeys(v for t in self.values for v in t.variables()))

    def ground_instances(self, domain: Sequence[str]) -> Iterator[tuple]:
        """All instances with universal variables ranging over ``domain``."""
        uvars = self.universal_vars()
        for combo in itertools.product(domain, repeat=len(uvars)):
            theta = {v: Fn(c) for v, c in zip(uvars, combo)}
            yield tuple(_term_text(substitute(t, theta)) for t in self.values)

    def as_strings(self) -> tuple:
        return tuple(_term_text(t, universal="*") for t in self.values)

    def format(self, names: Sequence[str]) -> str:
        if not self.values:
            return "yes"
        body = ", ".join(f"{n}={v}" for n, v in zip(names, self.as_strings()))
        return body if self.is_ground else f"{body}  % forall"


def _term_text(t, universal=None) -> str:
    if isinstance(t, Var):
        return universal or t.name
    if not t.args:
        return t.name
    return f"{t.name}({','.join(_term_text(a, universal) for a in t.args)})"


# ---------------------------------------------------------------------------
# Flattening


@dataclass(frozen=True)
class FlattenedAnswer:
    """``E_a | E_c | E_d | D_x | A`` with positions written as 1-based (i, j)."""

    answer_vars: tuple  # A = @(X1..Xk)
    literals: tuple  # D_x: (predicate, arity) per literal, in order
    e_a: tuple  # per answer variable, the position (i, j) bound to it
    e_c: tuple  # (i, j, constant name)
    e_d: tuple  # ((i, j), (u, v))
    names: tuple = ()  # output column names, one per answer variable

    def fresh_var(self, i: int, j: int) -> Var:
        return Var(f"Y{i}_{j}")

    def atoms(self) -> list[Literal]:
        """D_x with E_c and E_d applied: the constraint the SQL query evaluates."""
        parent: dict = {}

        def find(x):
            while parent.get(x, x) != x:
                x = parent[x]
            return x

        for a, b in self.e_d:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        consts = {(i, j): c for i, j, c in self.e_c}
        out = []
        for i, (pred, arity) in enumerate(self.literals, 1):
            args = []
            for j in range(1, arity + 1):
                root = find((i, j))
                args.append(Fn(consts[root]) if root in consts else self.fresh_var(*root))
            out.append(Literal(True, pred, tuple(args)))
        return out

    def answer_term(self, e: int) -> Var:
        return self.fresh_var(*self.e_a[e])


def join_order(literals: Sequence[Literal], seeds: Sequence[Var]) -> list[Literal]:
    """Order literals so each one joins with what precedes it where possible.

    Starting from the answer variables, repeatedly take the literal touching the
    earliest-reached variable, preferring fewer arguments, then predicate name.
    The multiset of recording literals carries no order of its own, so this
    fixes one for reproducible SQL.
    """
    remaining = list(literals)
    reached: dict = dict.fromkeys(seeds)
    out = []
    while remaining:
        rank = {v: k for k, v in enumerate(reached)}

        def key(item):
            k, lit = item
            hits = [rank[v] for v in lit.variables() if v in rank]
            return (min(hits) if hits else len(rank), len(lit.args), lit.predicate, k)

        k, lit = min(enumerate(remaining), key=key)
        out.append(lit)
        del remaining[k]
        reached.update(dict.fromkeys(lit.variables()))
    return out


def flatten(core, schema=None, names: Optional[Sequence[str]] = None) -> FlattenedAnswer:
    """Raise UnsupportedAnswer when a database literal has a compound argument."""
    c = _clause(core)
    answers = c.answer_literals()
    if len(answers) != 1:
        raise ValueError("flatten expects a core answer with one answer literal")
    answer_vars = answers[0].args
    if any(not isinstance(v, Var) for v in answer_vars) or len(set(answer_vars)) != len(answer_vars):
        raise ValueError("core answer literal must have pairwise distinct variables")
    db = join_order(c.db_literals(), answer_vars)
    literals, e_c = [], []
    occurrences: dict[Var, list] = {}
    for i, lit in enumerate(db, 1):
        if schema is not None and not schema.has_predicate(lit.predicate):
            raise UnsupportedAnswer(f"no table for predicate {lit.predicate}")
        literals.append((lit.predicate, len(lit.args)))
        for j, t in enumerate(lit.args, 1):
            if isinstance(t, Var):
                occurrences.setdefault(t, []).append((i, j))
            elif t.args:
                raise UnsupportedAnswer(f"compound term {t} in {lit}")
            else:
                e_c.append((i, j, t.name))
    e_a = []
    for v in answer_vars:
        if v not in occurrences:
            raise ValueError(f"answer variable {v} does not occur in the database literals")
        e_a.append(min(occurrences[v]))
    e_d = []
    for occ in occurrences.values():
        occ = sorted(occ)
        e_d.extend(zip(occ, occ[1:]))
    if names is None:
        names = tuple(v.name for v in answer_vars)
    return FlattenedAnswer(tuple(answer_vars), tuple(literals), tuple(e_a), tuple(e_c), tuple(e_d), tuple(names))


def ed_redundant_free(e_d: Sequence) -> bool:
    """No link follows from the others by transitivity, i.e. the links form a forest."""
    parent: dict = {}

    def find(x):
        while parent.get(x, x) != x:
            x = parent[x]
        return x

    for a, b in e_d:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


# ---------------------------------------------------------------------------
# SQL


_DIGITS = re.compile(r"[0-9]+")


def sql_literal(value: str) -> str:
    if _DIGITS.fullmatch(value):
        return value
    return "'" + value.replace("'", "''") + "'"


@dataclass(frozen=True)
class SqlQuery:
    select: tuple  # (alias, column, output name)
    tables: tuple  # (table, alias)
    where: tuple  # (alias, column, "const", value) | (alias, column, "col", (alias2, column2))
    exists: bool = False

    def render(self) -> str:
        if self.exists:
            cols = "1"
        else:
            cols = ", ".join(f"{a}.{c} AS {n}" for a, c, n in self.select)
        text = f"SELECT {cols} FROM " + ", ".join(f"{t} AS {a}" for t, a in self.tables)
        conds = []
        for alias, col, kind, rhs in self.where:
            if kind == "const":
                conds.append(f"{alias}.{col} = {sql_literal(rhs)}")
            else:
                conds.append(f"{alias}.{col} = {rhs[0]}.{rhs[1]}")
        if conds:
            text += " WHERE " + " AND ".join(conds)
        return text


def build_query(flat: FlattenedAnswer, schema) -> SqlQuery:
    def column(i, j):
        table = schema.for_predicate(flat.literals[i - 1][0])
        return table.columns[j - 1]

    names = flat.names or tuple(v.name for v in flat.answer_vars)
    select = tuple((f"R{i}", column(i, j), names[e]) for e, (i, j) in enumerate(flat.e_a))
    tables = tuple((schema.for_predicate(p).name, f"R{i}") for i, (p, _) in enumerate(flat.literals, 1))
    where = [(f"R{i}", column(i, j), "const", c) for i, j, c in flat.e_c]
    for a, b in flat.e_d:
        # The side with the lower column position (then alias) goes left.
        left, right = sorted((a, b), key=lambda p: (p[1], p[0]))
        where.append((f"R{left[0]}", column(*left), "col", (f"R{right[0]}", column(*right))))
    return SqlQuery(select, tables, tuple(where), exists=not flat.answer_vars)


def to_sql(flat: FlattenedAnswer, schema) -> str:
    return build_query(flat, schema).render()


def render_statement(sql: str) -> str:
    return sql + ";"


def evaluate_sql(query: SqlQuery, store: FactStore, schema) -> set:
    """Evaluate a query structure by nested loops over aliased tables."""
    aliases = [a for _, a in query.tables]
    col_index = {}
    rows_per_alias = []
    for table_name, alias in query.tables:
        table = schema.table(table_name)
        for k, col in enumerate(table.columns):
            col_index[(alias, col)] = k
        rows_per_alias.append(store.rows(table.predicate))
    out = set()
    for combo in itertools.product(*rows_per_alias):
        row_of = dict(zip(aliases, combo))

        def value(alias, col):
            return row_of[alias][col_index[(alias, col)]]

        ok = True
        for alias, col, kind, rhs in query.where:
            lhs = value(alias, col)
            if (rhs if kind == "const" else value(*rhs)) != lhs:
                ok = False
                break
        if ok:
            out.add(tuple(value(a, c) for a, c, _ in query.select))
    return out


# ---------------------------------------------------------------------------
# Instantiation


@dataclass
class CompiledAnswer:
    """Everything derived from one schematic answer."""

    case: Case
    merged: Optional[Clause] = None
    core: Optional[Clause] = None
    template: Optional[AnswerTemplate] = None
    flat: Optional[FlattenedAnswer] = None
    sql: Optional[str] = None
    diagnostics: list = field(default_factory=list)


def answer_names(template: AnswerTemplate, query_names: Optional[Sequence[str]]) -> tuple:
    """Column names for the core variables.

    A core variable that stands alone at answer position e takes the e-th query
    variable's name; others get ``V<r>``.
    """
    names = []
    for r, v in enumerate(template.core_vars, 1):
        name = f"V{r}"
        if query_names:
            for e, arg in enumerate(template.args):
                if arg == v and e < len(query_names):
                    name = query_names[e]
                    break
        names.append(name)
    return tuple(names)


def compile_answer(sa, schema=None, store: Optional[FactStore] = None,
                   query_names: Optional[Sequence[str]] = None) -> CompiledAnswer:
    c = _clause(sa)
    case = classify_case(c)
    out = CompiledAnswer(case)
    if case is Case.KB_REFUTATION:
        out.diagnostics.append("knowledge base is inconsistent")
        return out
    if case is Case.KB_DB_INCONSISTENCY:
        if store is not None:
            try:
                if constraint_satisfiable(store, c.db_literals()):
                    out.diagnostics.append("database is inconsistent with the knowledge base")
            except UnsupportedConstraint:
                pass
        return out
    merged = merge_answer_literals(c)
    if merged is None:
        out.diagnostics.append("answer literals are not simultaneously unifiable; no instances")
        return out
    out.merged = merged
    if case is Case.PURE_ANSWER:
        return out
    core, template = normalize_answer(merged)
    out.core, out.template = core, template
    try:
        out.flat = flatten(core, schema, answer_names(template, query_names))
    except UnsupportedAnswer as exc:
        out.diagnostics.append(f"schematic answer is useless: {exc}")
        return out
    if schema is not None:
        out.sql = to_sql(out.flat, schema)
    return out


def instances_of_flat(store: FactStore, flat: FlattenedAnswer) -> Iterator[tuple]:
    """Core answer tuples (constant names) satisfying the flattened constraint."""
    atoms = flat.atoms()
    roots = [_root_term(atoms, flat, e) for e in range(len(flat.answer_vars))]
    project = [v for t in roots for v in t.variables()]
    for theta in solve_constraint(store, atoms, project):
        yield tuple(_term_text(substitute(t, theta)) for t in roots)


def _root_term(atoms, flat, e):
    i, j = flat.e_a[e]
    return atoms[i - 1].args[j - 1]


def iter_instances(store: FactStore, compiled: CompiledAnswer) -> Iterator[ConcreteAnswer]:
    """Concrete answers in store order, without repeats."""
    if compiled.case is Case.PURE_ANSWER and compiled.merged is not None:
        yield ConcreteAnswer.of(compiled.merged.answer_literals()[0].args)
        return
    if compiled.flat is None:
        return
    seen = set()
    for values in instances_of_flat(store, compiled.flat):
        ans = compiled.template.reconstruct(values)
        if ans not in seen:
            seen.add(ans)
            yield ans


def instantiate(store: FactStore, sa, schema=None, diagnostics: Optional[list] = None,
                compiled: Optional[CompiledAnswer] = None) -> set:
    """Concrete answers covered by a schematic answer over ``store``."""
    compiled = compiled or compile_answer(sa, schema, store)
    if diagnostics is not None:
        diagnostics.extend(compiled.diagnostics)
    return set(iter_instances(store, compiled))
