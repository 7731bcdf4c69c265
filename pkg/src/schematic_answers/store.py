"""In-memory fact store, database abstractions and conjunctive constraint solving."""

from __future__ import annotations

from typing import Iterable, Iterator, Optional, Sequence

from .terms import ABSTRACTION, Clause, Fn, Literal, Substitution, Var, const


class UnsupportedConstraint(ValueError):
    """A constraint argument is a compound term."""


class FactStore:
    """Ground atoms grouped by predicate; duplicate rows collapse."""

    def __init__(self, schema=None):
        self.schema = schema
        self._rows: dict[str, dict[tuple, None]] = {}
        self._arity: dict[str, int] = {}
        self._indexes: dict[tuple, dict] = {}
        if schema is not None:
            for table in schema:
                self._rows[table.predicate] = {}
                self._arity[table.predicate] = table.arity

    def add(self, predicate: str, values: Sequence) -> bool:
        values = tuple(v.name if isinstance(v, Fn) else str(v) for v in values)
        arity = self._arity.setdefault(predicate, len(values))
        if self.schema is not None and not self.schema.has_predicate(predicate):
            raise KeyError(f"predicate {predicate} has no table")
        if len(values) != arity:
            raise ValueError(f"{predicate} expects {arity} values, got {len(values)}")
        rows = self._rows.setdefault(predicate, {})
        if values in rows:
            return False
        rows[values] = None
        self._indexes = {k: v for k, v in self._indexes.items() if k[0] != predicate}
        return True

    def add_atom(self, lit: Literal) -> bool:
        for a in lit.args:
            if not (isinstance(a, Fn) and a.is_constant):
                raise ValueError(f"fact {lit} is not a ground flat atom")
        return self.add(lit.predicate, lit.args)

    def rows(self, predicate: str) -> list:
        return list(self._rows.get(predicate, ()))

    def contains(self, predicate: str, values: Sequence) -> bool:
        return tuple(values) in self._rows.get(predicate, {})

    @property
    def predicates(self):
        return list(self._rows)

    def atoms(self) -> Iterator[Literal]:
        for pred, rows in self._rows.items():
            for row in rows:
                yield Literal(True, pred, tuple(const(v) for v in row))

    def active_domain(self) -> list:
        seen = {}
        for rows in self._rows.values():
            for row in rows:
                seen.update(dict.fromkeys(row))
        return list(seen)

    def __len__(self):
        return sum(len(r) for r in self._rows.values())

    def copy(self) -> "FactStore":
        other = FactStore(self.schema)
        for pred, rows in self._rows.items():
            other._rows[pred] = dict(rows)
            other._arity[pred] = self._arity[pred]
        return other

    def _lookup(self, predicate: str, positions: tuple, key: tuple) -> list:
        if not positions:
            return list(self._rows.get(predicate, ()))
        idx = self._indexes.get((predicate, positions))
        if idx is None:
            idx = {}
            for row in self._rows.get(predicate, ()):
                idx.setdefault(tuple(row[p] for p in positions), []).append(row)
            self._indexes[(predicate, positions)] = idx
        return idx.get(key, [])


# ---------------------------------------------------------------------------
# Abstractions


def abstraction_clause(predicate: str, args: Sequence) -> Clause:
    lit = Literal(True, predicate, tuple(args))
    return Clause((lit,), (lit,), ABSTRACTION)


def build_abstraction(schema) -> list[Clause]:
    """One ``p(X1..Xk) | p(X1..Xk)`` clause per table."""
    return [
        abstraction_clause(t.predicate, [Var(f"X{j}") for j in range(1, t.arity + 1)])
        for t in schema
    ]


def refine_abstraction(schema, predicate: str, column, values: Sequence) -> list[Clause]:
    """Specialise the predicate's abstraction by fixing one column to each value.

    ``column`` is a 1-based position or a column name.
    """
    if not values:
        raise ValueError("refinement needs at least one value")
    if not schema.has_predicate(predicate):
        raise KeyError(f"unknown predicate {predicate}")
    table = schema.for_predicate(predicate)
    if isinstance(column, str):
        if column not in table.columns:
            raise KeyError(f"table {table.name} has no column {column}")
        pos = table.columns.index(column)
    else:
        if not 1 <= column <= table.arity:
            raise KeyError(f"column {column} out of range for {table.name}")
        pos = column - 1
    out = []
    for value in dict.fromkeys(values):
        args = [Var(f"X{j}") for j in range(1, table.arity + 1)]
        args[pos] = value if isinstance(value, Fn) else const(str(value))
        out.append(abstraction_clause(predicate, args))
    return out


def replace_abstraction(abstractions: Iterable[Clause], predicate: str, refined: Iterable[Clause]) -> list[Clause]:
    kept = [c for c in abstractions if c.literals[0].predicate != predicate]
    return kept + list(refined)


def covers(abstractions: Iterable[Clause], store: FactStore) -> bool:
    """Every stored fact is an instance of some abstraction clause."""
    from .terms import match_literal

    abstractions = list(abstractions)
    for fact in store.atoms():
        if not any(match_literal(c.literals[0], fact, {}) is not None for c in abstractions):
            return False
    return True


# ---------------------------------------------------------------------------
# Constraint solving


def _check_flat(literals: Sequence[Literal]) -> None:
    for lit in literals:
        for a in lit.args:
            if isinstance(a, Fn) and a.args:
                raise UnsupportedConstraint(f"compound term {a} in constraint literal {lit}")


def _solutions(store: FactStore, literals: Sequence[Literal], i: int, binding: dict,
               needed: Optional[frozenset] = None) -> Iterator[dict]:
    if i == len(literals):
        yield binding
        return
    if needed is not None and needed.issubset(binding):
        # Only existence of the rest matters for the projection.
        for _ in _solutions(store, literals, i, binding):
            yield binding
            return
        return
    lit = literals[i]
    positions, key = [], []
    free: dict[Var, list] = {}
    for p, a in enumerate(lit.args):
        if isinstance(a, Var):
            if a in binding:
                positions.append(p)
                key.append(binding[a])
            else:
                free.setdefault(a, []).append(p)
        else:
            positions.append(p)
            key.append(a.name)
    for row in store._lookup(lit.predicate, tuple(positions), tuple(key)):
        ext = dict(binding)
        ok = True
        for v, ps in free.items():
            val = row[ps[0]]
            if any(row[q] != val for q in ps[1:]):
                ok = False
                break
            ext[v] = val
        if ok:
            yield from _solutions(store, literals, i + 1, ext, needed)


def solve_constraint(store: FactStore, literals: Sequence[Literal],
                     project: Optional[Sequence[Var]] = None) -> Iterator[Substitution]:
    """Enumerate the substitutions putting every atom into the store.

    With ``project``, substitutions cover only those variables and each distinct
    projection is produced once.  Raises UnsupportedConstraint up front when an
    argument is a compound term.
    """
    literals = list(literals)
    _check_flat(literals)
    return _enumerate(store, literals, project)


def _enumerate(store, literals, project=None):
    if project is None:
        order = list(dict.fromkeys(v for lit in literals for v in lit.variables()))
        needed = None
    else:
        order = list(dict.fromkeys(project))
        needed = frozenset(order)
    seen = set()
    for binding in _solutions(store, literals, 0, {}, needed):
        key = tuple(binding[v] for v in order)
        if key in seen:
            continue
        seen.add(key)
        yield Substitution({v: const(binding[v]) for v in order})


def constraint_satisfiable(store: FactStore, literals: Sequence[Literal]) -> bool:
    for _ in solve_constraint(store, literals, project=()):
        return True
    return False
