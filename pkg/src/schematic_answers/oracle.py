"""Brute-force ground reasoner used to check the prover's answers.

This module deliberately avoids the prover's unification, subsumption and
constraint-solving code.  It only reads the clause data types.

Ground terms are encoded as plain Python values: a constant is its name, a
compound term is ``(functor, arg, ...)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .terms import Clause, Var


class UnsupportedFragment(ValueError):
    pass


@dataclass(frozen=True)
class GroundAnswerSet:
    answers: frozenset
    exact: bool

    def __len__(self):
        return len(self.answers)

    def __contains__(self, item):
        return item in self.answers


# Literals inside the oracle: (positive, predicate, args) with args built from
# ("?", name) for variables, str for constants, tuples for compounds.

def _encode(t):
    if isinstance(t, Var):
        return ("?", t.name)
    if not t.args:
        return t.name
    return (t.name,) + tuple(_encode(a) for a in t.args)


def _is_var(t) -> bool:
    return isinstance(t, tuple) and len(t) == 2 and t[0] == "?"


def _lit(lit):
    return (lit.positive, lit.predicate, tuple(_encode(a) for a in lit.args))


def _vars_of(t, out):
    if _is_var(t):
        out.append(t)
    elif isinstance(t, tuple):
        for a in t[1:]:
            _vars_of(a, out)
    return out


def _depth(t) -> int:
    if isinstance(t, str):
        return 0
    return 1 + max((_depth(a) for a in t[1:]), default=0)


def _ground(t, env):
    if _is_var(t):
        return env[t]
    if isinstance(t, str):
        return t
    return (t[0],) + tuple(_ground(a, env) for a in t[1:])


def _partial(t, env):
    if _is_var(t):
        return env.get(t, t)
    if isinstance(t, str):
        return t
    return (t[0],) + tuple(_partial(a, env) for a in t[1:])


def _bind(pattern, value, env) -> Optional[dict]:
    if _is_var(pattern):
        if pattern in env:
            return env if env[pattern] == value else None
        env = dict(env)
        env[pattern] = value
        return env
    if isinstance(pattern, str) or isinstance(value, str):
        return env if pattern == value else None
    if pattern[0] != value[0] or len(pattern) != len(value):
        return None
    for p, v in zip(pattern[1:], value[1:]):
        env = _bind(p, v, env)
        if env is None:
            return None
    return env


def _has_functions(t) -> bool:
    return isinstance(t, tuple) and not _is_var(t)


def _constants(t, out):
    if isinstance(t, str):
        out.add(t)
    elif not _is_var(t):
        for a in t[1:]:
            _constants(a, out)


# ---------------------------------------------------------------------------


def _join(body, facts, env=None):
    """All environments making every body atom a known fact."""
    envs = [env or {}]
    for _, pred, args in body:
        nxt = []
        rows = facts.get(pred, ())
        for e in envs:
            for row in rows:
                e2 = e
                for p, v in zip(args, row):
                    e2 = _bind(p, v, e2)
                    if e2 is None:
                        break
                if e2 is not None:
                    nxt.append(e2)
        envs = nxt
        if not envs:
            break
    return envs


def _forward_chain(facts: dict, rules: list, depth_bound: int) -> bool:
    """Semi-naive fixpoint; returns False when facts were cut by the depth bound."""
    exact = True
    for head, body in rules:
        if not body:  # ground facts of the knowledge base
            row = tuple(_ground(a, {}) for a in head[2])
            if any(_depth(v) > depth_bound for v in row):
                exact = False
            else:
                facts.setdefault(head[1], set()).add(row)
    delta = {p: set(rows) for p, rows in facts.items()}
    while any(delta.values()):
        new: dict = {}
        for head, body in rules:
            for k in range(len(body)):
                first = [body[k]]
                rest = body[:k] + body[k + 1:]
                for env in _join(first, delta):
                    for env2 in _join(rest, facts, env):
                        row = tuple(_ground(a, env2) for a in head[2])
                        if any(_depth(v) > depth_bound for v in row):
                            exact = False
                            continue
                        if row not in facts.get(head[1], ()):
                            new.setdefault(head[1], set()).add(row)
        for p, rows in new.items():
            facts.setdefault(p, set()).update(rows)
        delta = new
    return exact


def _horn_answers(facts, kb, goal, distinguished, domain, depth_bound):
    rules, constraints = [], []
    for c in kb:
        pos = [l for l in c if l[0]]
        negs = [l for l in c if not l[0]]
        if pos:
            rules.append((pos[0], negs))
        else:
            constraints.append(negs)
    for head, body in rules:
        bound = set(v for l in body for a in l[2] for v in _vars_of(a, []))
        if any(v not in bound for a in head[2] for v in _vars_of(a, [])):
            raise UnsupportedFragment("rule is not range-restricted")
    exact = _forward_chain(facts, rules, depth_bound)
    candidates = set(itertools.product(domain, repeat=len(distinguished)))
    if any(_join(body, facts) for body in constraints):
        return candidates, exact
    body = [(True, p, a) for _, p, a in goal]
    out = set()
    for env in _join(body, facts):
        t = tuple(env[("?", v)] for v in distinguished)
        if t in candidates:
            out.add(t)
    return out, exact


def _dpll(clauses: list) -> bool:
    """Satisfiability of propositional clauses over signed integers."""
    clauses = [set(c) for c in clauses]

    def simplify(cls, lit):
        out = []
        for c in cls:
            if lit in c:
                continue
            if -lit in c:
                c = c - {-lit}
                if not c:
                    return None
            out.append(c)
        return out

    def solve(cls):
        while True:
            unit = next((c for c in cls if len(c) == 1), None)
            if unit is None:
                break
            lit = next(iter(unit))
            cls = simplify(cls, lit)
            if cls is None:
                return False
        if not cls:
            return True
        lit = next(iter(cls[0]))
        for choice in (lit, -lit):
            reduced = simplify(cls, choice)
            if reduced is not None and solve(reduced):
                return True
        return False

    return solve(clauses)


def _ground_answers(facts, kb, goal, distinguished, domain):
    atoms: dict = {}

    def aid(pred, row):
        return atoms.setdefault((pred, row), len(atoms) + 1)

    def instances(clause):
        vs = list(dict.fromkeys(v for l in clause for a in l[2] for v in _vars_of(a, [])))
        for combo in itertools.product(domain, repeat=len(vs)):
            env = dict(zip(vs, combo))
            yield [(aid(p, tuple(_ground(a, env) for a in args)) * (1 if pos else -1)) for pos, p, args in clause]

    base = [[aid(p, row)] for p, rows in facts.items() for row in rows]
    for c in kb:
        base.extend(instances(c))
    out = set()
    for t in itertools.product(domain, repeat=len(distinguished)):
        env = {("?", v): c for v, c in zip(distinguished, t)}
        inst = [(pos, p, tuple(_partial(a, env) for a in args)) for pos, p, args in goal]
        extra = list(instances(inst))
        if not _dpll(base + extra):
            out.add(t)
    return out


def ground_answers(store, kb: Iterable[Clause], query, depth_bound: int = 2) -> GroundAnswerSet:
    """Concrete answers over the active domain, decided by ground reasoning."""
    kb = [[_lit(l) for l in c.literals] for c in kb]
    goal = [_lit(l) for l in query.goal.literals]
    distinguished = [v.name for v in query.distinguished]
    facts = {p: set(store.rows(p)) for p in store.predicates}
    consts = set(store.active_domain())
    functional = False
    for c in kb + [goal]:
        for _, _, args in c:
            for a in args:
                _constants(a, consts)
                if _has_functions(a):
                    functional = True
    domain = sorted(consts)
    horn = all(sum(1 for l in c if l[0]) <= 1 for c in kb) and all(not l[0] for l in goal)
    if horn:
        try:
            answers, exact = _horn_answers(facts, kb, goal, distinguished, domain, depth_bound)
            return GroundAnswerSet(frozenset(answers), exact)
        except UnsupportedFragment:
            if functional:
                raise
    if functional:
        raise UnsupportedFragment("non-Horn knowledge bases must be function-free")
    answers = _ground_answers(facts, kb, goal, distinguished, domain)
    return GroundAnswerSet(frozenset(answers), True)

