"""Terms, literals, clauses with recording literals, unification and subsumption."""

from __future__ import annotations

import enum
import itertools
import re
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

ANSWER = "@"


class ArityError(ValueError):
    pass


class SymbolKind(enum.Enum):
    ORDINARY = "ordinary"
    DB = "db-predicate"
    ANSWER = "answer-predicate"


class SymbolTable:
    """Append-only registry of predicate and function symbols.

    Declaration order doubles as the default precedence for the term ordering.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._predicates: dict[str, tuple[int, SymbolKind]] = {}
        self._functions: dict[str, int] = {}
        self._order: dict[str, int] = {}

    def _note(self, name):
        if name not in self._order:
            self._order[name] = len(self._order)

    def declare_predicate(self, name: str, arity: int, kind: SymbolKind = SymbolKind.ORDINARY) -> None:
        with self._lock:
            old = self._predicates.get(name)
            if old is not None:
                if old[0] != arity:
                    raise ArityError(f"predicate {name} declared with arity {old[0]}, used with {arity}")
                if kind is not SymbolKind.ORDINARY and old[1] is SymbolKind.ORDINARY:
                    self._predicates[name] = (arity, kind)
                return
            if kind is SymbolKind.ANSWER:
                for other, (_, k) in self._predicates.items():
                    if k is SymbolKind.ANSWER:
                        raise ValueError(f"answer predicate already declared as {other}")
            self._predicates[name] = (arity, kind)
            self._note(name)

    def declare_function(self, name: str, arity: int) -> None:
        with self._lock:
            old = self._functions.get(name)
            if old is not None:
                if old != arity:
                    raise ArityError(f"function {name} declared with arity {old}, used with {arity}")
                return
            self._functions[name] = arity
            self._note(name)

    def predicate_arity(self, name: str) -> Optional[int]:
        entry = self._predicates.get(name)
        return None if entry is None else entry[0]

    def kind(self, name: str) -> SymbolKind:
        return self._predicates[name][1]

    def is_db(self, name: str) -> bool:
        entry = self._predicates.get(name)
        return entry is not None and entry[1] is SymbolKind.DB

    def precedence(self, name: str) -> int:
        """Earlier declarations rank higher; unknown symbols rank lowest."""
        return -self._order.get(name, len(self._order))

    def predicates(self):
        return dict(self._predicates)

    def functions(self):
        return dict(self._functions)

    def register_clause(self, clause: "Clause") -> None:
        for lit in itertools.chain(clause.literals, clause.recording):
            if lit.predicate == ANSWER:
                self.declare_predicate(ANSWER, len(lit.args), SymbolKind.ANSWER)
            else:
                self.declare_predicate(lit.predicate, len(lit.args))
            for arg in lit.args:
                for sub in arg.subterms():
                    if isinstance(sub, Fn):
                        self.declare_function(sub.name, len(sub.args))


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def subterms(self):
        yield self

    def variables(self):
        yield self

    @property
    def is_ground(self):
        return False

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Fn:
    """Compound term; constants are zero-argument compounds."""

    name: str
    args: tuple = ()

    def subterms(self):
        yield self
        for a in self.args:
            yield from a.subterms()

    def variables(self):
        for a in self.args:
            yield from a.variables()

    @property
    def is_ground(self):
        return all(a.is_ground for a in self.args)

    @property
    def is_constant(self):
        return not self.args

    def __str__(self):
        name = _quote_symbol(self.name)
        if not self.args:
            return name
        return f"{name}({','.join(str(a) for a in self.args)})"


Term = Var | Fn


def const(name: str) -> Fn:
    return Fn(name, ())


_PLAIN_SYMBOL = re.compile(r"[a-z0-9][A-Za-z0-9_:]*[A-Za-z0-9_]|[a-z0-9]")


def _quote_symbol(name: str) -> str:
    if _PLAIN_SYMBOL.fullmatch(name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def term_size(t: Term) -> int:
    if isinstance(t, Var):
        return 1
    return 1 + sum(term_size(a) for a in t.args)


def occurs(v: Var, t: Term, subst: Mapping[Var, Term] = None) -> bool:
    if isinstance(t, Var):
        if t == v:
            return True
        if subst is not None and t in subst:
            return occurs(v, subst[t], subst)
        return False
    return any(occurs(v, a, subst) for a in t.args)


# ---------------------------------------------------------------------------
# Literals and clauses


@dataclass(frozen=True, slots=True)
class Literal:
    positive: bool
    predicate: str
    args: tuple = ()

    @property
    def atom(self) -> "Literal":
        return self if self.positive else Literal(True, self.predicate, self.args)

    def negate(self) -> "Literal":
        return Literal(not self.positive, self.predicate, self.args)

    def variables(self):
        for a in self.args:
            yield from a.variables()

    @property
    def is_ground(self):
        return all(a.is_ground for a in self.args)

    def __str__(self):
        sign = "" if self.positive else "~"
        name = self.predicate if self.predicate == ANSWER else _quote_symbol(self.predicate)
        if not self.args and self.predicate != ANSWER:
            return sign + name
        return f"{sign}{name}({','.join(str(a) for a in self.args)})"


def atom(predicate: str, *args: Term) -> Literal:
    return Literal(True, predicate, tuple(args))


def neg(predicate: str, *args: Term) -> Literal:
    return Literal(False, predicate, tuple(args))


def literal_size(lit: Literal) -> int:
    return 1 + sum(term_size(a) for a in lit.args)


@dataclass(frozen=True)
class Origin:
    kind: str  # kb | goal | abstraction | derived
    premises: tuple = ()
    rule: Optional[str] = None
    tags: frozenset = frozenset()  # document ids for indexed abstractions


KB = Origin("kb")
GOAL = Origin("goal")
ABSTRACTION = Origin("abstraction")


@dataclass(frozen=True)
class Clause:
    """``C | gamma``: ordinary literals plus a multiset of recording literals.

    ``prefs`` holds (term, prefix) URI-prefix constraints; they only take part in
    compatibility pruning and subsumption.
    """

    literals: tuple = ()
    recording: tuple = ()
    origin: Origin = field(default=KB, compare=False)
    prefs: tuple = ()

    def __post_init__(self):
        for lit in self.literals:
            if lit.predicate == ANSWER:
                raise ValueError("answer predicate may not occur in the ordinary part")
        for lit in self.recording:
            if (lit.predicate == ANSWER) == lit.positive:
                raise ValueError(f"bad recording literal {lit}")

    @property
    def is_empty(self) -> bool:
        return not self.literals

    def variables(self) -> list:
        seen = dict.fromkeys(
            v
            for lit in itertools.chain(self.literals, self.recording)
            for v in lit.variables()
        )
        for t, _ in self.prefs:
            seen.update(dict.fromkeys(t.variables()))
        return list(seen)

    def answer_literals(self) -> list:
        return [l for l in self.recording if l.predicate == ANSWER]

    def db_literals(self) -> list:
        return [l for l in self.recording if l.predicate != ANSWER]

    def weight(self) -> int:
        return sum(literal_size(l) for l in self.literals) + sum(literal_size(l) for l in self.recording)

    def is_tautology(self) -> bool:
        pos = {l.atom for l in self.literals if l.positive}
        return any(not l.positive and l.atom in pos for l in self.literals)

    def with_origin(self, origin: Origin) -> "Clause":
        return Clause(self.literals, self.recording, origin, self.prefs)

    def __str__(self):
        body = " | ".join(str(l) for l in self.literals) if self.literals else "[]"
        rec = [str(l) for l in self.recording]
        rec += [f'pref({t},"{p}")' for t, p in self.prefs]
        if not rec:
            return body
        return f"{body} || {', '.join(rec)}"


# ---------------------------------------------------------------------------
# Substitutions


class Substitution(dict):
    """Idempotent map from variables to terms."""

    def __call__(self, t: Term) -> Term:
        return substitute(t, self)

    def __repr__(self):
        inner = ", ".join(f"{k}->{v}" for k, v in self.items())
        return "{" + inner + "}"


def substitute(t: Term, theta: Mapping[Var, Term]) -> Term:
    if isinstance(t, Var):
        return theta.get(t, t)
    if not t.args:
        return t
    return Fn(t.name, tuple(substitute(a, theta) for a in t.args))


def apply_literal(theta: Mapping[Var, Term], lit: Literal) -> Literal:
    if not theta:
        return lit
    return Literal(lit.positive, lit.predicate, tuple(substitute(a, theta) for a in lit.args))


def apply(theta: Mapping[Var, Term], clause: Clause) -> Clause:
    """Instantiate both the ordinary and the recording part of ``clause``."""
    if not theta:
        return clause
    return Clause(
        tuple(apply_literal(theta, l) for l in clause.literals),
        tuple(apply_literal(theta, l) for l in clause.recording),
        clause.origin,
        tuple((substitute(t, theta), p) for t, p in clause.prefs),
    )


def _resolve(t: Term, subst: dict) -> Term:
    while isinstance(t, Var) and t in subst:
        t = subst[t]
    return t


def _unify_into(a: Term, b: Term, subst: dict) -> bool:
    stack = [(a, b)]
    while stack:
        s, t = stack.pop()
        s = _resolve(s, subst)
        t = _resolve(t, subst)
        if s == t:
            continue
        if isinstance(s, Var):
            if occurs(s, t, subst):
                return False
            subst[s] = t
        elif isinstance(t, Var):
            if occurs(t, s, subst):
                return False
            subst[t] = s
        else:
            if s.name != t.name or len(s.args) != len(t.args):
                return False
            stack.extend(zip(reversed(s.args), reversed(t.args)))
    return True


def _solved(subst: dict) -> Substitution:
    out = Substitution()
    for v in subst:
        out[v] = _fully(subst[v], subst)
    return out


def _fully(t: Term, subst: dict) -> Term:
    t = _resolve(t, subst)
    if isinstance(t, Var) or not t.args:
        return t
    return Fn(t.name, tuple(_fully(a, subst) for a in t.args))


def unify_terms(a: Term, b: Term, theta: Mapping[Var, Term] = None) -> Optional[Substitution]:
    subst = dict(theta or {})
    if not _unify_into(a, b, subst):
        return None
    return _solved(subst)


def unify(a: Literal, b: Literal, theta: Mapping[Var, Term] = None) -> Optional[Substitution]:
    """Most general unifier of two atoms (polarity ignored), or None.

    A variable-variable pair binds the variable from ``a``.
    """
    if a.predicate != b.predicate or len(a.args) != len(b.args):
        return None
    subst = dict(theta or {})
    for s, t in zip(a.args, b.args):
        if not _unify_into(s, t, subst):
            return None
    return _solved(subst)


def simultaneous_mgu(atoms: Sequence[Literal]) -> Optional[Substitution]:
    if not atoms:
        raise ValueError("simultaneous_mgu needs at least one atom")
    first = atoms[0]
    subst: dict = {}
    for other in atoms[1:]:
        if other.predicate != first.predicate or len(other.args) != len(first.args):
            return None
        for s, t in zip(first.args, other.args):
            if not _unify_into(s, t, subst):
                return None
    return _solved(subst)


def match_term(pattern: Term, target: Term, theta: dict) -> bool:
    """One-way matching; binds only pattern variables. Mutates ``theta``."""
    if isinstance(pattern, Var):
        bound = theta.get(pattern)
        if bound is None:
            theta[pattern] = target
            return True
        return bound == target
    if isinstance(target, Var) or pattern.name != target.name or len(pattern.args) != len(target.args):
        return False
    return all(match_term(p, t, theta) for p, t in zip(pattern.args, target.args))


def match_literal(pattern: Literal, target: Literal, theta: dict) -> Optional[dict]:
    if (pattern.positive != target.positive or pattern.predicate != target.predicate
            or len(pattern.args) != len(target.args)):
        return None
    trial = dict(theta)
    for p, t in zip(pattern.args, target.args):
        if not match_term(p, t, trial):
            return None
    return trial


# ---------------------------------------------------------------------------
# Renaming and variants


_fresh_counter = itertools.count()


def fresh_var(prefix: str = "_G") -> Var:
    return Var(f"{prefix}{next(_fresh_counter)}")


def rename(clause: Clause, prefix: str) -> tuple[Clause, Substitution]:
    theta = Substitution({v: Var(f"{prefix}{i}") for i, v in enumerate(clause.variables())})
    return apply(theta, clause), theta


def canonical(clause: Clause) -> Clause:
    """Rename variables to ``_0, _1, ...`` in order of first occurrence."""
    renamed, _ = rename(clause, "_")
    return renamed


def variant_key(clause: Clause) -> tuple:
    c = canonical(clause)
    return (
        tuple(sorted(map(str, c.literals))),
        tuple(sorted(map(str, c.recording))),
        tuple(sorted(f"{t}:{p}" for t, p in c.prefs)),
    )


# ---------------------------------------------------------------------------
# Subsumption


def _match_part(pattern: tuple, target: tuple, theta: dict) -> Optional[dict]:
    """Match ``(part, literal)`` pairs; literals only match within the same part."""
    if pattern[0] != target[0]:
        return None
    return match_literal(pattern[1], target[1], theta)


def _multiset_match(patterns: list, targets: list, theta: dict) -> Iterator[dict]:
    """Injective matchings of ``(part, literal)`` patterns into targets extending ``theta``.

    Always expands the pattern with the fewest viable targets and backtracks as
    soon as some pattern has none left.
    """
    if not patterns:
        yield theta
        return
    candidates = []
    for p in patterns:
        cands = [j for j, t in enumerate(targets) if _match_part(p, t, theta) is not None]
        if not cands:
            return
        candidates.append(cands)
    yield from _search(patterns, targets, candidates, list(range(len(patterns))), set(), theta)


def _search(patterns, targets, candidates, todo, used, theta):
    if not todo:
        yield theta
        return
    best, best_ext = None, None
    for i in todo:
        ext = []
        seen = set()
        for j in candidates[i]:
            if j in used or targets[j] in seen:
                continue
            seen.add(targets[j])
            m = _match_part(patterns[i], targets[j], theta)
            if m is not None:
                ext.append((j, m))
        if not ext:
            return
        if best_ext is None or len(ext) < len(best_ext):
            best, best_ext = i, ext
            if len(ext) == 1:
                break
    rest = [i for i in todo if i != best]
    for j, m in best_ext:
        used.add(j)
        yield from _search(patterns, targets, candidates, rest, used, m)
        used.discard(j)


def subsumes(c1: Clause, c2: Clause) -> bool:
    """True iff some theta maps C1 and gamma1 into submultisets of C2 and gamma2."""
    if len(c1.literals) > len(c2.literals) or len(c1.recording) > len(c2.recording):
        return False
    if not _fits(signature(c1), signature(c2)):
        return False
    # Matching only binds c1's variables, so shared names need no renaming.
    patterns = [(0, l) for l in c1.literals] + [(1, l) for l in c1.recording]
    targets = [(0, l) for l in c2.literals] + [(1, l) for l in c2.recording]
    c2_prefs = set(c2.prefs)
    for theta in _multiset_match(patterns, targets, {}):
        if all((substitute(t, theta), p) in c2_prefs for t, p in c1.prefs):
            return True
    return False


def signature(clause: Clause) -> Counter:
    """Literal counts per (part, sign, predicate); a subsumer's counts never exceed its instance's."""
    sig = Counter((0, l.positive, l.predicate) for l in clause.literals)
    sig.update((1, l.positive, l.predicate) for l in clause.recording)
    return sig


def _fits(small: Counter, big: Counter) -> bool:
    return all(big[k] >= n for k, n in small.items())


class SubsumptionIndex:
    """Clauses bucketed by :func:`signature` so lookups skip whole buckets."""

    def __init__(self):
        self._buckets: dict[frozenset, dict[int, Clause]] = {}
        self._sigs: dict[frozenset, Counter] = {}
        self._key_of: dict[int, frozenset] = {}

    def __len__(self):
        return len(self._key_of)

    def __contains__(self, cid):
        return cid in self._key_of

    def add(self, cid: int, clause: Clause) -> None:
        sig = signature(clause)
        key = frozenset(sig.items())
        self._sigs.setdefault(key, sig)
        self._buckets.setdefault(key, {})[cid] = clause
        self._key_of[cid] = key

    def discard(self, cid: int) -> None:
        key = self._key_of.pop(cid, None)
        if key is not None:
            bucket = self._buckets[key]
            del bucket[cid]
            if not bucket:
                del self._buckets[key], self._sigs[key]

    def generalizations(self, clause: Clause) -> Iterator[tuple[int, Clause]]:
        """Stored clauses that may subsume ``clause``."""
        sig = signature(clause)
        for key, bucket in list(self._buckets.items()):
            if _fits(self._sigs[key], sig):
                yield from list(bucket.items())

    def instances(self, clause: Clause) -> Iterator[tuple[int, Clause]]:
        """Stored clauses that ``clause`` may subsume."""
        sig = signature(clause)
        for key, bucket in list(self._buckets.items()):
            if _fits(sig, self._sigs[key]):
                yield from list(bucket.items())


def variant(c1: Clause, c2: Clause) -> bool:
    return subsumes(c1, c2) and subsumes(c2, c1)


def multiset(literals: Iterable[Literal]) -> Counter:
    return Counter(literals)
