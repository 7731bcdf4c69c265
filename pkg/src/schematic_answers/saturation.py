"""Given-clause saturation over database abstractions with recording literals."""

from __future__ import annotations

import enum
import heapq
import itertools
import logging
import time
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .docindex import pref_compatible
from .ordering import KBO, Calculus, eligible_literals
from .store import FactStore, UnsupportedConstraint, constraint_satisfiable
from .terms import (
    Clause, Origin, Substitution, SubsumptionIndex, SymbolTable, apply_literal, canonical, rename, simultaneous_mgu, subsumes, substitute, unify, variant_key,
)

log = logging.getLogger(__name__)


class Verdict(str, enum.Enum):
    KEEP = "keep"
    DB_UNSAT = "db-constraint-unsat"
    ANSWERS_UNUNIFIABLE = "answer-literals-ununifiable"
    PREF_INCOMPATIBLE = "pref-incompatible"


class Status(str, enum.Enum):
    RUNNING = "running"
    SATURATED = "saturated"
    BUDGET_EXHAUSTED = "budget-exhausted"


@dataclass
class SaturationConfig:
    calculus: Calculus = Calculus.UNORDERED
    prune_db: bool = True
    prune_answers: bool = True
    prune_prefs: bool = True
    subsumption: bool = True
    max_derived: int = 100_000
    max_clauses: int = 200_000
    timeout: float = 60.0
    max_answers: Optional[int] = None
    # db-literal checks are skipped for clauses with more db recording literals
    prune_threshold: int = 8

    def __post_init__(self):
        self.calculus = Calculus(self.calculus)


@dataclass(frozen=True)
class Inference:
    conclusion: int
    rule: str
    premises: tuple  # ids
    renamed: tuple  # premises as used, after renaming apart
    unifier: Substitution
    recording: tuple  # conclusion's recording part before duplicate merging


@dataclass(frozen=True)
class SchematicAnswer:
    clause: Clause
    derivation_id: int
    abstraction_ids: frozenset = frozenset()

    @property
    def recording(self):
        return self.clause.recording

    def __str__(self):
        return str(self.clause)


@dataclass
class Problem:
    abstractions: list
    kb: list
    goal: Clause
    query: object = None  # DeductiveQuery, when parsed from text

    def clauses(self):
        return list(self.abstractions) + list(self.kb) + [self.goal]


def merge_recording_duplicates(clause: Clause) -> Clause:
    """Collapse syntactically identical recording literals."""
    rec = tuple(dict.fromkeys(clause.recording))
    prefs = tuple(dict.fromkeys(clause.prefs))
    if len(rec) == len(clause.recording) and len(prefs) == len(clause.prefs):
        return clause
    return Clause(clause.literals, rec, clause.origin, prefs)


def resolve(c1: Clause, pos1: int, c2: Clause, pos2: int,
            eligible1: Optional[set] = None, eligible2: Optional[set] = None):
    """Binary resolution on a positive literal of ``c1`` and a negative one of ``c2``.

    Premises must already be renamed apart.  Returns ``(conclusion, theta)`` or
    None.  The conclusion's recording part is the instantiated multiset union.
    """
    l1, l2 = c1.literals[pos1], c2.literals[pos2]
    if not l1.positive or l2.positive or l1.predicate != l2.predicate:
        return None
    if eligible1 is not None and pos1 not in eligible1 or eligible2 is not None and pos2 not in eligible2:
        return None
    theta = unify(l1, l2)
    if theta is None:
        return None
    lits = tuple(apply_literal(theta, l) for i, l in enumerate(c1.literals) if i != pos1) + \
        tuple(apply_literal(theta, l) for i, l in enumerate(c2.literals) if i != pos2)
    rec = tuple(apply_literal(theta, l) for l in c1.recording) + \
        tuple(apply_literal(theta, l) for l in c2.recording)
    prefs = tuple((substitute(t, theta), p) for t, p in c1.prefs + c2.prefs)
    return Clause(lits, rec, Origin("derived", rule="resolution"), prefs), theta


def factor(clause: Clause, i: int, j: int, eligible: Optional[set] = None):
    """Merge two unifiable ordinary literals of the same sign."""
    if i == j:
        return None
    a, b = clause.literals[i], clause.literals[j]
    if a.positive != b.positive or a.predicate != b.predicate:
        return None
    if eligible is not None and (i not in eligible or j not in eligible):
        return None
    theta = unify(a, b)
    if theta is None:
        return None
    lits = tuple(apply_literal(theta, l) for k, l in enumerate(clause.literals) if k != j)
    rec = tuple(apply_literal(theta, l) for l in clause.recording)
    prefs = tuple((substitute(t, theta), p) for t, p in clause.prefs)
    return Clause(lits, rec, Origin("derived", rule="factoring"), prefs), theta


def prune(clause: Clause, store: Optional[FactStore], options: SaturationConfig,
          cache: Optional[dict] = None) -> Verdict:
    """Decide whether a clause can only lead to schematic answers without instances."""
    theta: dict = {}
    answers = clause.answer_literals()
    if options.prune_answers and len(answers) > 1:
        mgu = simultaneous_mgu([l.atom for l in answers])
        if mgu is None:
            return Verdict.ANSWERS_UNUNIFIABLE
        theta = mgu
    if options.prune_prefs and clause.prefs:
        if not pref_compatible([(substitute(t, theta), p) for t, p in clause.prefs]):
            return Verdict.PREF_INCOMPATIBLE
    if options.prune_db and store is not None:
        # literals over predicates the store does not hold (document vocabularies) constrain nothing
        tables = set(store.predicates)
        db = [apply_literal(theta, l) for l in clause.db_literals() if l.predicate in tables]
        if db and len(db) <= options.prune_threshold:
            key = None
            if cache is not None:
                key = variant_key(Clause((), tuple(db)))
                if key in cache:
                    return cache[key]
            try:
                verdict = Verdict.KEEP if constraint_satisfiable(store, db) else Verdict.DB_UNSAT
            except UnsupportedConstraint:
                verdict = Verdict.KEEP
            if cache is not None:
                cache[key] = verdict
            return verdict
    return Verdict.KEEP


def _protected(clause: Clause) -> bool:
    return clause.origin.kind == "abstraction"


class Saturator:
    """Given-clause loop that streams schematic answers as they are derived.

    Iterate :meth:`run`; afterwards ``status`` and ``stats`` describe the run.
    """

    def __init__(self, clauses: Iterable[Clause], store: Optional[FactStore] = None,
                 config: Optional[SaturationConfig] = None, symbols: Optional[SymbolTable] = None,
                 precedence=None):
        self.config = config or SaturationConfig()
        self.store = store
        self.symbols = symbols or SymbolTable()
        self.ordering = KBO(self.symbols, precedence)
        self.clauses: dict[int, Clause] = {}
        self.inferences: dict[int, Inference] = {}
        self.leaves: dict[int, frozenset] = {}
        self.status = Status.RUNNING
        self.stats = Counter()
        self.answers: list[SchematicAnswer] = []
        self._ids = itertools.count(1)
        self._passive: list = []
        self._passive_ids: set = set()
        self._active: dict[int, Clause] = {}
        self._answer_clauses: dict[int, Clause] = {}
        self._live = SubsumptionIndex()  # answers, active and passive clauses
        self._eligible: dict[int, set] = {}
        self._prune_cache: dict = {}
        self._abstraction_keys: dict = {}
        self._inputs = list(clauses)
        for c in self._inputs:
            self.symbols.register_clause(c)

    # -- bookkeeping -------------------------------------------------------

    def _register(self, clause: Clause, inference: Optional[dict] = None) -> int:
        cid = next(self._ids)
        if inference is not None:
            origin = Origin("derived", inference["premises"], inference["rule"])
            clause = clause.with_origin(origin)
            self.inferences[cid] = Inference(cid, **inference)
            self.leaves[cid] = frozenset().union(*(self.leaves[p] for p in inference["premises"]))
        else:
            self.leaves[cid] = frozenset({cid}) if clause.origin.kind == "abstraction" else frozenset()
        self.clauses[cid] = clause
        return cid

    def _subsumed(self, clause: Clause) -> bool:
        if not self.config.subsumption:
            return False
        return any(subsumes(other, clause) for _, other in self._live.generalizations(clause))

    def _backward(self, clause: Clause, cid: int) -> None:
        if not self.config.subsumption:
            return
        doomed = [i for i, c in self._live.instances(clause)
                  if i != cid and not _protected(c) and subsumes(clause, c)]
        for i in doomed:
            self._live.discard(i)
            self._active.pop(i, None)
            self._answer_clauses.pop(i, None)
            self._eligible.pop(i, None)
            self._passive_ids.discard(i)
            self.stats["subsumed_backward"] += 1

    def _admit(self, clause: Clause, inference: Optional[dict] = None) -> Optional[SchematicAnswer]:
        """Simplify, check and store a new clause; returns an answer for empty ones."""
        clause = canonical(merge_recording_duplicates(clause))
        if clause.is_tautology():
            self.stats["tautologies"] += 1
            return None
        verdict = prune(clause, self.store, self.config, self._prune_cache)
        if verdict is not Verdict.KEEP:
            self.stats[f"pruned:{verdict.value}"] += 1
            log.debug("pruned (%s): %s", verdict.value, clause)
            return None
        if inference is None and clause.origin.kind == "abstraction":
            # Input abstractions are never subsumed away; identical ones pool their tags.
            key = variant_key(clause)
            existing = self._abstraction_keys.get(key)
            if existing is not None:
                old = self.clauses[existing]
                tags = old.origin.tags | clause.origin.tags
                self.clauses[existing] = old.with_origin(Origin("abstraction", tags=tags))
                return None
        elif self._subsumed(clause):
            self.stats["subsumed_forward"] += 1
            return None
        cid = self._register(clause, inference)
        if inference is None and clause.origin.kind == "abstraction":
            self._abstraction_keys[variant_key(clause)] = cid
        clause = self.clauses[cid]
        self.stats["kept"] += 1
        if inference is not None:
            log.debug("[%d] %s  <- %s%s", cid, clause, inference["rule"], inference["premises"])
        self._backward(clause, cid)
        self._live.add(cid, clause)
        if clause.is_empty:
            self._answer_clauses[cid] = clause
            answer = SchematicAnswer(clause, cid, frozenset(self.leaves[cid]))
            self.answers.append(answer)
            self.stats["answers"] += 1
            log.info("schematic answer [%d]: %s", cid, clause)
            return answer
        heapq.heappush(self._passive, (clause.weight(), cid))
        self._passive_ids.add(cid)
        return None

    def _eligible_for(self, cid: int, clause: Clause) -> set:
        e = self._eligible.get(cid)
        if e is None:
            e = eligible_literals(clause, self.config.calculus, self.ordering)
            self._eligible[cid] = e
        return e

    # -- inference generation ---------------------------------------------

    def _conclusions(self, gid: int, given: Clause):
        g, _ = rename(given, "_g")
        g_elig = self._eligible_for(gid, given)
        for aid, other in list(self._active.items()):
            a = other if aid != gid else rename(other, "_h")[0]
            a_elig = self._eligible_for(aid, other)
            for i in g_elig:
                gl = g.literals[i]
                for j in a_elig:
                    al = a.literals[j]
                    if gl.predicate != al.predicate or gl.positive == al.positive:
                        continue
                    if gl.positive:
                        out = resolve(g, i, a, j)
                        premises, renamed = (gid, aid), (g, a)
                    else:
                        if aid == gid:
                            continue  # the symmetric pair is generated from the positive side
                        out = resolve(a, j, g, i)
                        premises, renamed = (aid, gid), (a, g)
                    if out is not None:
                        yield out, "resolution", premises, renamed
        fact_elig = g_elig if self.config.calculus is not Calculus.UNORDERED else None
        n = len(g.literals)
        for i in range(n):
            for j in range(i + 1, n):
                out = factor(g, i, j, fact_elig)
                if out is not None:
                    yield out, "factoring", (gid,), (g,)

    # -- main loop ---------------------------------------------------------

    def _budget_hit(self, started: float) -> bool:
        cfg = self.config
        if self.stats["derived"] >= cfg.max_derived:
            return True
        if len(self._active) + len(self._passive_ids) >= cfg.max_clauses:
            return True
        if cfg.max_answers is not None and self.stats["answers"] >= cfg.max_answers:
            return True
        return time.monotonic() - started > cfg.timeout

    def run(self) -> Iterator[SchematicAnswer]:
        started = time.monotonic()
        for c in self._inputs:
            answer = self._admit(c)
            if answer is not None:
                yield answer
        while self._passive:
            if self._budget_hit(started):
                self.status = Status.BUDGET_EXHAUSTED
                break
            _, gid = heapq.heappop(self._passive)
            if gid not in self._passive_ids:
                continue
            self._passive_ids.discard(gid)
            given = self.clauses[gid]
            self.stats["given"] += 1
            self._active[gid] = given
            for (conclusion, theta), rule, premises, renamed in self._conclusions(gid, given):
                self.stats["derived"] += 1
                inference = dict(rule=rule, premises=premises, renamed=renamed,
                                 unifier=theta, recording=conclusion.recording)
                answer = self._admit(conclusion, inference)
                if answer is not None:
                    yield answer
                if self._budget_hit(started):
                    break
                if gid not in self._active:
                    break  # given clause was backward-subsumed
        else:
            self.status = Status.SATURATED
        if self.status is Status.RUNNING:
            self.status = Status.SATURATED if not self._passive_ids else Status.BUDGET_EXHAUSTED
        self.stats["active"] = len(self._active)
        self.stats["passive"] = len(self._passive_ids)
        log.info("saturation finished: %s %s", self.status.value, dict(self.stats))

    def derivation_leaves(self, cid: int) -> set:
        """Leaf clause ids of a clause's derivation, found by replaying the log."""
        if cid not in self.clauses:
            raise KeyError(f"unknown derivation id {cid}")
        seen, stack, leaves = set(), [cid], set()
        while stack:
            i = stack.pop()
            if i in seen:
                continue
            seen.add(i)
            inf = self.inferences.get(i)
            if inf is None:
                leaves.add(i)
            else:
                stack.extend(inf.premises)
        return leaves


def saturate(problem: Problem, config: Optional[SaturationConfig] = None,
             store: Optional[FactStore] = None, symbols: Optional[SymbolTable] = None) -> Iterator[SchematicAnswer]:
    return Saturator(problem.clauses(), store, config, symbols).run()


def check_inheritance(inf: Inference) -> bool:
    """gamma of the conclusion equals the instantiated union of the premises' gammas."""
    expected = Counter()
    for premise in inf.renamed:
        expected.update(apply_literal(inf.unifier, l) for l in premise.recording)
    return expected == Counter(inf.recording)
