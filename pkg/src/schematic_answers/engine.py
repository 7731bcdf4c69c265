"""Estimator-style front door: fit on a knowledge base and schema, answer queries."""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass, field
from typing import Iterator, Optional

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .compiler import Case, CompiledAnswer, compile_answer, iter_instances
from .docindex import DocumentIndex, relevant_documents
from .ordering import Calculus
from .parsing import DeductiveQuery, Schema, load_facts, parse_documents, parse_kb, parse_query, parse_schema
from .saturation import SaturationConfig, SchematicAnswer, Saturator
from .store import FactStore, build_abstraction
from .terms import Clause, Fn, SymbolTable


def check_schema(schema) -> Schema:
    if schema is None:
        return Schema()
    if isinstance(schema, str):
        return parse_schema(schema)
    if not isinstance(schema, Schema):
        raise TypeError(f"expected schema text or Schema, got {type(schema).__name__}")
    return schema


def check_kb(kb, symbols: SymbolTable) -> list:
    if kb is None:
        return []
    if isinstance(kb, str):
        return parse_kb(kb, symbols)
    kb = list(kb)
    for c in kb:
        if not isinstance(c, Clause):
            raise TypeError(f"expected Clause, got {type(c).__name__}")
        if c.recording:
            raise ValueError("knowledge-base clauses may not carry recording literals")
        symbols.register_clause(c)
    return kb


def check_query(query, symbols: SymbolTable) -> DeductiveQuery:
    if isinstance(query, str):
        return parse_query(query, symbols)
    if not isinstance(query, DeductiveQuery):
        raise TypeError(f"expected query text or DeductiveQuery, got {type(query).__name__}")
    symbols.register_clause(query.goal)
    return query


def check_store(store, schema: Schema) -> FactStore:
    if store is None:
        return FactStore(schema)
    if isinstance(store, str):
        return load_facts(schema, store)
    if not isinstance(store, FactStore):
        raise TypeError(f"expected data text or FactStore, got {type(store).__name__}")
    return store


@dataclass
class AnswerReport:
    """One schematic answer and what it compiled to."""

    index: int
    answer: SchematicAnswer
    compiled: CompiledAnswer
    concrete: list = field(default_factory=list)  # answers not reported earlier
    documents: set = field(default_factory=set)

    @property
    def case(self) -> Case:
        return self.compiled.case


class DeductiveQueryEngine(BaseEstimator):
    """Answer deductive queries over a fact store by incremental query rewriting.

    ``fit`` takes the knowledge base, schema, data and optional document
    registry; ``stream`` yields one :class:`AnswerReport` per schematic answer;
    ``predict`` returns the set of concrete answer tuples and ``transform`` the
    SQL text per query.
    """

    def __init__(self, calculus="unordered", prune_db=True, prune_answers=True, prune_prefs=True,
                 subsumption=True, max_derived=100_000, timeout=60.0, max_answers=None):
        self.calculus = calculus
        self.prune_db = prune_db
        self.prune_answers = prune_answers
        self.prune_prefs = prune_prefs
        self.subsumption = subsumption
        self.max_derived = max_derived
        self.timeout = timeout
        self.max_answers = max_answers

    def _config(self) -> SaturationConfig:
        return SaturationConfig(
            calculus=Calculus(self.calculus), prune_db=self.prune_db, prune_answers=self.prune_answers,
            prune_prefs=self.prune_prefs, subsumption=self.subsumption, max_derived=self.max_derived,
            timeout=self.timeout, max_answers=self.max_answers,
        )

    def fit(self, kb, schema=None, data=None, documents=None):
        self._config()  # validates parameters early
        symbols = SymbolTable()
        self.schema_ = check_schema(schema)
        self.schema_.declare(symbols)
        self.store_ = check_store(data, self.schema_)
        self.index_ = None
        if documents is not None:
            self.index_ = DocumentIndex()
            specs = parse_documents(documents, symbols) if isinstance(documents, str) else documents
            for spec in specs:
                self.index_.register_document(spec.docid, spec.clauses)
        self.kb_ = check_kb(kb, symbols)
        self.abstractions_ = build_abstraction(self.schema_)
        self.symbols_ = symbols
        return self

    def saturator(self, query) -> tuple[Saturator, DeductiveQuery]:
        check_is_fitted(self, "kb_")
        query = check_query(query, self.symbols_)
        doc_clauses = self.index_.clauses() if self.index_ is not None else []
        clauses = doc_clauses + self.abstractions_ + self.kb_ + [query.goal]
        sat = Saturator(clauses, self.store_, self._config(), self.symbols_)
        if self.index_ is not None:
            self.index_.saturator = sat
        return sat, query

    def stream(self, query, threaded: bool = True) -> Iterator[AnswerReport]:
        """Reports in derivation order; concrete answers deduplicated across reports."""
        sat, query = self.saturator(query)
        self.saturator_, self.query_ = sat, query
        source = _threaded(sat.run()) if threaded else sat.run()
        seen: set = set()
        for n, sa in enumerate(source, 1):
            compiled = compile_answer(sa, self.schema_, self.store_, query.answer_names)
            fresh = [a for a in iter_instances(self.store_, compiled) if a not in seen]
            seen.update(fresh)
            docs = relevant_documents(self.index_, sa, sat) if self.index_ is not None else set()
            yield AnswerReport(n, sa, compiled, fresh, docs)

    def predict(self, query) -> set:
        """Ground concrete answers as tuples of constant names.

        Universally quantified positions are expanded over the active domain.
        """
        out = set()
        reports = list(self.stream(query, threaded=False))
        domain = self.active_domain(self.query_)
        for report in reports:
            for ans in report.concrete:
                out.update(ans.ground_instances(domain))
        return out

    def transform(self, queries) -> list:
        if isinstance(queries, (str, DeductiveQuery)):
            queries = [queries]
        return [[r.compiled.sql for r in self.stream(q, threaded=False) if r.compiled.sql] for q in queries]

    def active_domain(self, query: Optional[DeductiveQuery] = None) -> list:
        """Constants of the store, the knowledge base and the query."""
        check_is_fitted(self, "kb_")
        domain = dict.fromkeys(self.store_.active_domain())
        clauses = list(self.kb_) + ([query.goal] if query is not None else [])
        for c in clauses:
            for lit in c.literals:
                for a in lit.args:
                    domain.update(dict.fromkeys(t.name for t in a.subterms() if isinstance(t, Fn) and not t.args))
        return list(domain)


_DONE = object()


def _threaded(source: Iterator) -> Iterator:
    """Run a generator on a producer thread and hand items over a queue."""
    channel: queue.Queue = queue.Queue()

    def produce():
        try:
            for item in source:
                channel.put(item)
        except BaseException as exc:  # forwarded to the consumer
            channel.put(_Failure(exc))
        finally:
            channel.put(_DONE)

    worker = threading.Thread(target=produce, name="saturation", daemon=True)
    worker.start()
    while True:
        item = channel.get()
        if item is _DONE:
            break
        if isinstance(item, _Failure):
            raise item.exc
        yield item
    worker.join()


@dataclass
class _Failure:
    exc: BaseException
