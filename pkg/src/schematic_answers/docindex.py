"""Indexing documents by their abstraction clauses.

A document is represented by abstraction clauses ``p(X..) | p(X..)``, some of
which carry URI-prefix constraints ``pref(X, "http://...")``.  Schematic
answers derived from a pool of such clauses point back at the documents whose
clauses appear as leaves of their derivations.

Prefix semantics: all prefixes attached to one variable must form a chain
under the string-prefix relation, and a prefix attached to a constant must be
a prefix of that constant's name.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Sequence

from .terms import ABSTRACTION, Clause, Fn, Literal, Origin


def abstraction_from_atom(lit: Literal, prefs: Sequence = ()) -> Clause:
    variables = set(lit.variables())
    for v, _ in prefs:
        if v not in variables:
            raise ValueError(f"prefix constraint on {v}, which does not occur in {lit}")
    return Clause((lit,), (lit,), ABSTRACTION, tuple(prefs))


def pref_compatible(constraints: Iterable) -> bool:
    groups = defaultdict(set)
    for term, prefix in constraints:
        groups[term].add(prefix)
    for term, prefixes in groups.items():
        if isinstance(term, Fn):
            if term.args or not all(term.name.startswith(p) for p in prefixes):
                return False
            continue
        ordered = sorted(prefixes, key=len)
        if any(not longer.startswith(shorter) for shorter, longer in zip(ordered, ordered[1:])):
            return False
    return True


class DocumentIndex:
    """Registry of documents and their abstraction clauses."""

    def __init__(self):
        self.documents: dict[str, tuple] = {}
        self.saturator = None

    def register_document(self, docid: str, clauses: Iterable[Clause]) -> "DocumentIndex":
        if docid in self.documents:
            raise ValueError(f"duplicate document id {docid}")
        tagged = []
        for c in clauses:
            if c.origin.kind != "abstraction" or len(c.literals) != 1 or c.literals != c.recording:
                raise ValueError(f"not an abstraction clause: {c}")
            tagged.append(Clause(c.literals, c.recording, Origin("abstraction", tags=frozenset({docid})), c.prefs))
        self.documents[docid] = tuple(tagged)
        return self

    def clauses(self) -> list[Clause]:
        return [c for cs in self.documents.values() for c in cs]

    def saturator_for(self, kb: Iterable[Clause], goal: Clause, config=None, store=None, symbols=None):
        """Build a saturator over the indexed clauses and remember it for lookups."""
        from .saturation import Saturator

        self.saturator = Saturator(self.clauses() + list(kb) + [goal], store, config, symbols)
        return self.saturator

    def relevant_documents(self, answer) -> set:
        return relevant_documents(self, answer)


def relevant_documents(index: DocumentIndex, answer, saturator=None) -> set:
    saturator = saturator or index.saturator
    if saturator is None:
        raise ValueError("index has not been used in a saturation run")
    leaves = saturator.derivation_leaves(answer.derivation_id)
    docs = set()
    for cid in leaves:
        docs |= saturator.clauses[cid].origin.tags
    return docs & set(index.documents)
