"""Knuth-Bendix-style term ordering and literal eligibility.

All symbols and variables weigh 1.  Predicate symbols are compared like
function symbols at the root of an atom.
"""

from __future__ import annotations

import enum
from collections import Counter
from typing import Callable, Optional

from .terms import Clause, Fn, Literal, SymbolTable, Term, Var


class Order(enum.Enum):
    GREATER = ">"
    LESS = "<"
    EQUAL = "="
    INCOMPARABLE = "?"


class Calculus(str, enum.Enum):
    UNORDERED = "unordered"
    ORDERED = "ordered"
    ORDERED_SELECTION = "ordered-selection"


def _weight_and_vars(t: Term, counts: Counter) -> int:
    if isinstance(t, Var):
        counts[t] += 1
        return 1
    return 1 + sum(_weight_and_vars(a, counts) for a in t.args)


class KBO:
    """KBO with unit weights.

    ``precedence`` maps a symbol to an integer; larger means bigger.  By
    default the symbol table's declaration order is used (earlier is bigger).
    """

    def __init__(self, symbols: Optional[SymbolTable] = None, precedence: Optional[Callable[[str], int]] = None):
        if precedence is None:
            if symbols is None:
                symbols = SymbolTable()
            precedence = symbols.precedence
        self.precedence = precedence

    def _prec_cmp(self, f: str, g: str) -> Order:
        if f == g:
            return Order.EQUAL
        pf, pg = self.precedence(f), self.precedence(g)
        if pf == pg:
            # Ties broken by name so the precedence stays total.
            return Order.GREATER if f > g else Order.LESS
        return Order.GREATER if pf > pg else Order.LESS

    def compare(self, s: Term, t: Term) -> Order:
        if s == t:
            return Order.EQUAL
        cs, ct = Counter(), Counter()
        ws = _weight_and_vars(s, cs)
        wt = _weight_and_vars(t, ct)
        s_ok = all(cs[v] >= n for v, n in ct.items())
        t_ok = all(ct[v] >= n for v, n in cs.items())
        if ws > wt:
            return Order.GREATER if s_ok else Order.INCOMPARABLE
        if wt > ws:
            return Order.LESS if t_ok else Order.INCOMPARABLE
        # Equal weights: variables only compare with themselves here.
        if isinstance(s, Var) or isinstance(t, Var):
            return Order.INCOMPARABLE
        head = self._prec_cmp(s.name, t.name)
        if head is Order.GREATER:
            return Order.GREATER if s_ok else Order.INCOMPARABLE
        if head is Order.LESS:
            return Order.LESS if t_ok else Order.INCOMPARABLE
        if len(s.args) != len(t.args):
            return Order.GREATER if len(s.args) > len(t.args) and s_ok else (
                Order.LESS if len(t.args) > len(s.args) and t_ok else Order.INCOMPARABLE)
        for a, b in zip(s.args, t.args):
            r = self.compare(a, b)
            if r is Order.EQUAL:
                continue
            if r is Order.GREATER:
                return Order.GREATER if s_ok else Order.INCOMPARABLE
            if r is Order.LESS:
                return Order.LESS if t_ok else Order.INCOMPARABLE
            return Order.INCOMPARABLE
        return Order.EQUAL

    def compare_literals(self, l1: Literal, l2: Literal) -> Order:
        """Atoms compared as terms; on equal atoms the negative literal is bigger."""
        r = self.compare(Fn(l1.predicate, l1.args), Fn(l2.predicate, l2.args))
        if r is not Order.EQUAL:
            return r
        if l1.positive == l2.positive:
            return Order.EQUAL
        return Order.LESS if l1.positive else Order.GREATER


def _maximal(positions, lits, ordering: KBO) -> set:
    out = set()
    for i in positions:
        if not any(j != i and ordering.compare_literals(lits[j], lits[i]) is Order.GREATER for j in positions):
            out.add(i)
    return out


def eligible_literals(clause: Clause, calculus: Calculus | str = Calculus.UNORDERED,
                      ordering: Optional[KBO] = None) -> set:
    """Positions of the ordinary literals that inferences may act on.

    With selection, every negative literal that is maximal among the negative
    literals is selected; positive clauses fall back to their maximal literals.
    """
    calculus = Calculus(calculus)
    lits = clause.literals
    if not lits:
        return set()
    if calculus is Calculus.UNORDERED:
        return set(range(len(lits)))
    ordering = ordering or KBO()
    if calculus is Calculus.ORDERED_SELECTION:
        negatives = [i for i, l in enumerate(lits) if not l.positive]
        if negatives:
            return _maximal(negatives, lits, ordering)
    return _maximal(range(len(lits)), lits, ordering)
