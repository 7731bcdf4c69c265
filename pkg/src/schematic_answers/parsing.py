"""Readers for the knowledge-base, query, schema, data and document files.

Clause syntax (``.fol``)::

    % comment
    ~grStud(X) | pers(X).
    stud(P) :- person(P), takesC(P, C), course(C).

Query syntax::

    ?- person(P), takesCourse(P, C), course(C) answer P.

Variables start with an uppercase letter or ``_``; constants and function
symbols start with a lowercase letter or digit, or are quoted.  ``:`` is a
legal identifier character so ``zoo:elephant`` is a single symbol.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .terms import (
    ANSWER, ArityError, Clause, Fn, GOAL, KB, Literal, SymbolKind, SymbolTable, Var,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{line}:{column}: {message}" if line else message)
        self.line = line
        self.column = column


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<neck>:-)
  | (?P<query>\?-)
  | (?P<qstr>'(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*")
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<ident>[a-z0-9][A-Za-z0-9_:]*[A-Za-z0-9_]|[a-z0-9])
  | (?P<punct>[(),|.~/{}])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    column: int


def _unquote(text: str) -> str:
    body = text[1:-1]
    return re.sub(r"\\(.)", r"\1", body)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            value = _unquote(chunk) if kind == "qstr" else chunk
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, symbols: SymbolTable):
        self.tokens = tokenize(text)
        self.i = 0
        self.symbols = symbols

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.column)

    def take(self, kind=None, text=None) -> Token:
        tok = self.tok
        if kind is not None and tok.kind != kind or text is not None and tok.text != text:
            want = text or kind
            raise self.error(f"expected {want!r}, found {tok.text or tok.kind!r}")
        self.i += 1
        return tok

    def at(self, kind=None, text=None) -> bool:
        tok = self.tok
        return (kind is None or tok.kind == kind) and (text is None or tok.text == text)

    def symbol(self) -> Token:
        if self.at("ident") or self.at("qstr"):
            return self.take()
        raise self.error(f"expected a symbol, found {self.tok.text or self.tok.kind!r}")

    def term(self):
        if self.at("var"):
            return Var(self.take().text)
        tok = self.symbol()
        args = self.arguments()
        try:
            self.symbols.declare_function(tok.text, len(args))
        except ArityError as exc:
            raise self.error(str(exc), tok) from None
        return Fn(tok.text, args)

    def arguments(self) -> tuple:
        if not self.at("punct", "("):
            return ()
        self.take()
        args = [self.term()]
        while self.at("punct", ","):
            self.take()
            args.append(self.term())
        self.take("punct", ")")
        return tuple(args)

    def literal(self) -> Literal:
        positive = True
        if self.at("punct", "~"):
            self.take()
            positive = False
        tok = self.symbol()
        args = self.arguments()
        if tok.text == ANSWER:
            raise self.error("the answer predicate is reserved", tok)
        try:
            self.symbols.declare_predicate(tok.text, len(args))
        except ArityError as exc:
            raise self.error(str(exc), tok) from None
        return Literal(positive, tok.text, args)

    def clause(self) -> Clause:
        first = self.literal()
        if self.at("neck"):
            self.take()
            if not first.positive:
                raise self.error("rule head must be positive")
            body = self.conjunction()
            lits = (first,) + tuple(l.negate() for l in body)
        else:
            lits = [first]
            while self.at("punct", "|"):
                self.take()
                lits.append(self.literal())
            lits = tuple(lits)
        self.take("punct", ".")
        return Clause(lits, (), KB)

    def conjunction(self) -> list:
        lits = [self.literal()]
        while self.at("punct", ","):
            self.take()
            lits.append(self.literal())
        return lits


@dataclass(frozen=True)
class DeductiveQuery:
    goal: Clause
    distinguished: tuple
    undistinguished: tuple
    conjunction: tuple = field(default=(), compare=False)

    @property
    def answer_names(self) -> tuple:
        return tuple(v.name for v in self.distinguished)

    def __post_init__(self):
        if not self.goal.literals:
            raise ValueError("query goal must be nonempty")
        dist, undist = set(self.distinguished), set(self.undistinguished)
        if len(dist) != len(self.distinguished) or dist & undist:
            raise ValueError("query variables must be pairwise distinct")
        goal_vars = {v for l in self.goal.literals for v in l.variables()}
        if dist | undist != goal_vars:
            raise ValueError("distinguished and undistinguished variables must partition vars(C)")


def parse_kb(text: str, symbols: Optional[SymbolTable] = None) -> list[Clause]:
    p = _Parser(text, symbols if symbols is not None else SymbolTable())
    clauses = []
    while not p.at("eof"):
        clauses.append(p.clause())
    return clauses


def parse_clause(text: str, symbols: Optional[SymbolTable] = None) -> Clause:
    clauses = parse_kb(text if text.rstrip().endswith(".") else text + ".", symbols)
    if len(clauses) != 1:
        raise ParseError("expected exactly one clause")
    return clauses[0]


def parse_query(text: str, symbols: Optional[SymbolTable] = None) -> DeductiveQuery:
    symbols = symbols if symbols is not None else SymbolTable()
    p = _Parser(text, symbols)
    p.take("query")
    if p.at("punct", ".") or p.at("eof"):
        raise p.error("empty conjunction")
    conj = p.conjunction()
    order = list(dict.fromkeys(v for l in conj for v in l.variables()))
    if p.at("ident", "answer"):
        p.take()
        names = []
        if p.at("var"):
            names.append(p.take())
            while p.at("punct", ","):
                p.take()
                names.append(p.take("var"))
        known = {v.name: v for v in order}
        distinguished = []
        for tok in names:
            if tok.text not in known:
                raise p.error(f"unknown variable {tok.text} in answer list", tok)
            distinguished.append(known[tok.text])
        if len(set(distinguished)) != len(distinguished):
            raise p.error("repeated variable in answer list")
    else:
        distinguished = order
    p.take("punct", ".")
    if not p.at("eof"):
        raise p.error("trailing input after query")
    symbols.declare_predicate(ANSWER, len(distinguished), SymbolKind.ANSWER)
    goal = Clause(
        tuple(l.negate() for l in conj),
        (Literal(False, ANSWER, tuple(distinguished)),),
        GOAL,
    )
    undistinguished = tuple(v for v in order if v not in set(distinguished))
    return DeductiveQuery(goal, tuple(distinguished), undistinguished, tuple(conj))


# ---------------------------------------------------------------------------
# Schema and data


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple
    predicate: str

    @property
    def arity(self):
        return len(self.columns)


class Schema:
    """Bijection between predicates and tables with ordered columns."""

    def __init__(self, tables=()):
        self._by_table: dict[str, Table] = {}
        self._by_pred: dict[str, Table] = {}
        for t in tables:
            self.add(t)

    def add(self, table: Table) -> None:
        if table.name in self._by_table:
            raise ValueError(f"duplicate table {table.name}")
        if table.predicate in self._by_pred:
            raise ValueError(f"duplicate predicate {table.predicate}")
        if len(set(table.columns)) != len(table.columns):
            raise ValueError(f"duplicate column in table {table.name}")
        self._by_table[table.name] = table
        self._by_pred[table.predicate] = table

    def __iter__(self):
        return iter(self._by_table.values())

    def __len__(self):
        return len(self._by_table)

    def table(self, name: str) -> Table:
        return self._by_table[name]

    def for_predicate(self, predicate: str) -> Table:
        return self._by_pred[predicate]

    def has_predicate(self, predicate: str) -> bool:
        return predicate in self._by_pred

    def has_table(self, name: str) -> bool:
        return name in self._by_table

    @property
    def predicates(self):
        return list(self._by_pred)

    def declare(self, symbols: SymbolTable) -> None:
        for t in self:
            symbols.declare_predicate(t.predicate, t.arity, SymbolKind.DB)


_SCHEMA_LINE = re.compile(
    r"^table\s+(?P<table>[^\s(]+)\s*\((?P<cols>[^)]*)\)\s+as\s+(?P<pred>[^\s/]+)\s*/\s*(?P<arity>\d+)\s*\.\s*$"
)


def _strip_comment(line: str) -> str:
    return line.split("%", 1)[0].strip()


def parse_schema(text: str) -> Schema:
    schema = Schema()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line:
            continue
        m = _SCHEMA_LINE.match(line)
        if m is None:
            raise ParseError("expected 'table <name>(<col>, ...) as <pred>/<arity>.'", lineno, 1)
        cols = tuple(c.strip() for c in m["cols"].split(",")) if m["cols"].strip() else ()
        if any(not c for c in cols):
            raise ParseError("empty column name", lineno, 1)
        if int(m["arity"]) != len(cols):
            raise ParseError(
                f"table {m['table']} has {len(cols)} columns but predicate arity {m['arity']}", lineno, 1)
        try:
            schema.add(Table(m["table"], cols, m["pred"]))
        except ValueError as exc:
            raise ParseError(str(exc), lineno, 1) from None
    return schema


_VALUE = re.compile(r"""\s*('(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*"|[^,]*)\s*(,|$)""")


def split_values(text: str, lineno: int = 0) -> list[str]:
    values, pos = [], 0
    if not text.strip():
        return values
    while True:
        m = _VALUE.match(text, pos)
        raw = m.group(1).strip()
        if not raw:
            raise ParseError("empty value", lineno, pos + 1)
        if raw[0] in "'\"":
            values.append(_unquote(raw))
        else:
            if "(" in raw or ")" in raw:
                raise ParseError(f"compound term {raw!r} in data", lineno, pos + 1)
            values.append(raw)
        if m.group(2) != ",":
            break
        pos = m.end()
    return values


def parse_facts(schema: Schema, text: str):
    """Yield ``(predicate, values)`` pairs for each data line."""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line:
            continue
        name, sep, rest = line.partition(":")
        # Table names may themselves contain ':'; take the longest known prefix.
        if sep:
            for cut in range(len(line) - 1, 0, -1):
                if line[cut] == ":" and schema.has_table(line[:cut].strip()):
                    name, rest = line[:cut], line[cut + 1:]
                    break
        name = name.strip()
        if not sep:
            raise ParseError("expected '<table>: v1, v2, ...'", lineno, 1)
        if not schema.has_table(name):
            raise ParseError(f"unknown table {name}", lineno, 1)
        table = schema.table(name)
        values = split_values(rest, lineno)
        if len(values) != table.arity:
            raise ParseError(f"table {name} expects {table.arity} values, got {len(values)}", lineno, 1)
        yield table.predicate, tuple(values)


def load_facts(schema: Schema, text: str):
    from .store import FactStore

    store = FactStore(schema)
    for pred, values in parse_facts(schema, text):
        store.add(pred, values)
    return store


# ---------------------------------------------------------------------------
# Document registry


@dataclass(frozen=True)
class DocumentSpec:
    docid: str
    clauses: tuple  # abstraction clauses with prefs attached


def parse_documents(text: str, symbols: Optional[SymbolTable] = None) -> list[DocumentSpec]:
    """``doc <id> { <atom> [pref(Var, "prefix")]... . ... }``"""
    from .docindex import abstraction_from_atom

    p = _Parser(text, symbols if symbols is not None else SymbolTable())
    docs = []
    while not p.at("eof"):
        kw = p.symbol()
        if kw.text != "doc":
            raise p.error("expected 'doc'", kw)
        docid = p.symbol().text if not p.at("var") else p.take().text
        p.take("punct", "{")
        clauses = []
        while not p.at("punct", "}"):
            lit = p.literal()
            if not lit.positive:
                raise p.error("abstraction atoms must be positive")
            prefs = []
            while p.at("ident", "pref"):
                p.take()
                p.take("punct", "(")
                var_tok = p.take("var")
                p.take("punct", ",")
                prefix = p.take("qstr").text
                p.take("punct", ")")
                var = Var(var_tok.text)
                if var not in set(lit.variables()):
                    raise p.error(f"pref variable {var} does not occur in the clause", var_tok)
                prefs.append((var, prefix))
                if p.at("punct", ","):
                    p.take()
            p.take("punct", ".")
            p.symbols.declare_predicate(lit.predicate, len(lit.args), SymbolKind.DB)
            clauses.append(abstraction_from_atom(lit, prefs))
        p.take("punct", "}")
        docs.append(DocumentSpec(docid, tuple(clauses)))
    return docs


def format_clause(clause: Clause) -> str:
    """Render an ordinary clause in the ``.fol`` syntax."""
    if clause.recording or clause.prefs:
        raise ValueError("clauses with recording literals have no file syntax")
    return " | ".join(map(str, clause.literals)) + "."
