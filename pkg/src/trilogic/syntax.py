"""Concrete syntax: lexer, parser, path desugaring, and safety validation.

Statements are rules (`head :- body.`), facts (`atom.`), and queries
(`?- body.`); `%` starts a line comment. Names starting with an upper-case
letter are variables, lower-case names are symbols. Quoted strings shaped
like a lower-case identifier are normalized to symbols at lex time, so
'amy' and amy denote the same constant. Files use the `.lp` extension,
UTF-8 encoded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import LpParseError, PathArityError, ReservedNameError, SafetyError

AGG_FUNCS = ("count", "sum", "min", "max")
CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")

# ----------------------------------------------------------------- terms


@dataclass(frozen=True)
class Term:
    """Base class of parsed terms; concrete kinds are the subclasses."""


@dataclass(frozen=True)
class Integer(Term):
    value: int


@dataclass(frozen=True)
class Symbol(Term):
    text: str


@dataclass(frozen=True)
class String(Term):
    text: str


@dataclass(frozen=True)
class Variable(Term):
    name: str


@dataclass(frozen=True)
class Compound(Term):
    functor: str
    args: tuple[Term, ...]


_IDENT_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


def make_constant(text: str) -> Term:
    """Build the symbol/string constant for quoted text, normalizing
    identifier-shaped strings to symbols."""
    if _IDENT_RE.match(text):
        return Symbol(text)
    return String(text)


def term_variables(term: Term) -> Iterator[str]:
    if isinstance(term, Variable):
        yield term.name
    elif isinstance(term, Compound):
        for a in term.args:
            yield from term_variables(a)


def term_is_ground(term: Term) -> bool:
    if isinstance(term, Variable):
        return False
    if isinstance(term, Compound):
        return all(term_is_ground(a) for a in term.args)
    return True


def term_text(term: Term) -> str:
    if isinstance(term, Integer):
        return str(term.value)
    if isinstance(term, Symbol):
        return term.text
    if isinstance(term, String):
        return f"'{term.text}'"
    if isinstance(term, Variable):
        return term.name
    if isinstance(term, Compound):
        return f"{term.functor}({','.join(term_text(a) for a in term.args)})"
    raise TypeError(f"not a term: {term!r}")


# -------------------------------------------------------------- literals


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()
    negated: bool = False
    path_plus: bool = False

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def key(self) -> tuple[str, int]:
        # name + arity identifies a predicate
        return (self.pred, len(self.args))


@dataclass(frozen=True)
class Comparison:
    op: str
    left: Term
    right: Term


@dataclass(frozen=True)
class Aggregate:
    result: Variable
    func: str
    local: Variable
    body: tuple[Union[Atom, Comparison], ...]


Literal = Union[Atom, Comparison, Aggregate]


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[Literal, ...]
    origin: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass
class Program:
    rules: list[Rule]
    facts: list[Atom]
    queries: list[tuple[Literal, ...]]
    fact_origins: list[tuple[int, int]] = field(default_factory=list, compare=False)
    desugared: bool = field(default=False, compare=False)
    validated: bool = field(default=False, compare=False)


def literal_variables(lit: Literal) -> Iterator[str]:
    if isinstance(lit, Atom):
        for t in lit.args:
            yield from term_variables(t)
    elif isinstance(lit, Comparison):
        yield from term_variables(lit.left)
        yield from term_variables(lit.right)
    else:
        yield lit.result.name
        yield lit.local.name
        for inner in lit.body:
            yield from literal_variables(inner)


def literal_text(lit: Literal) -> str:
    if isinstance(lit, Atom):
        plus = "+" if lit.path_plus else ""
        args = f"({','.join(term_text(t) for t in lit.args)})" if lit.args else ""
        text = f"{lit.pred}{plus}{args}"
        return f"not {text}" if lit.negated else text
    if isinstance(lit, Comparison):
        return f"{term_text(lit.left)} {lit.op} {term_text(lit.right)}"
    inner = ", ".join(literal_text(l) for l in lit.body)
    return f"{lit.result.name} = {lit.func} {{ {lit.local.name} : {inner} }}"


def rule_text(rule: Rule) -> str:
    return f"{literal_text(rule.head)} :- {', '.join(literal_text(l) for l in rule.body)}."


def program_text(program: Program) -> str:
    """Canonical text; parsing it back yields a structurally equal Program."""
    lines = [f"{literal_text(f)}." for f in program.facts]
    lines += [rule_text(r) for r in program.rules]
    lines += [f"?- {', '.join(literal_text(l) for l in q)}." for q in program.queries]
    return "\n".join(lines) + ("\n" if lines else "")


# ----------------------------------------------------------------- lexer


@dataclass(frozen=True)
class Token:
    kind: str  # int | sym | str | var | punct | eof
    value: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>%[^\n]*)
      | (?P<int>-?\d+)
      | (?P<sym>[a-z][A-Za-z0-9_]*)
      | (?P<var>[A-Z][A-Za-z0-9_]*)
      | (?P<str>'[^'\n]*')
      | (?P<punct>:-|\?-|!=|<=|>=|[(){},.:+=<>])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise LpParseError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, line, m.start() - line_start + 1))
        nl = value.count("\n")
        if nl:
            line += nl
            line_start = m.start() + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------- parser


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, expected: str, tok: Token | None = None):
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.value)
        raise LpParseError(f"expected {expected}, found {found}", tok.line, tok.column)

    def expect_punct(self, value: str) -> Token:
        tok = self.peek()
        if tok.kind != "punct" or tok.value != value:
            self.fail(f"'{value}'", tok)
        return self.next()

    def at_punct(self, *values: str) -> bool:
        tok = self.peek()
        return tok.kind == "punct" and tok.value in values

    # -- grammar ----------------------------------------------------

    def parse_program(self) -> Program:
        program = Program(rules=[], facts=[], queries=[])
        while self.peek().kind != "eof":
            self.parse_statement(program)
        return program

    def parse_statement(self, program: Program):
        tok = self.peek()
        if self.at_punct("?-"):
            self.next()
            body = self.parse_body()
            self.expect_punct(".")
            program.queries.append(body)
            return
        head = self.parse_atom()
        if head.path_plus:
            raise LpParseError(
                "path closure '+' is only allowed on body atoms", tok.line, tok.column
            )
        if self.at_punct(":-"):
            self.next()
            body = self.parse_body()
            self.expect_punct(".")
            program.rules.append(Rule(head, body, origin=(tok.line, tok.column)))
        else:
            self.expect_punct(".")
            program.facts.append(head)
            program.fact_origins.append((tok.line, tok.column))

    def parse_body(self) -> tuple[Literal, ...]:
        literals = [self.parse_literal()]
        while self.at_punct(","):
            self.next()
            literals.append(self.parse_literal())
        return tuple(literals)

    def parse_literal(self) -> Literal:
        tok = self.peek()
        if tok.kind == "sym" and tok.value == "not":
            self.next()
            atom = self.parse_atom()
            return Atom(atom.pred, atom.args, negated=True, path_plus=atom.path_plus)
        if tok.kind == "var":
            # aggregate needs the 3-token lookahead VAR '=' aggfun '{'
            if (
                self.peek(1).kind == "punct"
                and self.peek(1).value == "="
                and self.peek(2).kind == "sym"
                and self.peek(2).value in AGG_FUNCS
                and self.peek(3).kind == "punct"
                and self.peek(3).value == "{"
            ):
                return self.parse_aggregate()
            left = self.parse_term()
            return self.parse_comparison(left)
        if tok.kind in ("int", "str"):
            left = self.parse_term()
            return self.parse_comparison(left)
        if tok.kind == "sym":
            atom = self.parse_atom()
            if self.at_punct(*CMP_OPS):
                if atom.path_plus:
                    self.fail("a term before a comparison operator", tok)
                left: Term = (
                    Compound(atom.pred, atom.args) if atom.args else Symbol(atom.pred)
                )
                return self.parse_comparison(left)
            return atom
        self.fail("a literal")

    def parse_comparison(self, left: Term) -> Comparison:
        tok = self.peek()
        if not self.at_punct(*CMP_OPS):
            self.fail("a comparison operator", tok)
        op = self.next().value
        right = self.parse_term()
        return Comparison(op, left, right)

    def parse_aggregate(self) -> Aggregate:
        result = Variable(self.next().value)
        self.expect_punct("=")
        func = self.next().value
        self.expect_punct("{")
        tok = self.peek()
        if tok.kind != "var":
            self.fail("the aggregate's local variable", tok)
        local = Variable(self.next().value)
        self.expect_punct(":")
        body = self.parse_body()
        self.expect_punct("}")
        for lit in body:
            if isinstance(lit, Aggregate):
                raise LpParseError(
                    "aggregates cannot be nested", tok.line, tok.column
                )
            if isinstance(lit, Atom) and lit.negated:
                raise LpParseError(
                    "negation is not allowed inside an aggregate", tok.line, tok.column
                )
        return Aggregate(result, func, local, body)

    def parse_atom(self) -> Atom:
        tok = self.peek()
        if tok.kind != "sym":
            self.fail("a predicate name", tok)
        name = self.next().value
        plus = False
        if self.at_punct("+"):
            self.next()
            plus = True
        args: tuple[Term, ...] = ()
        if self.at_punct("("):
            self.next()
            parsed = [self.parse_term()]
            while self.at_punct(","):
                self.next()
                parsed.append(self.parse_term())
            self.expect_punct(")")
            args = tuple(parsed)
        return Atom(name, args, path_plus=plus)

    def parse_term(self) -> Term:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return Integer(int(tok.value))
        if tok.kind == "var":
            self.next()
            return Variable(tok.value)
        if tok.kind == "str":
            self.next()
            return make_constant(tok.value[1:-1])
        if tok.kind == "sym":
            self.next()
            if self.at_punct("("):
                self.next()
                args = [self.parse_term()]
                while self.at_punct(","):
                    self.next()
                    args.append(self.parse_term())
                self.expect_punct(")")
                return Compound(tok.value, tuple(args))
            return Symbol(tok.value)
        self.fail("a term")


def parse(text: str) -> Program:
    """Parse source text into a Program of rules, facts, and queries."""
    return _Parser(text).parse_program()


def parse_query(text: str) -> tuple[Literal, ...]:
    """Parse a query body, with or without the leading `?-` and final dot."""
    text = text.strip()
    if text.startswith("?-"):
        text = text[2:]
    text = text.strip()
    if text.endswith("."):
        text = text[:-1]
    parser = _Parser(text)
    body = parser.parse_body()
    if parser.peek().kind != "eof":
        parser.fail("end of query")
    return body


# ------------------------------------------------------------- desugaring

PATH_SUFFIX = "__plus"


def _walk_atoms(body: tuple[Literal, ...]) -> Iterator[Atom]:
    for lit in body:
        if isinstance(lit, Atom):
            yield lit
        elif isinstance(lit, Aggregate):
            for inner in lit.body:
                if isinstance(inner, Atom):
                    yield inner


def _desugar_body(body: tuple[Literal, ...], closed: dict[str, None]) -> tuple[Literal, ...]:
    out: list[Literal] = []
    for lit in body:
        if isinstance(lit, Atom) and lit.path_plus:
            if lit.arity != 2:
                raise PathArityError(
                    f"path closure '+' needs a binary predicate, "
                    f"{lit.pred} has arity {lit.arity}"
                )
            closed.setdefault(lit.pred, None)
            out.append(Atom(lit.pred + PATH_SUFFIX, lit.args, negated=lit.negated))
        elif isinstance(lit, Aggregate):
            inner = _desugar_body(lit.body, closed)
            out.append(Aggregate(lit.result, lit.func, lit.local, inner))
        else:
            out.append(lit)
    return tuple(out)


def desugar_paths(program: Program) -> Program:
    """Replace every `q+(S,T)` body atom with `q__plus(S,T)` plus the base
    and right-recursive closure rules, added once per closed predicate."""
    if program.desugared:
        return program
    for rule in program.rules:
        for atom in (rule.head, *_walk_atoms(rule.body)):
            if "__" in atom.pred:
                raise ReservedNameError(
                    f"predicate name {atom.pred!r} uses the reserved '__'"
                )
    for fact in program.facts:
        if "__" in fact.pred:
            raise ReservedNameError(
                f"predicate name {fact.pred!r} uses the reserved '__'"
            )

    closed: dict[str, None] = {}  # insertion-ordered
    rules = [
        Rule(r.head, _desugar_body(r.body, closed), origin=r.origin)
        for r in program.rules
    ]
    queries = [_desugar_body(q, closed) for q in program.queries]
    x, y, z = Variable("X"), Variable("Y"), Variable("Z")
    for pred in closed:
        plus = pred + PATH_SUFFIX
        rules.append(Rule(Atom(plus, (x, y)), (Atom(pred, (x, y)),)))
        rules.append(
            Rule(Atom(plus, (x, y)), (Atom(pred, (x, z)), Atom(plus, (z, y))))
        )
    return Program(
        rules=rules,
        facts=list(program.facts),
        queries=queries,
        fact_origins=list(program.fact_origins),
        desugared=True,
    )


# ---------------------------------------------------------------- safety


def _check_body(
    head_vars: list[str], body: tuple[Literal, ...], where: str
) -> None:
    positive: set[str] = set()
    for lit in body:
        if isinstance(lit, Atom) and not lit.negated:
            positive.update(literal_variables(lit))
    bound = set(positive)
    for lit in body:
        if isinstance(lit, Aggregate):
            if lit.local.name in positive:
                raise SafetyError(
                    f"aggregate local variable {lit.local.name} is also bound "
                    f"outside the aggregate in {where}"
                )
            bound.add(lit.result.name)

    for v in head_vars:
        if v not in bound:
            raise SafetyError(f"unsafe variable {v} in {where}")
    for lit in body:
        if isinstance(lit, Atom) and lit.negated:
            for v in literal_variables(lit):
                if v not in bound:
                    raise SafetyError(
                        f"variable {v} appears only under negation in {where}"
                    )
        elif isinstance(lit, Comparison):
            for v in literal_variables(lit):
                if v not in bound:
                    raise SafetyError(
                        f"comparison variable {v} is unbound in {where}"
                    )
        elif isinstance(lit, Aggregate):
            inner_pos: set[str] = set()
            inner_all: set[str] = set()
            for inner in lit.body:
                inner_all.update(literal_variables(inner))
                if isinstance(inner, Atom):
                    inner_pos.update(literal_variables(inner))
            if lit.local.name not in inner_pos:
                raise SafetyError(
                    f"aggregate local variable {lit.local.name} does not appear "
                    f"in a positive atom of its inner body in {where}"
                )
            for v in sorted(inner_all - {lit.local.name}):
                if v not in positive:
                    raise SafetyError(
                        f"aggregate inner variable {v} is not bound by the "
                        f"outer body in {where}"
                    )


def validate_safety(program: Program) -> Program:
    """Accept the program iff every rule is range-restricted; facts must be
    ground and query bodies must bind all their variables."""
    for fact in program.facts:
        for v in literal_variables(fact):
            raise SafetyError(
                f"fact {literal_text(fact)} is not ground (variable {v})"
            )
    for rule in program.rules:
        head_vars = list(dict.fromkeys(literal_variables(rule.head)))
        _check_body(head_vars, rule.body, f"rule {rule_text(rule)}")
    for query in program.queries:
        qvars = list(dict.fromkeys(v for l in query for v in literal_variables(l)))
        text = "?- " + ", ".join(literal_text(l) for l in query) + "."
        _check_body(qvars, query, f"query {text}")
    program.validated = True
    return program


def load(text: str) -> Program:
    """parse + desugar_paths + validate_safety in one step."""
    return validate_safety(desugar_paths(parse(text)))
