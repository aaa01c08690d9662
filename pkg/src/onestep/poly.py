"""Exact multivariate polynomials over named symbols.

Coefficients are rational (fractions.Fraction), so every algebraic
operation here is exact; floating point only appears when a polynomial
is evaluated at a numeric point or compiled to a numeric function.
Symbols carry a kind (species or rate constant) because model assembly
and printing treat the two vocabularies differently.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union


class SymbolKind(enum.Enum):
    SPECIES = "species"
    RATE = "rate"


_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class SymbolId:
    """A named symbol; two symbols are equal iff name and kind agree."""

    name: str
    kind: SymbolKind

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not _NAME_RE.match(self.name):
            raise ValueError(f"invalid symbol name {self.name!r}")
        if not isinstance(self.kind, SymbolKind):
            raise ValueError(f"invalid symbol kind {self.kind!r}")

    def __repr__(self) -> str:
        return f"{self.kind.value}:{self.name}"


def species(name: str) -> SymbolId:
    return SymbolId(name, SymbolKind.SPECIES)


def rate(name: str) -> SymbolId:
    return SymbolId(name, SymbolKind.RATE)


def _symbol_key(sym: SymbolId) -> tuple[int, str]:
    # species sort before rate constants, alphabetically within each kind
    return (0 if sym.kind is SymbolKind.SPECIES else 1, sym.name)


class MissingSymbolError(KeyError):
    """Raised when evaluation or compilation lacks a value for a symbol."""

    def __init__(self, symbol: SymbolId):
        self.symbol = symbol
        super().__init__(f"no value bound for symbol {symbol!r}")

    def __str__(self) -> str:
        return self.args[0]


Exponents = tuple[tuple[SymbolId, int], ...]


@dataclass(frozen=True)
class Monomial:
    """One term: a nonzero rational coefficient times a product of powers.

    exponents is sorted by symbol and holds strictly positive powers only,
    so equal monomials compare equal structurally.
    """

    coefficient: Fraction
    exponents: Exponents


def _storage_key(exponents: Exponents) -> tuple:
    return tuple((_symbol_key(s), e) for s, e in exponents)


Number = Union[int, Fraction]


class Polynomial:
    """Immutable polynomial in canonical form (merged, sorted terms)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable[Monomial] = ()):
        acc: dict[Exponents, Fraction] = {}
        for m in terms:
            acc[m.exponents] = acc.get(m.exponents, Fraction(0)) + m.coefficient
        self._terms = _from_dict(acc)

    @staticmethod
    def zero() -> "Polynomial":
        return Polynomial()

    @staticmethod
    def one() -> "Polynomial":
        return Polynomial.constant(1)

    @staticmethod
    def constant(value: Number) -> "Polynomial":
        p = Polynomial.__new__(Polynomial)
        c = Fraction(value)
        p._terms = () if c == 0 else (Monomial(c, ()),)
        return p

    @staticmethod
    def symbol(sym: SymbolId) -> "Polynomial":
        p = Polynomial.__new__(Polynomial)
        p._terms = (Monomial(Fraction(1), ((sym, 1),)),)
        return p

    @property
    def terms(self) -> tuple[Monomial, ...]:
        return self._terms

    @property
    def symbols(self) -> frozenset[SymbolId]:
        return frozenset(s for m in self._terms for s, _ in m.exponents)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other: object) -> bool:
        other_p = _try_coerce(other)
        if other_p is None:
            return NotImplemented
        return self._terms == other_p._terms

    def __hash__(self) -> int:
        return hash(self._terms)

    def __add__(self, other) -> "Polynomial":
        other_p = _try_coerce(other)
        if other_p is None:
            return NotImplemented
        acc = {m.exponents: m.coefficient for m in self._terms}
        for m in other_p._terms:
            acc[m.exponents] = acc.get(m.exponents, Fraction(0)) + m.coefficient
        return _wrap(_from_dict(acc))

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return _wrap(tuple(Monomial(-m.coefficient, m.exponents) for m in self._terms))

    def __sub__(self, other) -> "Polynomial":
        other_p = _try_coerce(other)
        if other_p is None:
            return NotImplemented
        return self + (-other_p)

    def __rsub__(self, other) -> "Polynomial":
        other_p = _try_coerce(other)
        if other_p is None:
            return NotImplemented
        return other_p + (-self)

    def __mul__(self, other) -> "Polynomial":
        other_p = _try_coerce(other)
        if other_p is None:
            return NotImplemented
        acc: dict[Exponents, Fraction] = {}
        for a in self._terms:
            for b in other_p._terms:
                exps = _merge_exponents(a.exponents, b.exponents)
                acc[exps] = acc.get(exps, Fraction(0)) + a.coefficient * b.coefficient
        return _wrap(_from_dict(acc))

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial exponent must be a nonnegative integer")
        out = Polynomial.one()
        for _ in range(n):
            out = out * self
        return out

    def evaluate(self, point: Mapping[SymbolId, object]):
        """Evaluate at a point mapping symbols to numbers.

        The arithmetic type of the inputs is preserved: rational values in,
        rational value out; floats in, float out.  Powers are expanded as
        repeated multiplication.  Raises MissingSymbolError for any symbol
        of the polynomial absent from the point.
        """
        total = None
        for m in self._terms:
            v = m.coefficient
            for sym, e in m.exponents:
                try:
                    x = point[sym]
                except KeyError:
                    raise MissingSymbolError(sym) from None
                for _ in range(e):
                    v = v * x
            total = v if total is None else total + v
        return Fraction(0) if total is None else total

    def substitute(self, env: Mapping[SymbolId, object]) -> "Polynomial":
        """Replace symbols with polynomials or exact numbers.

        Symbols absent from env pass through unchanged.  Numeric values
        must be exact (int or Fraction); floats would silently break the
        exact-arithmetic contract, so they are rejected.
        """
        out = Polynomial.zero()
        for m in self._terms:
            part = Polynomial.constant(m.coefficient)
            for sym, e in m.exponents:
                if sym in env:
                    part = part * (_coerce_exact(env[sym]) ** e)
                else:
                    part = part * (Polynomial.symbol(sym) ** e)
            out = out + part
        return out

    def __str__(self) -> str:
        return canonical_string(self)

    def __repr__(self) -> str:
        return f"<Polynomial {canonical_string(self)}>"


def _wrap(terms: tuple[Monomial, ...]) -> Polynomial:
    p = Polynomial.__new__(Polynomial)
    p._terms = terms
    return p


def _from_dict(acc: Mapping[Exponents, Fraction]) -> tuple[Monomial, ...]:
    items = [(e, c) for e, c in acc.items() if c != 0]
    items.sort(key=lambda ec: _storage_key(ec[0]))
    return tuple(Monomial(c, e) for e, c in items)


def _merge_exponents(a: Exponents, b: Exponents) -> Exponents:
    acc: dict[SymbolId, int] = dict(a)
    for s, e in b:
        acc[s] = acc.get(s, 0) + e
    return tuple(sorted(acc.items(), key=lambda se: _symbol_key(se[0])))


def _try_coerce(value) -> Polynomial | None:
    if isinstance(value, Polynomial):
        return value
    if isinstance(value, (int, Fraction)):
        return Polynomial.constant(value)
    return None


def _coerce_exact(value) -> Polynomial:
    p = _try_coerce(value)
    if p is None:
        raise TypeError(f"expected Polynomial, int, or Fraction, got {type(value).__name__}")
    return p


def monomial(coefficient: Number, powers: Mapping[SymbolId, int]) -> Polynomial:
    """Convenience constructor for a single-term polynomial."""
    exps = tuple(sorted(((s, e) for s, e in powers.items() if e != 0),
                        key=lambda se: _symbol_key(se[0])))
    for _, e in exps:
        if e < 0:
            raise ValueError("exponents must be nonnegative")
    c = Fraction(coefficient)
    return _wrap(() if c == 0 else (Monomial(c, exps),))


def falling_factorial(sym: SymbolId, n: int) -> Polynomial:
    """x*(x-1)*...*(x-n+1) as a polynomial in sym; n = 0 gives 1."""
    if sym.kind is not SymbolKind.SPECIES:
        raise ValueError(f"falling factorial is defined for species symbols, got rate {sym.name!r}")
    if not isinstance(n, int) or n < 0:
        raise ValueError("falling factorial order must be a nonnegative integer")
    x = Polynomial.symbol(sym)
    out = Polynomial.one()
    for i in range(n):
        out = out * (x - i)
    return out


def power(sym: SymbolId, n: int) -> Polynomial:
    """Plain power x^n, the mass-action counterpart of the exact rate."""
    if sym.kind is not SymbolKind.SPECIES:
        raise ValueError(f"power is defined for species symbols, got rate {sym.name!r}")
    if not isinstance(n, int) or n < 0:
        raise ValueError("power must be a nonnegative integer")
    return Polynomial.symbol(sym) ** n


# ---------------------------------------------------------------------------
# printing


def sorted_terms(p: Polynomial,
                 symbol_order: Sequence[SymbolId] | None = None) -> list[Monomial]:
    """Terms in display order: ascending lexicographic on exponent vectors.

    The exponent vector of each term is read off against a significance
    list: symbol_order first (most significant first), then any remaining
    symbols of the polynomial, species before rates, alphabetically.
    """
    present = p.symbols
    if symbol_order is None:
        sig = sorted(present, key=_symbol_key)
    else:
        sig = [s for s in symbol_order if s in present]
        seen = set(sig)
        sig += sorted((s for s in present if s not in seen), key=_symbol_key)

    def term_key(m: Monomial) -> tuple[int, ...]:
        e = dict(m.exponents)
        return tuple(e.get(s, 0) for s in sig)

    return sorted(p.terms, key=term_key)


def _term_body(coeff_abs: Fraction, exponents: Exponents) -> str:
    parts = []
    if coeff_abs != 1 or not exponents:
        parts.append(str(coeff_abs))
    ordered = sorted((se for se in exponents if se[0].kind is SymbolKind.RATE),
                     key=lambda se: se[0].name)
    ordered += sorted((se for se in exponents if se[0].kind is SymbolKind.SPECIES),
                      key=lambda se: se[0].name)
    for sym, e in ordered:
        parts.append(sym.name if e == 1 else f"{sym.name}^{e}")
    return "*".join(parts)


def canonical_string(p: Polynomial,
                     symbol_order: Sequence[SymbolId] | None = None) -> str:
    """Deterministic text form; parse_expression inverts it exactly."""
    terms = sorted_terms(p, symbol_order)
    if not terms:
        return "0"
    pieces = []
    for m in terms:
        body = _term_body(abs(m.coefficient), m.exponents)
        if not pieces:
            pieces.append("-" + body if m.coefficient < 0 else body)
        else:
            pieces.append(("- " if m.coefficient < 0 else "+ ") + body)
    return " ".join(pieces)


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"(?P<number>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()])")


class ExpressionSyntaxError(ValueError):
    """Syntax error with character position and what was expected there."""

    def __init__(self, message: str, position: int, expected: str | None = None):
        self.position = position
        self.expected = expected
        detail = f"{message} at position {position}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "name" | "op" | "end"
    text: str
    position: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(), i))
        i = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


def _symbol_table(symbols) -> dict[str, SymbolId]:
    if symbols is None:
        return {}
    if isinstance(symbols, Mapping):
        return dict(symbols)
    return {s.name: s for s in symbols}


class _Parser:
    def __init__(self, tokens: list[_Token], table: dict[str, SymbolId]):
        self.tokens = tokens
        self.pos = 0
        self.table = table

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def accept_op(self, op: str) -> bool:
        tok = self.peek()
        if tok.kind == "op" and tok.text == op:
            self.pos += 1
            return True
        return False

    def parse_expr(self) -> Polynomial:
        negate = self.accept_op("-")
        p = self.parse_term()
        if negate:
            p = -p
        while True:
            if self.accept_op("+"):
                p = p + self.parse_term()
            elif self.accept_op("-"):
                p = p - self.parse_term()
            else:
                return p

    def parse_term(self) -> Polynomial:
        p = self.parse_factor()
        while self.accept_op("*"):
            p = p * self.parse_factor()
        return p

    def parse_factor(self) -> Polynomial:
        tok = self.peek()
        if tok.kind == "number":
            self.take()
            if "." not in tok.text and self.accept_op("/"):
                den = self.peek()
                if den.kind != "number" or "." in den.text:
                    raise ExpressionSyntaxError("bad rational literal", den.position,
                                                expected="an integer denominator")
                self.take()
                return Polynomial.constant(Fraction(int(tok.text), int(den.text)))
            return Polynomial.constant(Fraction(tok.text))
        if tok.kind == "name":
            self.take()
            sym = self.table.get(tok.text)
            if sym is None:
                sym = SymbolId(tok.text, SymbolKind.SPECIES)
            p = Polynomial.symbol(sym)
            if self.accept_op("^"):
                exp = self.peek()
                if exp.kind != "number" or "." in exp.text:
                    raise ExpressionSyntaxError("bad exponent", exp.position,
                                                expected="a nonnegative integer")
                self.take()
                return p ** int(exp.text)
            return p
        if tok.kind == "op" and tok.text == "(":
            self.take()
            p = self.parse_expr()
            if not self.accept_op(")"):
                raise ExpressionSyntaxError("unbalanced parenthesis",
                                            self.peek().position, expected="')'")
            return p
        raise ExpressionSyntaxError(f"unexpected {tok.text!r}" if tok.kind != "end"
                                    else "unexpected end of input",
                                    tok.position,
                                    expected="a number, symbol, or '('")

    def expect_end(self) -> None:
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionSyntaxError(f"unexpected {tok.text!r}", tok.position,
                                        expected="'+', '-', '*', or end of input")


def parse_expression(text: str, symbols=None) -> Polynomial:
    """Parse an expression in +, -, *, ^uint, parentheses, and literals.

    Literals are nonnegative decimals or integer rationals p/q; a single
    leading minus is allowed at the head of an expression or parenthesized
    subexpression.  symbols maps names to SymbolId (a mapping or iterable);
    unknown names default to species.
    """
    parser = _Parser(_tokenize(text), _symbol_table(symbols))
    p = parser.parse_expr()
    parser.expect_end()
    return p


def bind_values(p: Polynomial, values: Mapping[SymbolId, object]) -> Polynomial:
    """Substitute exact numeric values for symbols.

    Accepts int, Fraction, or float values; floats are converted to the
    exact rational they represent, so binding never rounds.
    """
    env = {}
    for sym, v in values.items():
        if isinstance(v, float):
            v = Fraction(v)
        env[sym] = v
    return p.substitute(env)


# ---------------------------------------------------------------------------
# numeric compilation


def as_function(p: Polynomial, args: Sequence[SymbolId]) -> Callable:
    """Compile to a float function of positional arguments in args order.

    Works elementwise when the arguments are numpy arrays.  All of the
    polynomial's symbols must appear in args.
    """
    index = {s: i for i, s in enumerate(args)}
    compiled = []
    for m in p.terms:
        idx = []
        for sym, e in m.exponents:
            if sym not in index:
                raise MissingSymbolError(sym)
            idx.append((index[sym], e))
        compiled.append((float(m.coefficient), tuple(idx)))
    compiled_t = tuple(compiled)

    def fn(*values):
        total = 0.0
        for c, idx in compiled_t:
            t = c
            for i, e in idx:
                v = values[i]
                for _ in range(e):
                    t = t * v
            total = total + t
        return total

    return fn
