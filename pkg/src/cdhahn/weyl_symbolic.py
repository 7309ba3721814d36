"""Normal-ordered operators z^m d^k with coefficients that are exact rational
polynomials in A, B, C.

The only rewriting rule is d z = 1 + z d.  The operators X and Y encoding
the three-term recursion of the martingale polynomials are built here,
and the commutation relation XY - YX = X^2/2 + 2Y is checked symbolically.
"""
from fractions import Fraction
from functools import lru_cache
import re

from .errors import ArgumentError

__all__ = [
    "MultiPoly", "WeylOperator", "compose", "build_X", "build_Y", "apply_to_monomial",
    "operator_matrix", "commutator_residual_operator", "verify_commutator_symbolic",
    "parse_operator", "reorder",
]

_VARS = ("A", "B", "C")


class MultiPoly:
    """Sparse polynomial in A, B, C: {(a, b, c): Fraction}, zero terms dropped."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for e, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                clean[tuple(e)] = c
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def const(cls, c):
        return cls({(0, 0, 0): c})

    @classmethod
    def var(cls, name):
        e = [0, 0, 0]
        e[_VARS.index(name)] = 1
        return cls({tuple(e): 1})

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.const(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.const(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MultiPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, MultiPoly) else MultiPoly.const(-Fraction(other)))

    def __rsub__(self, other):
        return MultiPoly.const(other) - self

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            k = Fraction(other)
            return MultiPoly({e: c * k for e, c in self.terms.items()})
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly(out)

    __rmul__ = __mul__

    def subs(self, A, B, C):
        vals = (Fraction(A), Fraction(B), Fraction(C))
        total = Fraction(0)
        for e, c in self.terms.items():
            total += c * vals[0] ** e[0] * vals[1] ** e[1] * vals[2] ** e[2]
        return total

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        # highest total degree first, then lexicographic on exponents
        for e, c in sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), tuple(-x for x in kv[0]))):
            mono = "*".join(v if p == 1 else f"{v}^{p}" for v, p in zip(_VARS, e) if p)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__


class WeylOperator:
    """Sum of coeff * z^m d^k kept in normal order: {(m, k): MultiPoly}."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for mk, c in (terms or {}).items():
            if not isinstance(c, MultiPoly):
                c = MultiPoly.const(c)
            if c:
                clean[tuple(mk)] = c
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def identity(cls):
        return cls({(0, 0): 1})

    @classmethod
    def z(cls):
        return cls({(1, 0): 1})

    @classmethod
    def d(cls):
        return cls({(0, 1): 1})

    @classmethod
    def scalar(cls, c):
        return cls({(0, 0): c if isinstance(c, MultiPoly) else MultiPoly.const(c)})

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, WeylOperator) and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def __add__(self, other):
        other = _lift(other)
        out = dict(self.terms)
        for mk, c in other.terms.items():
            out[mk] = out[mk] + c if mk in out else c
        return WeylOperator(out)

    __radd__ = __add__

    def __neg__(self):
        return WeylOperator({mk: -c for mk, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        if isinstance(other, WeylOperator):
            return compose(self, other)
        return WeylOperator({mk: c * other for mk, c in self.terms.items()})

    def __rmul__(self, other):
        return WeylOperator({mk: other * c for mk, c in self.terms.items()})

    def __pow__(self, n):
        if n < 0:
            raise ArgumentError("negative operator power")
        out = WeylOperator.identity()
        for _ in range(n):
            out = compose(out, self)
        return out

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c})*z^{m}*d^{k}" for (m, k), c in self.terms.items())

    __repr__ = __str__


def _lift(x):
    if isinstance(x, WeylOperator):
        return x
    return WeylOperator.scalar(x)


@lru_cache(maxsize=None)
def _d_past_zpow(m):
    """d z^m in normal order, using only d z = 1 + z d:
    d z^m = (1 + z d) z^(m-1) = z^(m-1) + z (d z^(m-1))."""
    if m == 0:
        return {(0, 1): 1}
    out = {(m - 1, 0): 1}
    for (a, b), c in _d_past_zpow(m - 1).items():
        out[(a + 1, b)] = out.get((a + 1, b), 0) + c
    return out


@lru_cache(maxsize=None)
def reorder(k, m):
    """d^k z^m as {(m', k'): integer}, peeling one d at a time."""
    if k == 0:
        return {(m, 0): 1}
    out = {}
    for (a, b), c in reorder(k - 1, m).items():
        # d z^a d^b = (d z^a) d^b
        for (a2, b2), c2 in _d_past_zpow(a).items():
            key = (a2, b2 + b)
            out[key] = out.get(key, 0) + c * c2
    return {key: v for key, v in out.items() if v}


def compose(f: WeylOperator, g: WeylOperator) -> WeylOperator:
    """Normal-ordered product f g."""
    out = {}
    for (m1, k1), c1 in f.terms.items():
        for (m2, k2), c2 in g.terms.items():
            c12 = c1 * c2
            for (a, b), n in reorder(k1, m2).items():
                key = (m1 + a, b + k2)
                term = c12 * n
                out[key] = out[key] + term if key in out else term
    return WeylOperator(out)


def _euler():
    return WeylOperator({(1, 1): 1})


def _sym(name):
    return WeylOperator.scalar(MultiPoly.var(name))


def build_X(diagonal_offset=0):
    """X = 2(C + z d) + 2(A + C + z d)(B + C + z d) d.

    ``diagonal_offset`` adds a constant; any nonzero value breaks the
    commutation relation and is used as a mutation check.
    """
    A, B, C, N, d = _sym("A"), _sym("B"), _sym("C"), _euler(), WeylOperator.d()
    return 2 * (C + N) + 2 * ((A + C + N) * (B + C + N) * d) + diagonal_offset


def build_Y():
    """Y = z + (AB + AC + BC) + (2(A+B+C) - 1) z d + 2 (z d)^2
    + (A + B + z d)(A + C + z d)(B + C + z d) d."""
    A, B, C, N, d = _sym("A"), _sym("B"), _sym("C"), _euler(), WeylOperator.d()
    e2 = A * B + A * C + B * C
    lin = 2 * (A + B + C) - 1
    return (WeylOperator.z() + e2 + lin * N + 2 * (N * N)
            + (A + B + N) * (A + C + N) * (B + C + N) * d)


def apply_to_monomial(op: WeylOperator, n: int):
    """op applied to z^n, as {power: MultiPoly}."""
    if n < 0:
        raise ArgumentError("n must be non-negative")
    out = {}
    for (m, k), c in op.terms.items():
        if k > n:
            continue
        fall = 1
        for j in range(k):
            fall *= n - j
        p = n - k + m
        out[p] = out[p] + c * fall if p in out else c * fall
    return {p: c for p, c in sorted(out.items()) if c}


def operator_matrix(op: WeylOperator, K, A, B, C):
    """K x K block with entry (m, n) the z^m coefficient of op(z^n) at rational A, B, C."""
    M = [[Fraction(0)] * K for _ in range(K)]
    for n in range(K):
        for p, c in apply_to_monomial(op, n).items():
            if p < K:
                M[p][n] = c.subs(A, B, C)
    return M


def commutator_residual_operator(X=None, Y=None):
    X = build_X() if X is None else X
    Y = build_Y() if Y is None else Y
    return compose(X, Y) - compose(Y, X) - Fraction(1, 2) * compose(X, X) - 2 * Y


def verify_commutator_symbolic(X=None, Y=None) -> bool:
    """True iff XY - YX - X^2/2 - 2Y normal-orders to zero."""
    return commutator_residual_operator(X, Y).is_zero()


# ------------------------------------------------------------ parser

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([zdABCXY])|([-+*^/()]))")


def _tokenize(text):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ArgumentError(f"unexpected character at position {pos}: {text[pos:pos + 10]!r}")
        num, atom, op = m.groups()
        out.append(("num", Fraction(num)) if num else ("atom", atom) if atom else ("op", op))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens, atoms):
        self.toks = tokens
        self.i = 0
        self.atoms = atoms

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise ArgumentError(f"expected {value or 'a token'} at token {self.i}")
        self.i += 1
        return tok

    def expr(self):
        val = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            sign = self.take()[1]
            rhs = self.term()
            val = val + rhs if sign == "+" else val - rhs
        return val

    def _starts_factor(self):
        kind, v = self.peek()
        return kind in ("num", "atom") or (kind == "op" and v == "(")

    def term(self):
        val = self.factor()
        while True:
            if self.peek() == ("op", "*"):
                self.take()
                val = compose(val, self.factor())
            elif self.peek() == ("op", "/"):
                self.take()
                den = self.factor()
                if set(den.terms) - {(0, 0)} or not den.terms:
                    raise ArgumentError("division only by a nonzero number")
                c = den.terms[(0, 0)]
                if set(c.terms) != {(0, 0, 0)}:
                    raise ArgumentError("division only by a nonzero number")
                val = val * (1 / c.terms[(0, 0, 0)])
            elif self._starts_factor():
                val = compose(val, self.factor())
            else:
                return val

    def factor(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.factor()
        base = self.base()
        if self.peek() == ("op", "^"):
            self.take()
            kind, v = self.take()
            if kind != "num" or v.denominator != 1:
                raise ArgumentError("exponent must be a non-negative integer")
            base = base ** int(v)
        return base

    def base(self):
        kind, v = self.take()
        if kind == "num":
            return WeylOperator.scalar(v)
        if kind == "atom":
            if v == "z":
                return WeylOperator.z()
            if v == "d":
                return WeylOperator.d()
            if v in _VARS:
                return _sym(v)
            return self.atoms[v]
        if v == "(":
            val = self.expr()
            self.take(")")
            return val
        raise ArgumentError(f"unexpected {v!r}")


def parse_operator(text: str) -> WeylOperator:
    """Parse an operator expression.

    Atoms: z, d, A, B, C, numbers, and the prebuilt X and Y.  Operators:
    + - * / ^ and parentheses; juxtaposition composes.  Division is only by
    numbers.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise ArgumentError("empty operator expression")
    p = _Parser(tokens, {"X": build_X(), "Y": build_Y()})
    val = p.expr()
    if p.i != len(tokens):
        raise ArgumentError(f"trailing input at token {p.i}")
    return val
