"""Symbolic scalar functions of the coordinates, with exact differentiation.

The node set is deliberately small: exact complex-rational constants,
coordinate variables, named parameters, n-ary sums and products, quotients,
integer powers, and the exponential.  That is enough for every slope table
and auxiliary function in scope, while keeping differentiation and exact
evaluation closed and fast.

Construction goes through the builder functions (`add`, `mul`, `div`,
`power`, `exp_of`), which perform cheap local normalization: constants fold,
zeros and ones are absorbed, sums collect like terms, products collect like
bases and pull inner quotients up.  `simplify` runs the builders bottom-up to
a fixed point, so it is idempotent by construction.  No canonical form is
guaranteed; semantic equality is checked by evaluation at random exact
points.

Evaluation is exact (complex rationals) on exact points as long as no `exp`
node is reached; it degrades to floating complex otherwise.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction

from .errors import ExpressionError, ParseError, PoleAtPoint


class QC:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, *_):
        raise AttributeError("QC is immutable")

    @property
    def is_zero(self) -> bool:
        return not self.re and not self.im

    @property
    def is_real(self) -> bool:
        return not self.im

    def __add__(self, other):
        other = _as_qc(other)
        if other is NotImplemented:
            return NotImplemented
        return QC(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return QC(-self.re, -self.im)

    def __sub__(self, other):
        other = _as_qc(other)
        if other is NotImplemented:
            return NotImplemented
        return QC(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _as_qc(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = _as_qc(other)
        if other is NotImplemented:
            return NotImplemented
        return QC(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_qc(other)
        if other is NotImplemented:
            return NotImplemented
        norm = other.re * other.re + other.im * other.im
        if not norm:
            raise ZeroDivisionError("division by zero QC")
        return QC(
            (self.re * other.re + self.im * other.im) / norm,
            (self.im * other.re - self.re * other.im) / norm,
        )

    def __rtruediv__(self, other):
        other = _as_qc(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return QC(1) / (self ** (-k))
        out = QC(1)
        base = self
        e = k
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __eq__(self, other):
        other = _as_qc(other)
        if other is NotImplemented:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im >= 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


def _as_qc(v):
    if isinstance(v, QC):
        return v
    if isinstance(v, (int, Fraction)):
        return QC(v)
    return NotImplemented


QC_ZERO = QC(0)
QC_ONE = QC(1)

Scalar = "QC | complex"


@dataclass(frozen=True)
class Point:
    """An evaluation point: n coordinates, tagged exact or floating."""

    coords: tuple
    exact: bool = True

    @property
    def n(self) -> int:
        return len(self.coords)

    def as_float(self) -> "Point":
        return Point(tuple(complex(c) for c in self.coords), exact=False)


def rational_point(*coords) -> Point:
    return Point(tuple(QC(Fraction(c)) for c in coords), exact=True)


class Expr:
    """Immutable expression node; subclasses carry the payload."""

    __slots__ = ("_hash",)
    precedence = 10

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._key() == other._key()

    def _key(self):
        raise NotImplementedError

    def __repr__(self):
        return to_text(self)


class Const(Expr):
    __slots__ = ("value",)
    precedence = 10

    def __init__(self, value):
        if not isinstance(value, QC):
            value = QC(value)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "_hash", hash(("c", value)))

    def _key(self):
        return self.value


class Var(Expr):
    """Coordinate variable, 1-based index."""

    __slots__ = ("index",)
    precedence = 10

    def __init__(self, index: int):
        if index < 1:
            raise ExpressionError(f"variable index must be >= 1, got {index}")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "_hash", hash(("v", index)))

    def _key(self):
        return self.index


class Param(Expr):
    __slots__ = ("name",)
    precedence = 10

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "_hash", hash(("p", name)))

    def _key(self):
        return self.name


class Add(Expr):
    __slots__ = ("terms",)
    precedence = 1

    def __init__(self, terms: tuple):
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "_hash", hash(("+",) + tuple(t._hash for t in terms)))

    def _key(self):
        return self.terms


class Mul(Expr):
    __slots__ = ("factors",)
    precedence = 2

    def __init__(self, factors: tuple):
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "_hash", hash(("*",) + tuple(f._hash for f in factors)))

    def _key(self):
        return self.factors


class Div(Expr):
    __slots__ = ("num", "den")
    precedence = 2

    def __init__(self, num: Expr, den: Expr):
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "_hash", hash(("/", num._hash, den._hash)))

    def _key(self):
        return (self.num, self.den)


class Pow(Expr):
    __slots__ = ("base", "exponent")
    precedence = 3

    def __init__(self, base: Expr, exponent: int):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", exponent)
        object.__setattr__(self, "_hash", hash(("^", base._hash, exponent)))

    def _key(self):
        return (self.base, self.exponent)


class Exp(Expr):
    __slots__ = ("arg",)
    precedence = 10

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", arg)
        object.__setattr__(self, "_hash", hash(("exp", arg._hash)))

    def _key(self):
        return self.arg


# Hash-consing: structurally equal nodes are interned to a single object, so
# memo tables shared across derivatives hit by identity and evaluation visits
# each distinct subexpression once per point.
_INTERN: dict = {}


def _intern(node: Expr) -> Expr:
    hit = _INTERN.get(node)
    if hit is not None:
        return hit
    _INTERN[node] = node
    return node


def clear_intern_table() -> None:
    _INTERN.clear()


ZERO = _intern(Const(QC_ZERO))
ONE = _intern(Const(QC_ONE))
MINUS_ONE = _intern(Const(QC(-1)))


def const(v) -> Const:
    if isinstance(v, Const):
        return _intern(v)
    return _intern(Const(v))


def var(index: int) -> Var:
    return _intern(Var(index))


def param(name: str) -> Param:
    return _intern(Param(name))


def _split_coeff(t: Expr):
    """Decompose a term as (constant coefficient, core expression)."""
    if isinstance(t, Mul) and isinstance(t.factors[0], Const):
        rest = t.factors[1:]
        core = rest[0] if len(rest) == 1 else Mul(rest)
        return t.factors[0].value, core
    return QC_ONE, t


def add(*terms) -> Expr:
    """Sum builder: flattens, folds constants, collects like terms."""
    flat: list[Expr] = []
    for t in terms:
        if isinstance(t, Add):
            flat.extend(t.terms)
        else:
            flat.append(t)
    acc = QC_ZERO
    buckets: dict[Expr, QC] = {}
    order: list[Expr] = []
    for t in flat:
        if isinstance(t, Const):
            acc = acc + t.value
            continue
        coeff, core = _split_coeff(t)
        if core in buckets:
            buckets[core] = buckets[core] + coeff
        else:
            buckets[core] = coeff
            order.append(core)
    out: list[Expr] = []
    for core in order:
        coeff = buckets[core]
        if coeff.is_zero:
            continue
        if coeff == QC_ONE:
            out.append(core)
        else:
            out.append(mul(const(coeff), core))
    if not acc.is_zero:
        out.append(const(acc))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return _intern(Add(tuple(out)))


def _split_power(f: Expr):
    if isinstance(f, Pow):
        return f.base, f.exponent
    return f, 1


def mul(*factors) -> Expr:
    """Product builder: flattens, folds constants, collects like bases,
    and pulls inner quotients up into a single quotient."""
    flat: list[Expr] = []
    for f in factors:
        if isinstance(f, Mul):
            flat.extend(f.factors)
        else:
            flat.append(f)
    num_parts: list[Expr] = []
    den_parts: list[Expr] = []
    for f in flat:
        if isinstance(f, Div):
            num_parts.append(f.num)
            den_parts.append(f.den)
        else:
            num_parts.append(f)
    if den_parts:
        return div(_mul_flat(num_parts), _mul_flat(den_parts))
    return _mul_flat(num_parts)


def _mul_flat(factors: list) -> Expr:
    coeff = QC_ONE
    buckets: dict[Expr, int] = {}
    order: list[Expr] = []
    for f in factors:
        if isinstance(f, Mul):
            sub_c, sub_b, sub_o = _mul_parts(f)
            coeff = coeff * sub_c
            for base in sub_o:
                if base in buckets:
                    buckets[base] += sub_b[base]
                else:
                    buckets[base] = sub_b[base]
                    order.append(base)
            continue
        if isinstance(f, Const):
            coeff = coeff * f.value
            continue
        base, expo = _split_power(f)
        if base in buckets:
            buckets[base] += expo
        else:
            buckets[base] = expo
            order.append(base)
    if coeff.is_zero:
        return ZERO
    out: list[Expr] = []
    for base in order:
        e = buckets[base]
        if e == 0:
            continue
        out.append(base if e == 1 else _intern(Pow(base, e)))
    if not out:
        return const(coeff)
    if coeff != QC_ONE:
        out.insert(0, const(coeff))
    if len(out) == 1:
        return out[0]
    return _intern(Mul(tuple(out)))


def _mul_parts(m: Mul):
    coeff = QC_ONE
    buckets: dict[Expr, int] = {}
    order: list[Expr] = []
    for f in m.factors:
        if isinstance(f, Const):
            coeff = coeff * f.value
            continue
        base, expo = _split_power(f)
        if base in buckets:
            buckets[base] += expo
        else:
            buckets[base] = expo
            order.append(base)
    return coeff, buckets, order


def div(num, den) -> Expr:
    if isinstance(num, Div):
        return div(num.num, mul(num.den, den))
    if isinstance(den, Div):
        return div(mul(num, den.den), den.num)
    if isinstance(den, Const):
        if den.value.is_zero:
            raise ExpressionError("division by the zero constant")
        if den.value == QC_ONE:
            return num
        return mul(const(QC_ONE / den.value), num)
    if isinstance(num, Const) and num.value.is_zero:
        return ZERO
    if num is den or num == den:
        return ONE
    return _intern(Div(num, den))


def power(base, k: int) -> Expr:
    if not isinstance(k, int):
        raise ExpressionError(f"power exponent must be an integer, got {k!r}")
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const):
        if base.value.is_zero and k < 0:
            raise ExpressionError("zero constant to a negative power")
        return const(base.value**k)
    if isinstance(base, Pow):
        return power(base.base, base.exponent * k)
    if isinstance(base, Div):
        if k > 0:
            return div(power(base.num, k), power(base.den, k))
        return div(power(base.den, -k), power(base.num, -k))
    return _intern(Pow(base, k))


def exp_of(arg) -> Expr:
    if isinstance(arg, Const) and arg.value.is_zero:
        return ONE
    return _intern(Exp(arg))


def neg(e: Expr) -> Expr:
    return mul(MINUS_ONE, e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def differentiate(e: Expr, lam: int, memo: dict | None = None) -> Expr:
    """Exact partial derivative with respect to coordinate lam (1-based).

    Repeated application implements derivatives for any multi-index.  Pass a
    shared `memo` dict to reuse work across many derivatives of the same web.
    """
    if lam < 1:
        raise ExpressionError(f"coordinate index must be >= 1, got {lam}")
    if memo is None:
        memo = {}
    return _diff(e, lam, memo)


def _diff(e: Expr, lam: int, memo: dict) -> Expr:
    key = (e, lam)
    hit = memo.get(key)
    if hit is not None:
        return hit
    if isinstance(e, (Const, Param)):
        out = ZERO
    elif isinstance(e, Var):
        out = ONE if e.index == lam else ZERO
    elif isinstance(e, Add):
        out = add(*[_diff(t, lam, memo) for t in e.terms])
    elif isinstance(e, Mul):
        pieces = []
        for i, f in enumerate(e.factors):
            df = _diff(f, lam, memo)
            if isinstance(df, Const) and df.value.is_zero:
                continue
            pieces.append(mul(*e.factors[:i], df, *e.factors[i + 1 :]))
        out = add(*pieces)
    elif isinstance(e, Div):
        du = _diff(e.num, lam, memo)
        dv = _diff(e.den, lam, memo)
        out = div(sub(mul(du, e.den), mul(e.num, dv)), power(e.den, 2))
    elif isinstance(e, Pow):
        out = mul(const(QC(e.exponent)), power(e.base, e.exponent - 1), _diff(e.base, lam, memo))
    elif isinstance(e, Exp):
        out = mul(_diff(e.arg, lam, memo), e)
    else:
        raise ExpressionError(f"cannot differentiate node {type(e).__name__}")
    memo[key] = out
    return out


def derivative_for_index(e: Expr, L, memo: dict | None = None) -> Expr:
    """Higher-order derivative for a multi-index L (slot s = coordinate s+1)."""
    if memo is None:
        memo = {}
    out = e
    for slot, count in enumerate(L):
        for _ in range(count):
            out = _diff(out, slot + 1, memo)
    return out


def simplify(e: Expr) -> Expr:
    """Rebuild bottom-up through the builders until a fixed point is reached."""
    current = e
    for _ in range(20):
        rebuilt = _rebuild(current)
        if rebuilt == current:
            return rebuilt
        current = rebuilt
    return current


def _rebuild(e: Expr) -> Expr:
    if isinstance(e, (Const, Var, Param)):
        return e
    if isinstance(e, Add):
        return add(*[_rebuild(t) for t in e.terms])
    if isinstance(e, Mul):
        return mul(*[_rebuild(f) for f in e.factors])
    if isinstance(e, Div):
        return div(_rebuild(e.num), _rebuild(e.den))
    if isinstance(e, Pow):
        return power(_rebuild(e.base), e.exponent)
    if isinstance(e, Exp):
        return exp_of(_rebuild(e.arg))
    raise ExpressionError(f"cannot simplify node {type(e).__name__}")


def substitute(e: Expr, var_map: dict | None = None, param_map: dict | None = None) -> Expr:
    """Replace variables and/or parameters by expressions (or scalars)."""
    var_map = var_map or {}
    param_map = param_map or {}

    def conv(v):
        if isinstance(v, Expr):
            return v
        return const(QC(v) if not isinstance(v, QC) else v)

    def walk(node: Expr) -> Expr:
        if isinstance(node, Const):
            return node
        if isinstance(node, Var):
            rep = var_map.get(node.index)
            return conv(rep) if rep is not None else node
        if isinstance(node, Param):
            rep = param_map.get(node.name)
            return conv(rep) if rep is not None else node
        if isinstance(node, Add):
            return add(*[walk(t) for t in node.terms])
        if isinstance(node, Mul):
            return mul(*[walk(f) for f in node.factors])
        if isinstance(node, Div):
            return div(walk(node.num), walk(node.den))
        if isinstance(node, Pow):
            return power(walk(node.base), node.exponent)
        if isinstance(node, Exp):
            return exp_of(walk(node.arg))
        raise ExpressionError(f"cannot substitute into {type(node).__name__}")

    return walk(e)


def evaluate(e: Expr, point: Point, params: dict | None = None, cache: dict | None = None):
    """Value of the expression at a point.

    Exact (QC) on exact points while no `exp` node is reached; floating
    complex otherwise.  Raises PoleAtPoint when a denominator vanishes and
    ExpressionError for unbound parameters.
    """
    if cache is None:
        cache = {}
    return _eval(e, point.coords, params or {}, cache)


def _eval(e: Expr, coords: tuple, params: dict, cache: dict):
    key = id(e)
    hit = cache.get(key)
    if hit is not None:
        return hit
    if isinstance(e, Const):
        out = e.value
    elif isinstance(e, Var):
        if e.index > len(coords):
            raise ExpressionError(
                f"expression uses x{e.index} but the point has {len(coords)} coordinates"
            )
        out = coords[e.index - 1]
    elif isinstance(e, Param):
        if e.name not in params:
            raise ExpressionError(f"unbound parameter {e.name!r}")
        out = params[e.name]
    elif isinstance(e, Add):
        out = QC_ZERO
        for t in e.terms:
            out = _sc_add(out, _eval(t, coords, params, cache))
    elif isinstance(e, Mul):
        out = QC_ONE
        for f in e.factors:
            out = _sc_mul(out, _eval(f, coords, params, cache))
    elif isinstance(e, Div):
        den = _eval(e.den, coords, params, cache)
        if _sc_is_zero(den):
            raise PoleAtPoint(f"denominator {e.den!r} vanishes at the point")
        out = _sc_div(_eval(e.num, coords, params, cache), den)
    elif isinstance(e, Pow):
        base = _eval(e.base, coords, params, cache)
        if e.exponent < 0 and _sc_is_zero(base):
            raise PoleAtPoint(f"base {e.base!r} vanishes under a negative power")
        out = base**e.exponent
    elif isinstance(e, Exp):
        out = cmath.exp(complex(_eval(e.arg, coords, params, cache)))
    else:
        raise ExpressionError(f"cannot evaluate node {type(e).__name__}")
    cache[key] = out
    return out


def _sc_add(a, b):
    if isinstance(a, QC) and isinstance(b, QC):
        return a + b
    return complex(a) + complex(b)


def _sc_mul(a, b):
    if isinstance(a, QC) and isinstance(b, QC):
        return a * b
    return complex(a) * complex(b)


def _sc_div(a, b):
    if isinstance(a, QC) and isinstance(b, QC):
        return a / b
    return complex(a) / complex(b)


def _sc_is_zero(v) -> bool:
    if isinstance(v, QC):
        return v.is_zero
    return v == 0


def is_zero_constant(e: Expr) -> bool:
    return isinstance(e, Const) and e.value.is_zero


def uses_exp(e: Expr) -> bool:
    if isinstance(e, Exp):
        return True
    if isinstance(e, Add):
        return any(uses_exp(t) for t in e.terms)
    if isinstance(e, Mul):
        return any(uses_exp(f) for f in e.factors)
    if isinstance(e, Div):
        return uses_exp(e.num) or uses_exp(e.den)
    if isinstance(e, Pow):
        return uses_exp(e.base)
    return False


def free_parameters(e: Expr) -> set:
    if isinstance(e, Param):
        return {e.name}
    if isinstance(e, Add):
        return set().union(*[free_parameters(t) for t in e.terms])
    if isinstance(e, Mul):
        return set().union(*[free_parameters(f) for f in e.factors])
    if isinstance(e, Div):
        return free_parameters(e.num) | free_parameters(e.den)
    if isinstance(e, (Pow, Exp)):
        inner = e.base if isinstance(e, Pow) else e.arg
        return free_parameters(inner)
    return set()


# ---------------------------------------------------------------------------
# text syntax:  infix + - * / ^, exp(...), variables x1..xn (x,y,z for n<=3),
# integer literals (rationals are written p/q), identifiers become parameters.
# ---------------------------------------------------------------------------

_ALIAS = {"x": 1, "y": 2, "z": 3}


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []
        self._scan()
        self.idx = 0

    def _scan(self):
        text = self.text
        i = 0
        while i < len(text):
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if ch.isdigit():
                j = i
                while j < len(text) and text[j].isdigit():
                    j += 1
                self.tokens.append(("num", text[i:j], i))
                i = j
                continue
            if ch.isalpha() or ch == "_":
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("ident", text[i:j], i))
                i = j
                continue
            if ch in "+-*/^(),":
                self.tokens.append((ch, ch, i))
                i += 1
                continue
            raise ParseError(f"unexpected character {ch!r}", column=i)
        self.tokens.append(("end", "", len(text)))

    def peek(self):
        return self.tokens[self.idx]

    def next(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok


class _Parser:
    def __init__(self, text: str, n: int):
        self.toks = _Tokenizer(text)
        self.n = n

    def parse(self) -> Expr:
        e = self._sum()
        kind, val, pos = self.toks.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", column=pos)
        return e

    def _sum(self) -> Expr:
        terms = [self._term()]
        while True:
            kind, _, _ = self.toks.peek()
            if kind == "+":
                self.toks.next()
                terms.append(self._term())
            elif kind == "-":
                self.toks.next()
                terms.append(neg(self._term()))
            else:
                return add(*terms)

    def _term(self) -> Expr:
        out = self._unary()
        while True:
            kind, _, _ = self.toks.peek()
            if kind == "*":
                self.toks.next()
                out = mul(out, self._unary())
            elif kind == "/":
                self.toks.next()
                out = div(out, self._unary())
            else:
                return out

    def _unary(self) -> Expr:
        kind, _, _ = self.toks.peek()
        if kind == "-":
            self.toks.next()
            return neg(self._unary())
        if kind == "+":
            self.toks.next()
            return self._unary()
        return self._power()

    def _power(self) -> Expr:
        base = self._atom()
        kind, _, _ = self.toks.peek()
        if kind == "^":
            self.toks.next()
            return power(base, self._int_exponent())
        return base

    def _int_exponent(self) -> int:
        sign = 1
        kind, val, pos = self.toks.peek()
        parens = kind == "("
        if parens:
            self.toks.next()
            kind, val, pos = self.toks.peek()
        if kind == "-":
            self.toks.next()
            sign = -1
            kind, val, pos = self.toks.peek()
        if kind != "num":
            raise ParseError("power exponent must be an integer literal", column=pos)
        self.toks.next()
        if parens:
            kind2, val2, pos2 = self.toks.next()
            if kind2 != ")":
                raise ParseError("expected ')' after exponent", column=pos2)
        return sign * int(val)

    def _atom(self) -> Expr:
        kind, val, pos = self.toks.next()
        if kind == "num":
            return const(QC(int(val)))
        if kind == "(":
            e = self._sum()
            kind2, val2, pos2 = self.toks.next()
            if kind2 != ")":
                raise ParseError(f"expected ')', got {val2!r}", column=pos2)
            return e
        if kind == "ident":
            if val == "exp":
                kind2, _, pos2 = self.toks.next()
                if kind2 != "(":
                    raise ParseError("exp requires parentheses", column=pos2)
                arg = self._sum()
                kind3, val3, pos3 = self.toks.next()
                if kind3 != ")":
                    raise ParseError(f"expected ')', got {val3!r}", column=pos3)
                return exp_of(arg)
            if self.n <= 3 and val in _ALIAS:
                idx = _ALIAS[val]
                if idx > self.n:
                    raise ParseError(f"variable {val!r} exceeds dimension {self.n}", column=pos)
                return var(idx)
            if val.startswith("x") and val[1:].isdigit():
                idx = int(val[1:])
                if 1 <= idx <= self.n:
                    return var(idx)
                raise ParseError(f"variable {val!r} exceeds dimension {self.n}", column=pos)
            return param(val)
        raise ParseError(f"unexpected {val!r}", column=pos)


def parse_expression(text: str, n: int) -> Expr:
    """Parse infix expression text for an n-dimensional coordinate domain."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression")
    return _Parser(text, n).parse()


def _const_text(v: QC) -> str:
    if v.is_real:
        return str(v.re)
    return repr(v)


def to_text(e: Expr, n: int = 3) -> str:
    """Infix rendering; parseable back when all constants are real."""

    def paren(child: Expr, level: int) -> str:
        s = walk(child)
        if child.precedence < level:
            return f"({s})"
        return s

    def walk(node: Expr) -> str:
        if isinstance(node, Const):
            val = node.value
            if val.is_real and val.re < 0:
                return f"-{_const_text(-val)}"
            return _const_text(val)
        if isinstance(node, Var):
            if n <= 3 and node.index <= 3:
                return "xyz"[node.index - 1] if node.index <= len("xyz") else f"x{node.index}"
            return f"x{node.index}"
        if isinstance(node, Param):
            return node.name
        if isinstance(node, Add):
            parts = []
            for i, t in enumerate(node.terms):
                coeff, core = _split_coeff(t)
                s = paren(t, 1)
                if i and not s.startswith("-"):
                    parts.append("+")
                parts.append(s)
            return " ".join(parts).replace("+ -", "- ")
        if isinstance(node, Mul):
            first = node.factors[0]
            if isinstance(first, Const) and first.value == QC(-1) and len(node.factors) > 1:
                rest = mul(*node.factors[1:])
                return f"-{paren(rest, 2)}"
            return "*".join(paren(f, 2) for f in node.factors)
        if isinstance(node, Div):
            num = paren(node.num, 2)
            den = walk(node.den)
            if node.den.precedence <= 2:
                den = f"({den})"
            return f"{num}/{den}"
        if isinstance(node, Pow):
            expo = node.exponent
            base = paren(node.base, 4)
            if isinstance(node.base, (Var, Param)):
                base = walk(node.base)
            return f"{base}^{expo}" if expo >= 0 else f"{base}^({expo})"
        if isinstance(node, Exp):
            return f"exp({walk(node.arg)})"
        raise ExpressionError(f"cannot print node {type(node).__name__}")

    return walk(e)
