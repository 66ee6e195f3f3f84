"""Closed-form scalar and vector-field expressions on the coordinate plane.

Expression trees over the coordinates x1, x2 built from sums, products,
rational/real powers and the transcendental functions exp, log, sin, cos,
arctan.  They support exact symbolic differentiation, substitution, infix
parsing/rendering, and compilation to fast scalar callables.  Every other
module evaluates these trees: quasi-Einstein solution bases, affine Killing
fields, embedding maps and closed-form geodesics are all stored in this form.

Expressions are immutable values and safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Union

Exponent = Union[Fraction, float]
Point = tuple[float, float]

_FUNCS = ("exp", "log", "sin", "cos", "arctan")


class DomainError(ValueError):
    """Evaluation left the natural domain (log of a non-positive value,
    negative base under a fractional power, division by zero)."""


class ParseError(ValueError):
    """Syntax or identifier error; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class ScalarExpr:
    """Base class for expression nodes.  Use the module-level constructors
    (`add`, `mul`, `power`, `exp`, ...) rather than the dataclasses directly;
    they perform the conservative simplifications (constant folding and 0/1
    elimination) that the rest of the code base relies on."""

    # Operator sugar so catalog code can write e.g. `x1 * exp(c * x2)`.
    def __add__(self, other):
        return add(self, _as_expr(other))

    def __radd__(self, other):
        return add(_as_expr(other), self)

    def __sub__(self, other):
        return sub(self, _as_expr(other))

    def __rsub__(self, other):
        return sub(_as_expr(other), self)

    def __mul__(self, other):
        return mul(self, _as_expr(other))

    def __rmul__(self, other):
        return mul(_as_expr(other), self)

    def __truediv__(self, other):
        return div(self, _as_expr(other))

    def __rtruediv__(self, other):
        return div(_as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)


@dataclass(frozen=True)
class Const(ScalarExpr):
    value: Union[Fraction, float]


@dataclass(frozen=True)
class Coord(ScalarExpr):
    axis: int  # 1 or 2


@dataclass(frozen=True)
class Sum(ScalarExpr):
    terms: tuple[ScalarExpr, ...]


@dataclass(frozen=True)
class Prod(ScalarExpr):
    factors: tuple[ScalarExpr, ...]


@dataclass(frozen=True)
class Pow(ScalarExpr):
    base: ScalarExpr
    exponent: Exponent


@dataclass(frozen=True)
class Func(ScalarExpr):
    name: str  # one of _FUNCS
    arg: ScalarExpr


x1 = Coord(1)
x2 = Coord(2)
ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def const(v) -> Const:
    if isinstance(v, Const):
        return v
    if isinstance(v, Fraction):
        return Const(v)
    if isinstance(v, int):
        return Const(Fraction(v))
    return Const(float(v))


def _as_expr(v) -> ScalarExpr:
    return v if isinstance(v, ScalarExpr) else const(v)


def _is_const(e: ScalarExpr, value=None) -> bool:
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


def add(*terms) -> ScalarExpr:
    """Sum with flattening; constants fold into the first constant slot."""
    flat: list[ScalarExpr] = []
    for t in terms:
        t = _as_expr(t)
        if isinstance(t, Sum):
            flat.extend(t.terms)
        else:
            flat.append(t)
    out: list[ScalarExpr] = []
    const_pos = -1
    acc = None
    for t in flat:
        if isinstance(t, Const):
            acc = t.value if acc is None else _num_add(acc, t.value)
            if const_pos < 0:
                const_pos = len(out)
                out.append(t)  # placeholder, replaced below
        else:
            out.append(t)
    if const_pos >= 0:
        if acc == 0 and len(out) > 1:
            del out[const_pos]
        else:
            out[const_pos] = Const(acc)
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Sum(tuple(out))


def mul(*factors) -> ScalarExpr:
    """Product with flattening, zero absorption, unit elimination."""
    flat: list[ScalarExpr] = []
    for f in factors:
        f = _as_expr(f)
        if isinstance(f, Prod):
            flat.extend(f.factors)
        else:
            flat.append(f)
    out: list[ScalarExpr] = []
    const_pos = -1
    acc = None
    for f in flat:
        if isinstance(f, Const):
            if f.value == 0:
                return ZERO
            acc = f.value if acc is None else _num_mul(acc, f.value)
            if const_pos < 0:
                const_pos = len(out)
                out.append(f)
        else:
            out.append(f)
    if const_pos >= 0:
        if acc == 1 and len(out) > 1:
            del out[const_pos]
        else:
            out[const_pos] = Const(acc)
    if not out:
        return ONE
    if len(out) == 1:
        return out[0]
    return Prod(tuple(out))


def _num_add(a, b):
    return a + b


def _num_mul(a, b):
    return a * b


def neg(e) -> ScalarExpr:
    return mul(const(-1), _as_expr(e))


def sub(a, b) -> ScalarExpr:
    return add(_as_expr(a), neg(b))


def power(base, exponent) -> ScalarExpr:
    """Power node.  Rational exponents are stored exactly as Fractions;
    float exponents stay floats (real powers such as x1^kappa)."""
    base = _as_expr(base)
    if isinstance(exponent, float) and exponent.is_integer() and abs(exponent) < 2**31:
        exponent = Fraction(int(exponent))
    elif isinstance(exponent, int):
        exponent = Fraction(exponent)
    if isinstance(exponent, Fraction):
        if exponent == 1:
            return base
        if exponent == 0:
            return ONE
        if isinstance(base, Const):
            folded = _try_fold_pow(base.value, exponent)
            if folded is not None:
                return Const(folded)
    return Pow(base, exponent)


def _try_fold_pow(v, p: Fraction):
    if isinstance(v, Fraction) and p.denominator == 1:
        if v == 0 and p < 0:
            return None
        return v ** int(p)
    try:
        return _pow_value(float(v), p)
    except (DomainError, OverflowError):
        return None


def div(a, b) -> ScalarExpr:
    return mul(_as_expr(a), power(b, -1))


def _func(name: str, arg) -> ScalarExpr:
    arg = _as_expr(arg)
    if isinstance(arg, Const):
        try:
            return Const(_func_value(name, float(arg.value)))
        except (DomainError, OverflowError):
            pass
    return Func(name, arg)


def exp(arg) -> ScalarExpr:
    return _func("exp", arg)


def log(arg) -> ScalarExpr:
    return _func("log", arg)


def sin(arg) -> ScalarExpr:
    return _func("sin", arg)


def cos(arg) -> ScalarExpr:
    return _func("cos", arg)


def arctan(arg) -> ScalarExpr:
    return _func("arctan", arg)


# ---------------------------------------------------------------------------
# evaluation


def _pow_value(u: float, p) -> float:
    if isinstance(p, int):
        p = Fraction(p)
    pf = float(p)
    if isinstance(p, Fraction) and p.denominator == 1:
        if u == 0.0 and p < 0:
            raise DomainError("zero raised to a negative power")
        return u ** int(p)
    if u < 0.0:
        raise DomainError("negative base under a fractional power")
    if u == 0.0:
        if pf < 0:
            raise DomainError("zero raised to a negative power")
        return 0.0 if pf > 0 else 1.0
    return u ** pf


def _func_value(name: str, u: float) -> float:
    if name == "exp":
        return math.exp(u)
    if name == "log":
        if u <= 0.0:
            raise DomainError("log of a non-positive value")
        return math.log(u)
    if name == "sin":
        return math.sin(u)
    if name == "cos":
        return math.cos(u)
    if name == "arctan":
        return math.atan(u)
    raise ValueError(f"unknown function {name!r}")


def evaluate(e: ScalarExpr, p: Point) -> float:
    """IEEE double evaluation at a point; raises DomainError rather than
    returning NaN when the point falls outside the natural domain."""
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Coord):
        return float(p[e.axis - 1])
    if isinstance(e, Sum):
        return math.fsum(evaluate(t, p) for t in e.terms)
    if isinstance(e, Prod):
        out = 1.0
        for f in e.factors:
            out *= evaluate(f, p)
        return out
    if isinstance(e, Pow):
        return _pow_value(evaluate(e.base, p), e.exponent)
    if isinstance(e, Func):
        return _func_value(e.name, evaluate(e.arg, p))
    raise TypeError(f"not a ScalarExpr: {e!r}")


# ---------------------------------------------------------------------------
# differentiation


def diff(e: ScalarExpr, axis: int) -> ScalarExpr:
    """Exact derivative with respect to x1 (axis=1) or x2 (axis=2)."""
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Coord):
        return ONE if e.axis == axis else ZERO
    if isinstance(e, Sum):
        return add(*(diff(t, axis) for t in e.terms))
    if isinstance(e, Prod):
        parts = []
        fs = e.factors
        for i in range(len(fs)):
            parts.append(mul(*fs[:i], diff(fs[i], axis), *fs[i + 1:]))
        return add(*parts)
    if isinstance(e, Pow):
        p = e.exponent
        return mul(const(p if isinstance(p, Fraction) else p),
                   power(e.base, p - 1), diff(e.base, axis))
    if isinstance(e, Func):
        du = diff(e.arg, axis)
        u = e.arg
        if e.name == "exp":
            return mul(exp(u), du)
        if e.name == "log":
            return mul(power(u, -1), du)
        if e.name == "sin":
            return mul(cos(u), du)
        if e.name == "cos":
            return mul(const(-1), sin(u), du)
        if e.name == "arctan":
            return mul(power(add(ONE, power(u, 2)), -1), du)
    raise TypeError(f"not a ScalarExpr: {e!r}")


def substitute(e: ScalarExpr, repl: Mapping[int, ScalarExpr]) -> ScalarExpr:
    """Replace coordinates by expressions (used to compose with plane maps)."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Coord):
        return repl.get(e.axis, e)
    if isinstance(e, Sum):
        return add(*(substitute(t, repl) for t in e.terms))
    if isinstance(e, Prod):
        return mul(*(substitute(f, repl) for f in e.factors))
    if isinstance(e, Pow):
        return power(substitute(e.base, repl), e.exponent)
    if isinstance(e, Func):
        return _func("" + e.name, substitute(e.arg, repl))
    raise TypeError(f"not a ScalarExpr: {e!r}")


# ---------------------------------------------------------------------------
# compilation (hot loops: flows, geodesics, grids)


@lru_cache(maxsize=None)
def compile_scalar(e: ScalarExpr) -> Callable[[float, float], float]:
    """Compile to a plain `f(x1, x2) -> float`.  Semantics match `evaluate`,
    including DomainError on domain violations."""
    namespace = {
        "_exp": math.exp, "_log": _guarded_log, "_sin": math.sin,
        "_cos": math.cos, "_atan": math.atan, "_powf": _guarded_powf,
    }
    src = _emit(e, namespace)
    return eval(f"lambda x1, x2: {src}", namespace)  # noqa: S307 - generated from our own AST


def _emit(e: ScalarExpr, ns: dict) -> str:
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Coord):
        return f"x{e.axis}"
    if isinstance(e, Sum):
        return "(" + " + ".join(_emit(t, ns) for t in e.terms) + ")"
    if isinstance(e, Prod):
        return "(" + " * ".join(_emit(f, ns) for f in e.factors) + ")"
    if isinstance(e, Pow):
        p = e.exponent
        b = _emit(e.base, ns)
        if isinstance(p, Fraction) and p.denominator == 1:
            n = int(p)
            if n > 0:
                return f"({b})**{n}"
            return f"(1.0 / ({b})**{-n})"  # ZeroDivisionError on a zero base
        return f"_powf({b}, {float(p)!r})"
    if isinstance(e, Func):
        fn = {"exp": "_exp", "log": "_log", "sin": "_sin", "cos": "_cos", "arctan": "_atan"}[e.name]
        return f"{fn}({_emit(e.arg, ns)})"
    raise TypeError(f"not a ScalarExpr: {e!r}")


def _guarded_log(u: float) -> float:
    if u <= 0.0:
        raise DomainError("log of a non-positive value")
    return math.log(u)


def _guarded_powf(u: float, pf: float) -> float:
    """Real power with a known non-integer exponent."""
    if u < 0.0:
        raise DomainError("negative base under a fractional power")
    if u == 0.0:
        if pf < 0.0:
            raise DomainError("zero raised to a negative power")
        return 0.0
    return u ** pf


# ---------------------------------------------------------------------------
# parsing and rendering


def parse_expr(text: str, params: Mapping[str, float] | None = None) -> ScalarExpr:
    """Parse the infix grammar:

        expr   := ['-'] term (('+'|'-') term)*
        term   := factor (('*'|'/') factor)*
        factor := base ('^' exponent)?
        base   := number | ident | '(' expr ')' | func '(' expr ')'
        func in {exp, log, sin, cos, arctan}

    Identifiers are x1, x2 or named parameters supplied via `params`
    (bound to constants at parse time).  Exponents are numbers, signed
    rationals like (-3/2), or parameter names.
    """
    p = _Parser(text, dict(params or {}))
    e = p.parse_expr()
    p.skip_ws()
    if p.pos != len(text):
        raise ParseError(f"unexpected input {text[p.pos]!r}", p.pos)
    return e


class _Parser:
    def __init__(self, text: str, params: dict):
        self.text = text
        self.pos = 0
        self.params = params

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r}", self.pos)
        self.pos += 1

    def parse_expr(self) -> ScalarExpr:
        terms = []
        sign = 1
        if self.peek() == "-":
            self.pos += 1
            sign = -1
        elif self.peek() == "+":
            self.pos += 1
        t = self.parse_term()
        terms.append(t if sign > 0 else neg(t))
        while self.peek() in ("+", "-"):
            op = self.peek()
            self.pos += 1
            t = self.parse_term()
            terms.append(t if op == "+" else neg(t))
        return add(*terms)

    def parse_term(self) -> ScalarExpr:
        factors = [self.parse_factor()]
        while self.peek() in ("*", "/"):
            op = self.peek()
            self.pos += 1
            f = self.parse_factor()
            factors.append(f if op == "*" else power(f, -1))
        return mul(*factors)

    def parse_factor(self) -> ScalarExpr:
        base = self.parse_base()
        if self.peek() == "^":
            self.pos += 1
            return power(base, self.parse_exponent())
        return base

    def parse_base(self) -> ScalarExpr:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            e = self.parse_expr()
            self.expect(")")
            return e
        if ch.isdigit() or ch == ".":
            return const(self.parse_number())
        if ch.isalpha() or ch == "_":
            start = self.pos
            name = self.parse_ident()
            if name in _FUNCS:
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return _func(name, arg)
            if name == "x1":
                return x1
            if name == "x2":
                return x2
            if name in self.params:
                return const(self.params[name])
            raise ParseError(f"unknown identifier {name!r}", start)
        raise ParseError("expected a number, identifier or '('", self.pos)

    def parse_ident(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        return self.text[start:self.pos]

    def parse_number(self):
        start = self.pos
        text = self.text
        while self.pos < len(text) and (text[self.pos].isdigit() or text[self.pos] == "."):
            self.pos += 1
        if self.pos < len(text) and text[self.pos] in "eE":
            probe = self.pos + 1
            if probe < len(text) and text[probe] in "+-":
                probe += 1
            if probe < len(text) and text[probe].isdigit():
                self.pos = probe
                while self.pos < len(text) and text[self.pos].isdigit():
                    self.pos += 1
        tok = text[start:self.pos]
        if tok.count(".") == 0 and "e" not in tok and "E" not in tok:
            return Fraction(int(tok))
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"bad number {tok!r}", start) from None

    def parse_exponent(self) -> Exponent:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            sign = 1
            if self.peek() == "-":
                self.pos += 1
                sign = -1
            num = self.parse_number()
            if self.peek() == "/":
                self.pos += 1
                den = self.parse_number()
                if not isinstance(num, Fraction) or not isinstance(den, Fraction):
                    raise ParseError("rational exponent must be integer/integer", self.pos)
                num = Fraction(num, den)
            self.expect(")")
            return sign * num if isinstance(num, Fraction) else sign * float(num)
        if ch.isdigit() or ch == ".":
            return self.parse_number()
        if ch.isalpha():
            start = self.pos
            name = self.parse_ident()
            if name in self.params:
                v = self.params[name]
                return Fraction(v) if isinstance(v, (int, Fraction)) else float(v)
            raise ParseError(f"unknown identifier {name!r}", start)
        raise ParseError("expected an exponent", self.pos)


def render(e: ScalarExpr) -> str:
    """Inverse of parse_expr: parse_expr(render(e)) is structurally equal
    to e for every tree produced by the constructors in this module."""
    return _render(e, 0)


def _render(e: ScalarExpr, level: int) -> str:
    # levels: 0 sum, 1 product, 2 power/atom
    if isinstance(e, Const):
        s = _render_const(e.value)
        if (s.startswith("-") or "/" in s) and level >= 1:
            return f"({s})"
        return s
    if isinstance(e, Coord):
        return f"x{e.axis}"
    if isinstance(e, Sum):
        sgn0, body0 = _split_negative(e.terms[0])
        parts = [f"-{body0}" if sgn0 else _render(e.terms[0], 1)]
        for t in e.terms[1:]:
            sgn, body = _split_negative(t)
            parts.append(f" - {body}" if sgn else f" + {_render(t, 1)}")
        s = "".join(parts)
        return f"({s})" if level >= 1 else s
    if isinstance(e, Prod):
        fs = e.factors
        if _is_const(fs[0], -1) and len(fs) > 1:
            rest = fs[1] if len(fs) == 2 else Prod(fs[1:])
            s = "-" + _render(rest, 1)
            return f"({s})" if level >= 1 else s
        s = "*".join(_render(f, 2) for f in fs)
        return f"({s})" if level >= 2 else s
    if isinstance(e, Pow):
        return f"{_render(e.base, 2) if _atomic(e.base) else '(' + _render(e.base, 0) + ')'}^{_render_exponent(e.exponent)}"
    if isinstance(e, Func):
        return f"{e.name}({_render(e.arg, 0)})"
    raise TypeError(f"not a ScalarExpr: {e!r}")


def _atomic(e: ScalarExpr) -> bool:
    return isinstance(e, (Coord, Func)) or (isinstance(e, Const) and _render_const(e.value).replace(".", "").isdigit())


def _split_negative(t: ScalarExpr):
    """For rendering sums: detect a term with a negative leading constant
    and return (True, rendered absolute value)."""
    if isinstance(t, Const) and t.value < 0:
        return True, _render(Const(-t.value), 1)
    if isinstance(t, Prod) and isinstance(t.factors[0], Const) and t.factors[0].value < 0:
        c = t.factors[0].value
        rest = t.factors[1:]
        if c == -1 and rest:
            flipped = rest[0] if len(rest) == 1 else Prod(rest)
        else:
            flipped = Prod((Const(-c),) + rest)
        return True, _render(flipped, 1)
    return False, ""


def _render_const(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(v)


def _render_exponent(p: Exponent) -> str:
    if isinstance(p, Fraction):
        if p.denominator == 1:
            return str(p.numerator) if p >= 0 else f"({p.numerator})"
        sign = "-" if p < 0 else ""
        q = abs(p)
        return f"({sign}{q.numerator}/{q.denominator})"
    return f"({p!r})"


# ---------------------------------------------------------------------------
# vector fields and plane maps


@dataclass(frozen=True)
class VectorFieldExpr:
    """A vector field c1(x) d/dx1 + c2(x) d/dx2 in closed form."""

    c1: ScalarExpr
    c2: ScalarExpr

    def __call__(self, p: Point) -> tuple[float, float]:
        return evaluate(self.c1, p), evaluate(self.c2, p)

    def compiled(self) -> Callable[[float, float], tuple[float, float]]:
        f1, f2 = compile_scalar(self.c1), compile_scalar(self.c2)
        return lambda u, v: (f1(u, v), f2(u, v))


@dataclass(frozen=True)
class Domain:
    """Rectangle or half-plane descriptor for map/connection domains."""

    kind: str  # "plane" | "half-x1" | "rect"
    bounds: tuple[float, float, float, float] | None = None  # rect only

    def contains(self, p: Point) -> bool:
        if self.kind == "plane":
            return True
        if self.kind == "half-x1":
            return p[0] > 0.0
        lo1, hi1, lo2, hi2 = self.bounds
        return lo1 <= p[0] <= hi1 and lo2 <= p[1] <= hi2


PLANE = Domain("plane")
HALF_X1 = Domain("half-x1")


@dataclass(frozen=True)
class PlaneMap:
    """A map (x1, x2) -> (f1, f2) with a declared domain.  Used for the
    affine embeddings/isomorphisms between catalog models and for the
    straightening immersions built from quasi-Einstein bases."""

    f1: ScalarExpr
    f2: ScalarExpr
    domain: Domain = PLANE

    def __call__(self, p: Point) -> Point:
        return evaluate(self.f1, p), evaluate(self.f2, p)

    def jacobian_exprs(self):
        return ((diff(self.f1, 1), diff(self.f1, 2)),
                (diff(self.f2, 1), diff(self.f2, 2)))

    def jacobian(self, p: Point):
        je = self.jacobian_exprs()
        return ((evaluate(je[0][0], p), evaluate(je[0][1], p)),
                (evaluate(je[1][0], p), evaluate(je[1][1], p)))


def pullback_field(phi: PlaneMap, target_field: VectorFieldExpr) -> VectorFieldExpr:
    """Pull a vector field back through an (immersive) plane map:
    X = J_phi^{-1} (Y o phi).  Exact; division by det(J) is symbolic."""
    j11, j12 = diff(phi.f1, 1), diff(phi.f1, 2)
    j21, j22 = diff(phi.f2, 1), diff(phi.f2, 2)
    det = sub(mul(j11, j22), mul(j12, j21))
    repl = {1: phi.f1, 2: phi.f2}
    y1 = substitute(target_field.c1, repl)
    y2 = substitute(target_field.c2, repl)
    inv_det = power(det, -1)
    c1 = mul(inv_det, sub(mul(j22, y1), mul(j12, y2)))
    c2 = mul(inv_det, sub(mul(j11, y2), mul(j21, y1)))
    return VectorFieldExpr(c1, c2)
