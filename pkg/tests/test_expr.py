"""Expression core: parsing, rendering, differentiation, evaluation."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affsurf import expr as ex


def central_fd(e, axis, p, h=1e-5):
    lo = list(p)
    hi = list(p)
    lo[axis - 1] -= h
    hi[axis - 1] += h
    return (ex.evaluate(e, tuple(hi)) - ex.evaluate(e, tuple(lo))) / (2 * h)


class TestParse:
    def test_product_of_functions(self):
        e = ex.parse_expr("exp(x1)*cos(x2)")
        assert e == ex.mul(ex.exp(ex.x1), ex.cos(ex.x2))

    def test_x_log_x(self):
        e = ex.parse_expr("x1*log(x1)")
        assert e == ex.mul(ex.x1, ex.log(ex.x1))

    def test_unbalanced_paren_offset(self):
        with pytest.raises(ex.ParseError) as err:
            ex.parse_expr("x1^(1/2")
        assert err.value.offset == 7

    def test_unknown_identifier(self):
        with pytest.raises(ex.ParseError, match="unknown identifier"):
            ex.parse_expr("x1 + kappa")

    def test_parameter_binding(self):
        e = ex.parse_expr("x1^kappa", params={"kappa": -1.0})
        assert ex.evaluate(e, (2.0, 0.0)) == 0.5

    def test_division_folds_to_fraction(self):
        assert ex.parse_expr("3/4") == ex.const(Fraction(3, 4))

    def test_rational_exponent(self):
        e = ex.parse_expr("x1^(-3/2)")
        assert e == ex.power(ex.x1, Fraction(-3, 2))


CATALOG_LIKE = [
    "exp(x1)*cos(x2)",
    "x1*log(x1)",
    "x2/x1 + log(x1)",
    "x1^(1/2) - 2*x2^3",
    "(x2^2 + 2*x1)*exp(x2)",
    "arctan(x2/x1)",
    "exp(0.25*x2)*sin(x2)",
    "1 - x1 + 3/4*x2",
    "x1^(0.75)*x2",
]


@pytest.mark.parametrize("text", CATALOG_LIKE)
def test_round_trip(text):
    e = ex.parse_expr(text)
    assert ex.parse_expr(ex.render(e)) == e


@st.composite
def small_exprs(draw, depth=0):
    if depth >= 3:
        leaf = draw(st.sampled_from(["x1", "x2", "const"]))
        if leaf == "const":
            return ex.const(Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 4))))
        return ex.x1 if leaf == "x1" else ex.x2
    kind = draw(st.sampled_from(["leaf", "sum", "prod", "pow", "func"]))
    if kind == "leaf":
        return draw(small_exprs(depth=3))
    if kind == "sum":
        return ex.add(draw(small_exprs(depth=depth + 1)), draw(small_exprs(depth=depth + 1)))
    if kind == "prod":
        return ex.mul(draw(small_exprs(depth=depth + 1)), draw(small_exprs(depth=depth + 1)))
    if kind == "pow":
        return ex.power(draw(small_exprs(depth=depth + 1)),
                        draw(st.sampled_from([2, 3, Fraction(1, 2), Fraction(-1, 1), 0.37])))
    fn = draw(st.sampled_from([ex.exp, ex.sin, ex.cos, ex.arctan]))
    return fn(draw(small_exprs(depth=depth + 1)))


@settings(max_examples=120, deadline=None)
@given(small_exprs())
def test_round_trip_generated(e):
    assert ex.parse_expr(ex.render(e)) == e


class TestEvaluate:
    def test_exp_cos_at_origin(self):
        assert ex.evaluate(ex.parse_expr("exp(x1)*cos(x2)"), (0.0, 0.0)) == 1.0

    def test_negative_power(self):
        assert ex.evaluate(ex.power(ex.x1, -1), (2.0, 0.0)) == 0.5

    def test_log_domain_error(self):
        with pytest.raises(ex.DomainError):
            ex.evaluate(ex.log(ex.x1), (-1.0, 0.0))

    def test_fractional_power_of_negative(self):
        with pytest.raises(ex.DomainError):
            ex.evaluate(ex.power(ex.x1, Fraction(1, 2)), (-4.0, 0.0))

    def test_zero_to_negative_power(self):
        with pytest.raises(ex.DomainError):
            ex.evaluate(ex.power(ex.x1, -2), (0.0, 0.0))


class TestDiff:
    def test_product_rule_value(self):
        d = ex.diff(ex.parse_expr("x1*log(x1)"), 1)
        for u in (0.5, 1.0, 2.0, 3.7):
            assert d and abs(ex.evaluate(d, (u, 0.0)) - (math.log(u) + 1)) < 1e-12

    def test_chain_rule_value(self):
        c = 0.7
        e = ex.mul(ex.exp(ex.mul(ex.const(c), ex.x2)), ex.sin(ex.x2))
        d = ex.diff(e, 2)
        for v in (-1.0, 0.0, 0.4):
            want = math.exp(c * v) * (c * math.sin(v) + math.cos(v))
            assert abs(ex.evaluate(d, (0.0, v)) - want) < 1e-12

    def test_independence(self):
        assert ex.diff(ex.arctan(ex.x2), 1) == ex.ZERO

    def test_diff_closed_and_simplified_stable(self):
        for text in CATALOG_LIKE:
            e = ex.parse_expr(text)
            d = ex.diff(e, 1)
            assert isinstance(d, ex.ScalarExpr)
            # constructors already simplify; re-rendering must round trip
            assert ex.parse_expr(ex.render(d)) == d

    @pytest.mark.parametrize("text", CATALOG_LIKE)
    @pytest.mark.parametrize("axis", [1, 2])
    def test_against_central_difference(self, text, axis):
        e = ex.parse_expr(text)
        d = ex.diff(e, axis)
        for p in [(0.5, 0.25), (1.5, -0.75), (2.0, 1.0)]:
            want = central_fd(e, axis, p)
            got = ex.evaluate(d, p)
            assert abs(got - want) <= 1e-6 * (1 + abs(got))


class TestCompile:
    def test_matches_interpreter(self):
        e = ex.parse_expr("exp(0.3*x2)*sin(x2) + x1^(5/3)*log(x1) - arctan(x1*x2)")
        f = ex.compile_scalar(e)
        for p in [(0.5, -1.0), (1.0, 0.0), (2.5, 2.0)]:
            assert abs(f(*p) - ex.evaluate(e, p)) < 1e-14

    def test_domain_error_propagates(self):
        f = ex.compile_scalar(ex.log(ex.x1))
        with pytest.raises(ex.DomainError):
            f(-1.0, 0.0)
        g = ex.compile_scalar(ex.power(ex.x1, Fraction(1, 2)))
        with pytest.raises(ex.DomainError):
            g(-1.0, 0.0)
        h = ex.compile_scalar(ex.power(ex.x1, -1))
        with pytest.raises(ZeroDivisionError):
            h(0.0, 0.0)

    def test_overflow_raises(self):
        f = ex.compile_scalar(ex.exp(ex.x1))
        with pytest.raises(OverflowError):
            f(1e4, 0.0)


class TestSubstitute:
    def test_composition(self):
        e = ex.parse_expr("x1^2 + x2")
        sub = ex.substitute(e, {1: ex.exp(ex.x2), 2: ex.x1})
        assert abs(ex.evaluate(sub, (3.0, 0.5)) - (math.exp(1.0) + 3.0)) < 1e-12


class TestPullback:
    def test_identity(self):
        pm = ex.PlaneMap(ex.x1, ex.x2)
        vf = ex.VectorFieldExpr(ex.parse_expr("x1^2"), ex.x2)
        assert ex.pullback_field(pm, vf)((2.0, 3.0)) == (4.0, 3.0)

    def test_exponential_chart(self):
        pm = ex.PlaneMap(ex.parse_expr("exp(x1)"), ex.parse_expr("x2*exp(x1)"))
        pb = ex.pullback_field(pm, ex.VectorFieldExpr(ex.const(1), ex.const(0)))
        got = pb((0.5, 2.0))
        want = (math.exp(-0.5), -2.0 * math.exp(-0.5))
        assert abs(got[0] - want[0]) < 1e-12 and abs(got[1] - want[1]) < 1e-12
