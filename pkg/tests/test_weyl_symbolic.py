from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from cdhahn.errors import ArgumentError
from cdhahn.harness_checks import jacobi_matrices
from cdhahn.weyl_symbolic import (MultiPoly, WeylOperator, apply_to_monomial, build_X, build_Y,
                                  commutator_residual_operator, compose, operator_matrix,
                                  parse_operator, verify_commutator_symbolic)

A, B, C = (MultiPoly.var(v) for v in "ABC")
d, z, one = WeylOperator.d(), WeylOperator.z(), WeylOperator.identity()


def test_basic_relation():
    assert compose(d, z) == one + z * d
    assert compose(d * d, z) == 2 * d + z * d * d
    assert compose(d ** 3, z ** 2) == parse_operator("6 d + 6 z d^2 + z^2 d^3")


def test_x_and_y_on_low_monomials():
    assert apply_to_monomial(build_X(), 0) == {0: C * 2}
    assert apply_to_monomial(build_X(), 1) == {0: (A + C) * (B + C) * 2, 1: C * 2 + 2}
    assert apply_to_monomial(build_Y(), 0) == {0: A * B + A * C + B * C, 1: MultiPoly.const(1)}
    assert apply_to_monomial(d ** 2, 1) == {}


@pytest.mark.parametrize("n", range(7))
def test_ladder_coefficients(n):
    beta = C * 2 + 2 * n
    delta = (A + C + (n - 1)) * (B + C + (n - 1)) * (2 * n)
    alpha = A * B + A * C + B * C + (A + B + C) * (2 * n) + (2 * n * n - n)
    gamma = (A + B + (n - 1)) * (A + C + (n - 1)) * (B + C + (n - 1)) * n
    xs = {n: beta, n - 1: delta} if n else {0: beta}
    ys = {n + 1: MultiPoly.const(1), n: alpha, n - 1: gamma} if n else {1: MultiPoly.const(1), 0: alpha}
    assert apply_to_monomial(build_X(), n) == xs
    assert apply_to_monomial(build_Y(), n) == ys


def test_commutator_identity():
    assert verify_commutator_symbolic()
    assert not verify_commutator_symbolic(X=build_X(diagonal_offset=1))
    assert not commutator_residual_operator(X=build_X(diagonal_offset=1)).is_zero()


def test_corner_coefficient_matches_matrix():
    X, Y = build_X(), build_Y()
    lhs = compose(X, Y) - compose(Y, X)
    rhs = F(1, 2) * compose(X, X) + 2 * Y
    at = lambda op: apply_to_monomial(op, 0).get(0, MultiPoly()).subs(1, 2, 3)
    assert at(lhs) == at(rhs) == 40


@pytest.mark.parametrize("abc", [(1, 2, 3), (F(1, 2), F(-1, 3), 2), (0, 0, F(7, 5))])
def test_matrix_consistency(abc):
    K = 7
    jt = jacobi_matrices(*abc, K)
    MX = operator_matrix(build_X(), K, *abc)
    MY = operator_matrix(build_Y(), K, *abc)
    assert [list(r) for r in jt.X] == MX
    # z^K produced from the last column falls outside the block and is dropped
    assert [list(r) for r in jt.Y] == MY


small_ops = st.lists(
    st.tuples(st.integers(0, 2), st.integers(0, 2), st.fractions(-3, 3, max_denominator=4)),
    min_size=1, max_size=3,
).map(lambda ts: WeylOperator({(m, k): c for m, k, c in ts}))


@settings(max_examples=60, deadline=None)
@given(small_ops, small_ops, small_ops)
def test_associativity(f, g, h):
    assert compose(f, compose(g, h)) == compose(compose(f, g), h)


@settings(max_examples=40, deadline=None)
@given(small_ops)
def test_identity_and_reparse(g):
    assert compose(one, g) == g == compose(g, one)
    assert parse_operator(str(g).replace("*z^", " z^").replace("*d^", " d^")) == g


def test_parser():
    assert parse_operator("d z") == one + z * d
    assert parse_operator("(z + 1)^2") == z * z + 2 * z + one
    assert parse_operator("X Y - Y X - 1/2 X^2 - 2 Y").is_zero()
    assert parse_operator("2 C") == WeylOperator({(0, 0): C * 2})
    assert str(parse_operator("z d")) == "(1)*z^1*d^1"
    for bad in ("", "z +", "d / z", "z ^ d", "q", "(z"):
        with pytest.raises(ArgumentError):
            parse_operator(bad)
