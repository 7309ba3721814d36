"""Exact checks of the quadratic-harness structure.

Jacobi matrices J(t) = Y + tX of the martingale polynomials of
Y_t = T_t + t^2 are built with rational entries, and the commutation
relation XY - YX = X^2/2 + 2Y, the linear interpolation of J and the
quadratic identity for J^2 are evaluated exactly on interior blocks.
Also here: the (eta, theta) <-> (A+C, B+C) maps and the two-sided
conditional moment formulas.
"""
from dataclasses import dataclass
from fractions import Fraction
import cmath
import math

import numpy as np

from .errors import ArgumentError, DomainError

__all__ = [
    "HarnessParams", "JacobiTruncation", "jacobi_coefficients", "jacobi_matrices",
    "commutator_residual", "linear_interpolation_residual",
    "quadratic_variance_matrix_identity", "recursion_consistency",
    "parameter_maps", "inverse_parameter_maps", "conditional_variance_formula",
    "y_conditional_formulas", "y_second_moment_expanded", "qvar_transform_residual",
]

COMMUTATOR_MARGIN = 3
QV_MARGIN = 5


def _q(v):
    """Exact rational from int, Fraction, str or float (floats taken exactly)."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return Fraction(v)
    return Fraction(v)


def jacobi_coefficients(A, B, C, n, quadratic_alpha=True):
    """(alpha_n, beta_n, gamma_n, delta_n) as exact rationals.

    The diagonal part alpha_n carries a 2n^2 term; ``quadratic_alpha=False``
    drops it, which is the variant that fails the commutation relation.
    """
    A, B, C = _q(A), _q(B), _q(C)
    n = Fraction(n)
    alpha = A * B + A * C + B * C + (2 * (A + B + C) - 1) * n
    if quadratic_alpha:
        alpha += 2 * n * n
    beta = 2 * (C + n)
    gamma = n * (A + B + n - 1) * (A + C + n - 1) * (B + C + n - 1)
    delta = 2 * n * (A + C + n - 1) * (B + C + n - 1)
    return alpha, beta, gamma, delta


@dataclass(frozen=True)
class JacobiTruncation:
    """K x K leading blocks of X (bidiagonal) and Y (tridiagonal)."""
    K: int
    X: np.ndarray
    Y: np.ndarray

    def J(self, t):
        return self.Y + _q(t) * self.X


def _zeros(K):
    return np.array([[Fraction(0)] * K for _ in range(K)], dtype=object)


def jacobi_matrices(A, B, C, K: int, quadratic_alpha=True) -> JacobiTruncation:
    """X has beta_n on the diagonal and delta_{n+1} above it; Y has 1 below
    the diagonal, alpha_n on it and gamma_{n+1} above it."""
    if K < 4:
        raise ArgumentError("K must be at least 4")
    X, Y = _zeros(K), _zeros(K)
    for n in range(K):
        a, b, _, _ = jacobi_coefficients(A, B, C, n, quadratic_alpha)
        X[n, n] = b
        Y[n, n] = a
        if n + 1 < K:
            _, _, g, d = jacobi_coefficients(A, B, C, n + 1, quadratic_alpha)
            X[n, n + 1] = d
            Y[n, n + 1] = g
            Y[n + 1, n] = Fraction(1)
    return JacobiTruncation(K, X, Y)


def _max_abs(M):
    return max((abs(v) for v in M.flat), default=Fraction(0))


def commutator_residual(jt: JacobiTruncation) -> Fraction:
    """max |XY - YX - X^2/2 - 2Y| over rows and columns 0..K-4."""
    X, Y = jt.X, jt.Y
    M = X.dot(Y) - Y.dot(X) - X.dot(X) * Fraction(1, 2) - 2 * Y
    m = jt.K - COMMUTATOR_MARGIN
    return _max_abs(M[:m, :m])


def _check_order(s, t, u):
    if not (s <= t <= u and s < u):
        raise ArgumentError("need s <= t <= u with s < u")


def linear_interpolation_residual(jt: JacobiTruncation, s, t, u) -> Fraction:
    """max |J(t) - ((u-t) J(s) + (t-s) J(u)) / (u-s)| over the whole block."""
    s, t, u = _q(s), _q(t), _q(u)
    _check_order(s, t, u)
    M = jt.J(t) - (jt.J(s) * (u - t) + jt.J(u) * (t - s)) / (u - s)
    return _max_abs(M)


def qv_weights(s, t, u):
    """Weights of J(s)^2, J(u)^2, J(s)J(u), J(s), J(u) in the expansion of J(t)^2."""
    D = (1 + 2 * u - 2 * s) * (u - s)
    w = (t - s) * (u - t)
    return ((1 + 2 * u - 2 * t) * (u - t) / D, (1 + 2 * t - 2 * s) * (t - s) / D,
            4 * w / D, 4 * u * w / D, -4 * s * w / D)


def quadratic_variance_matrix_identity(A, B, C, s, t, u, K: int, order="su") -> Fraction:
    """Interior residual of J(t)^2 against its quadratic expansion in J(s), J(u).

    ``order`` selects J(s)J(u) ("su") or J(u)J(s) ("us") for the mixed term.
    Rows and columns 0..K-6 are compared.
    """
    if K < 6:
        raise ArgumentError("K must be at least 6")
    s, t, u = _q(s), _q(t), _q(u)
    _check_order(s, t, u)
    jt = jacobi_matrices(A, B, C, K)
    Js, Jt, Ju = jt.J(s), jt.J(t), jt.J(u)
    c1, c2, c3, c4, c5 = qv_weights(s, t, u)
    mixed = Js.dot(Ju) if order == "su" else Ju.dot(Js)
    M = Jt.dot(Jt) - (Js.dot(Js) * c1 + Ju.dot(Ju) * c2 + mixed * c3 + Js * c4 + Ju * c5)
    m = K - QV_MARGIN
    return _max_abs(M[:m, :m])


def recursion_consistency(A, B, C, t, n_max=10) -> Fraction:
    """Largest exact gap between the recurrence of the time-t marginal family
    (C-t, A+t, B+t) shifted by t^2 and the coefficients b_n(t), c_n(t)."""
    A, B, C, t = _q(A), _q(B), _q(C), _q(t)
    al, be, ga = C - t, A + t, B + t

    def An(n):
        return (n + al + be) * (n + al + ga)

    def Cn(n):
        return n * (n - 1 + be + ga)

    worst = Fraction(0)
    for n in range(n_max + 1):
        a, b, g, d = jacobi_coefficients(A, B, C, n)
        diag = An(n) + Cn(n) - al * al + t * t
        worst = max(worst, abs(diag - (a + b * t)))
        if n >= 1:
            worst = max(worst, abs(An(n - 1) * Cn(n) - (g + d * t)))
    return worst


# ------------------------------------------------------------ parameter maps


@dataclass(frozen=True)
class HarnessParams:
    eta: float
    theta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(f"eta must be positive, got {self.eta:g}")
        if not self.theta > -2:
            raise DomainError(f"theta must exceed -2, got {self.theta:g}")


def parameter_maps(hp: HarnessParams):
    """(A+C, B+C); a conjugate pair with A+C in the lower half-plane when |theta| < 2."""
    e, th = hp.eta, hp.theta
    if th >= 2:
        r = math.sqrt(th * th - 4.0)
        # smaller root via the product 1/eta^2 to avoid cancellation
        return 2.0 / (e * (th + r)), (th + r) / (2 * e)
    r = math.sqrt(4.0 - th * th)
    return complex(th, -r) / (2 * e), complex(th, r) / (2 * e)


def inverse_parameter_maps(A, B, C) -> HarnessParams:
    """eta = 1/sqrt((A+C)(B+C)), theta = (A+B+2C)/sqrt((A+C)(B+C))."""
    prod = complex((A + C) * (B + C))
    if prod == 0:
        raise DomainError("(A+C)(B+C) vanishes")
    if abs(prod.imag) > 1e-12 * abs(prod) or prod.real <= 0:
        raise DomainError("(A+C)(B+C) must be real and positive")
    root = math.sqrt(prod.real)
    return HarnessParams(1.0 / root, complex(A + B + 2 * C).real / root)


# ------------------------------------------------------------ conditional moments


def _strict(s, t, u):
    if not s < u or not s <= t <= u:
        raise ArgumentError("need s <= t <= u with s < u")


def conditional_variance_formula(x_s, x_u, s, t, u, hp: HarnessParams):
    """Two-sided conditional variance of the standard-form harness X_t."""
    _strict(s, t, u)
    d = u - s
    pre = (u - t) * (t - s) / (1 + u - s)
    return pre * (1 + hp.eta * (u * x_s - s * x_u) / d + hp.theta * (x_u - x_s) / d
                  + (x_u - x_s) ** 2 / d ** 2)


def y_second_moment_expanded(y_s, y_u, s, t, u):
    """E[Y_t^2 | Y_s, Y_u] as the quadratic combination with weights qv_weights."""
    _strict(s, t, u)
    c1, c2, c3, c4, c5 = qv_weights(s, t, u)
    return c1 * y_s ** 2 + c2 * y_u ** 2 + c3 * y_s * y_u + c4 * y_s + c5 * y_u


def y_conditional_formulas(y_s, y_u, s, t, u, A=None, B=None, C=None, check=True):
    """(mean, variance) of Y_t given Y_s, Y_u.

    With ``check`` the variance plus squared mean is compared against the
    expanded second moment; a mismatch beyond 1e-12 relative raises.
    The parameters only enter through the time domain t >= -(A+B)/2.
    """
    _strict(s, t, u)
    if A is not None and B is not None:
        tau = -complex(A + B).real / 2
        if s < tau - 1e-12:
            raise ArgumentError("s precedes tau")
    d = u - s
    mean = (u - t) / d * y_s + (t - s) / d * y_u
    var = (u - t) * (t - s) / (1 + 2 * d) * (4 * (u * y_s - s * y_u) / d + (y_u - y_s) ** 2 / d ** 2)
    if check:
        second = y_second_moment_expanded(y_s, y_u, s, t, u)
        lhs = var + mean * mean
        scale = max(abs(second), abs(lhs), abs(var), 1.0)
        if abs(lhs - second) > 1e-12 * scale:
            raise ArithmeticError(f"expanded second moment disagrees: {lhs!r} vs {second!r}")
    return mean, var


def qvar_transform_residual(A, B, C, s, t, u, x_s, x_u):
    """Relative gap between the Y-process conditional variance mapped to the
    standard clock and the harness formula for X with (eta, theta) from (A, B, C).

    Standard times s, t, u map to process times r/2 - (A+B)/2, and
    X = (Y - AB - C r) / sqrt((A+C)(B+C)).
    """
    _strict(s, t, u)
    hp = inverse_parameter_maps(A, B, C)
    sigma = 1.0 / hp.eta
    ab = complex(A * B).real
    half = complex(A + B).real / 2

    def y_of(x, r):
        return sigma * x + ab + C * r

    ys, yu = y_of(x_s, s), y_of(x_u, u)
    _, var_y = y_conditional_formulas(ys, yu, s / 2 - half, t / 2 - half, u / 2 - half)
    lhs = var_y / sigma ** 2
    rhs = conditional_variance_formula(x_s, x_u, s, t, u, hp)
    return abs(lhs - rhs) / max(abs(rhs), 1e-300)
