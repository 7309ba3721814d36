"""Continuous dual Hahn polynomials: recurrence evaluation, Favard
classification, numerator polynomials, orthonormal values, determinacy
diagnostics and connection coefficients."""
from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .errors import ArgumentError, DomainError
from .params import CdhParams, ProcessParams, kernel_cdh

MAX_DEGREE = 30
DEFAULT_SCAN_LIMIT = 200
ZERO_TOL = 1e-12

__all__ = [
    "CdhParams", "FavardClass", "ConnectionCoeffs", "recurrence_coeffs", "eval_poly",
    "eval_at_minus_alpha_sq", "favard_classify", "numerator_poly", "normalized_eval",
    "orthonormal_values", "determinacy_partial_sums", "growth_exponent",
    "connection_coeffs", "log_norm_sq",
]


@dataclass(frozen=True)
class FavardClass:
    kind: str  # "InfiniteSupport" | "FiniteAtoms" | "NotOrthogonal"
    N: int = 0
    first_bad_index: int = 0
    scan_limit: int = DEFAULT_SCAN_LIMIT

    @property
    def is_orthogonal(self):
        return self.kind != "NotOrthogonal"


@dataclass(frozen=True)
class ConnectionCoeffs:
    """values[m, k] = b_{m,k} for 0 <= k <= m <= n (zero above)."""
    n: int
    values: np.ndarray

    def coeff(self, m, k):
        return self.values[m, k]


def recurrence_coeffs(p: CdhParams, n: int):
    """(A_n, C_n) for the monic recurrence."""
    return float(p.A(n)), float(p.C(n))


def _check_degree(n):
    if n < 0:
        raise ArgumentError("degree must be non-negative")
    if n > MAX_DEGREE:
        raise ArgumentError(f"degree {n} exceeds the supported maximum {MAX_DEGREE}")


def eval_poly(p: CdhParams, n: int, x):
    """Monic p_n(x | alpha, beta, gamma) by forward recurrence."""
    _check_degree(n)
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for k in range(n):
        nxt = (x - p.diag(k)) * cur - (p.A(k - 1) * p.C(k) if k > 0 else 0.0) * prev
        prev, cur = cur, nxt
    return cur if cur.ndim else float(cur)


def numerator_poly(p: CdhParams, n: int, x):
    """Numerator polynomials: same recurrence started from q_0 = 0, q_1 = 1."""
    _check_degree(n)
    x = np.asarray(x, dtype=float)
    if n == 0:
        out = np.zeros_like(x)
        return out if out.ndim else 0.0
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for k in range(1, n):
        nxt = (x - p.diag(k)) * cur - p.A(k - 1) * p.C(k) * prev
        prev, cur = cur, nxt
    return cur if cur.ndim else float(cur)


def eval_at_minus_alpha_sq(p: CdhParams, n: int):
    """Closed form p_n(-alpha^2) = (-1)^n (alpha+beta)_n (alpha+gamma)_n."""
    val = 1.0
    for k in range(n):
        val *= p.A(k)
    return float((-1) ** n * val)


def _factor_scale(p, j):
    return ZERO_TOL * (1.0 + j + abs(p.alpha) + abs(p.beta) + abs(p.gamma) + p.im)


def favard_classify(p: CdhParams, scan_limit: int = DEFAULT_SCAN_LIMIT) -> FavardClass:
    """Scan beta_j = A_{j-1} C_j and the sign of their running product."""
    if scan_limit < 1:
        raise ArgumentError("scan_limit must be at least 1")
    factors = p.norm_factors(scan_limit)
    running = 1.0
    for idx in range(scan_limit):
        j = idx + 1
        tol = _factor_scale(p, j)
        sign = 1.0
        zero = False
        for f in factors:
            v = f[idx]
            if abs(v) <= tol:
                zero = True
            sign *= 1.0 if v > 0 else -1.0
        if zero:
            return FavardClass("FiniteAtoms", N=j, scan_limit=scan_limit)
        running *= sign
        if running < 0:
            return FavardClass("NotOrthogonal", first_bad_index=j, scan_limit=scan_limit)
    return FavardClass("InfiniteSupport", scan_limit=scan_limit)


def _beta_products(p, n):
    """beta_j = A_{j-1} C_j for j = 1..n."""
    j = np.arange(1, n + 1, dtype=float)
    return p.A(j - 1) * p.C(j)


def log_norm_sq(p: CdhParams, n: int):
    """log of A_0...A_{n-1} C_1...C_n = n! (a+b, a+g, b+g)_n, in log space."""
    if n == 0:
        return 0.0
    factors = p.norm_factors(n)
    total = 0.0
    for f in factors:
        if np.any(f <= 0):
            raise DomainError("a norm factor is not positive")
        total += float(np.sum(np.log(f)))
    return total


def _require_positive(p, n):
    b = _beta_products(p, n)
    if np.any(b <= 0):
        j = int(np.argmax(b <= 0)) + 1
        raise DomainError(f"norm factor beta_{j} = {b[j - 1]:g} is not positive")


def orthonormal_values(p: CdhParams, n_max: int, x):
    """[p~_0(x), ..., p~_{n_max}(x)] from the orthonormal recurrence."""
    _require_positive(p, n_max)
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max == 0:
        return out
    sq = np.sqrt(_beta_products(p, n_max))
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for k in range(n_max):
        back = sq[k - 1] if k > 0 else 0.0
        nxt = ((x - p.diag(k)) * cur - back * prev) / sq[k]
        prev, cur = cur, nxt
        out[k + 1] = cur
    return out


def normalized_eval(p: CdhParams, n: int, x):
    """Orthonormal p~_n(x).  Degrees up to 30 divide the monic value by the
    log-space norm; higher degrees use the orthonormal recurrence."""
    if n < 0:
        raise ArgumentError("degree must be non-negative")
    if n > MAX_DEGREE:
        vals = orthonormal_values(p, n, x)[n]
        return vals if np.ndim(vals) else float(vals)
    _require_positive(p, n)
    return eval_poly(p, n, x) / math.exp(0.5 * log_norm_sq(p, n))


def _log_terms(p, n_max):
    k = np.arange(n_max, dtype=float)
    if np.any(p.A(k) <= 0) or np.any(p.C(k + 1) <= 0):
        raise DomainError("determinacy sums need an infinite-support family")
    log_ratio = np.log(p.A(k)) - np.log(p.C(k + 1))
    log_p = np.concatenate([[0.0], np.cumsum(log_ratio)])
    return log_p


def determinacy_partial_sums(p: CdhParams, n_max: int):
    """Partial sums over n <= n_max of |p~_n(-alpha^2)|^2 and |q~_n(-alpha^2)|^2.

    Closed forms: |p~_n|^2 = prod_{k<n} A_k / C_{k+1} and
    |q~_n|^2 = |p~_n|^2 (sum_{m<n} prod_{k=1}^m C_k / A_k)^2 / A_0^2.
    """
    log_p = _log_terms(p, n_max)
    p_terms = np.exp(log_p)
    k = np.arange(1, n_max, dtype=float)
    inner = np.concatenate([[1.0], np.exp(np.cumsum(np.log(p.C(k)) - np.log(p.A(k))))])
    s = np.cumsum(inner)
    q_terms = np.zeros(n_max + 1)
    q_terms[1:] = p_terms[1:] * s ** 2 / float(p.A(0)) ** 2
    return np.cumsum(p_terms), np.cumsum(q_terms)


def growth_exponent(p: CdhParams, n_lo: int = 100, n_hi: int = 10_000, points: int = 60):
    """Log-log slope of |p~_n(-alpha^2)|^2 over n in [n_lo, n_hi]."""
    log_p = _log_terms(p, n_hi)
    n = np.unique(np.geomspace(n_lo, n_hi, points).astype(int))
    slope, _ = np.polyfit(np.log(n), log_p[n], 1)
    return float(slope)


def _monomial_table(diag, prod, n):
    """Column k holds the monomial coefficients (low to high) of p_k, exactly."""
    zero = Fraction(0)
    P = [[zero] * (n + 1) for _ in range(n + 1)]
    P[0][0] = Fraction(1)
    for k in range(n):
        for i in range(n + 1):
            v = (P[i - 1][k] if i > 0 else zero) - diag[k] * P[i][k]
            if k > 0:
                v -= prod[k] * P[i][k - 1]
            P[i][k + 1] = v
    return P


def _kernel_recurrence(C, s, t, x, n):
    # (C - t, t - s -/+ sqrt(-x)) enter only through sums and products
    C, s, t, x = (Fraction(float(v)) for v in (C, s, t, x))
    al, r = C - t, t - s
    A = [(k + al + r) ** 2 + x for k in range(n + 1)]
    Cn = [k * (k - 1 + 2 * r) for k in range(n + 1)]
    diag = [A[k] + Cn[k] - al * al for k in range(n + 1)]
    prod = [None] + [A[k - 1] * Cn[k] for k in range(1, n + 1)]
    return diag, prod


def _marginal_recurrence(pp, t, n):
    # (C - t, A + t, B + t); A_n = (n + A + C)(n + B + C) is real in both cases
    re, im = Fraction(pp.A.real), Fraction(pp.A.imag)
    b = Fraction(pp.B.real)
    C, t = Fraction(pp.C), Fraction(float(t))
    al = C - t
    if im:
        A = [(k + re + C) ** 2 + im * im for k in range(n + 1)]
        bg = 2 * re + 2 * t
    else:
        A = [(k + re + C) * (k + b + C) for k in range(n + 1)]
        bg = re + b + 2 * t
    Cn = [k * (k - 1 + bg) for k in range(n + 1)]
    diag = [A[k] + Cn[k] - al * al for k in range(n + 1)]
    prod = [None] + [A[k - 1] * Cn[k] for k in range(1, n + 1)]
    return diag, prod


def connection_coeffs(pp: ProcessParams, x: float, s: float, n: int,
                      t_probe: float = 1.0) -> ConnectionCoeffs:
    """Coefficients b_{m,k}(x, s) with Q_m(y; x, t, s) = sum_k b_{m,k} p_k(y; t).

    Both families are expanded in monomials at ``t = t_probe`` and the unit
    triangular change of basis is solved.  The arithmetic is exact on the
    binary values of the inputs; the monomial route cancels heavily, so
    floating point would lose digits in the small coefficients.
    """
    if n < 1:
        raise ArgumentError("n must be at least 1")
    _check_degree(n)
    Q = _monomial_table(*_kernel_recurrence(pp.C, s, t_probe, x, n), n)
    P = _monomial_table(*_marginal_recurrence(pp, t_probe, n), n)
    out = np.zeros((n + 1, n + 1))
    for m in range(n + 1):
        # back substitution: P b = Q[:, m], P unit upper triangular
        b = [Fraction(0)] * (n + 1)
        for i in range(m, -1, -1):
            acc = Q[i][m]
            for j in range(i + 1, m + 1):
                acc -= P[i][j] * b[j]
            b[i] = acc
        out[m, :m + 1] = [float(v) for v in b[:m + 1]]
    return ConnectionCoeffs(n, out)
