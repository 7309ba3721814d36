"""Gauss rules from Jacobi matrices, and the polynomial-moment checks built
on them: orthogonality, martingale polynomials and both forms of the
Chapman-Kolmogorov equations."""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .cdh_polynomials import eval_poly, favard_classify
from .errors import ArgumentError, DomainError
from .measures import (DEGENERATE, FINITE, MixedMeasure, marginal_law,
                       state_space_contains, transition_kernel)
from .params import CdhParams, ProcessParams

__all__ = [
    "QuadratureRule", "golub_welsch", "rule_for_measure", "kernel_moments",
    "jacobi_moments", "verify_orthogonality", "verify_martingale",
    "verify_chapman_kolmogorov", "verify_marginal_evolution",
]


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.nodes)))

    def moments(self, degree):
        return np.array([np.dot(self.weights, self.nodes ** k) for k in range(degree + 1)])


def golub_welsch(p: CdhParams, K: int) -> QuadratureRule:
    """K-node Gauss rule for the orthogonality measure of p."""
    if K < 1:
        raise ArgumentError("K must be positive")
    fav = favard_classify(p, scan_limit=max(K, 1))
    if fav.kind == "NotOrthogonal":
        raise DomainError(f"beta_{fav.first_bad_index} makes the measure non-positive")
    if fav.kind == "FiniteAtoms" and K > fav.N:
        raise DomainError(f"the measure has only {fav.N} atoms; K={K} is too large")
    n = np.arange(K, dtype=float)
    diag = p.diag(n)
    off = p.A(n[:-1]) * p.C(n[1:])
    if np.any(off < 0):
        raise DomainError("negative off-diagonal product")
    nodes, vecs = eigh_tridiagonal(diag, np.sqrt(off))
    weights = vecs[0] ** 2
    return QuadratureRule(nodes, weights, 2 * K - 1)


def rule_for_measure(m: MixedMeasure, degree: int) -> QuadratureRule:
    """A rule integrating polynomials up to ``degree`` against m exactly."""
    if m.kind == DEGENERATE:
        return QuadratureRule(np.array([m.point]), np.array([1.0]), 10 ** 9)
    if m.kind == FINITE:
        return QuadratureRule(m.locations, m.masses, 10 ** 9)
    if m.density_params is None:
        raise DomainError("no polynomial structure for a sigma-finite law")
    return golub_welsch(m.density_params, degree + 4)


def jacobi_moments(diag, sub_super, degree):
    """e0^T J^k e0 for k <= degree, with J monic tridiagonal given by its
    diagonal and the products of its off-diagonal pairs."""
    size = degree // 2 + 2
    v = np.zeros(size)
    v[0] = 1.0
    out = np.empty(degree + 1)
    out[0] = 1.0
    d = np.asarray(diag[:size], dtype=float)
    e = np.asarray(sub_super[:size - 1], dtype=float)
    for k in range(1, degree + 1):
        w = d * v
        w[:-1] += e * v[1:]
        w[1:] += v[:-1]
        v = w
        out[k] = v[0]
    return out


def kernel_moments(C, s, t, x, degree):
    """Moments of p_{s,t}(x, .) read off the recurrence, as polynomials in x.

    These agree with the kernel for x in E_s and extend it off E_s.
    """
    size = degree // 2 + 2
    n = np.arange(size, dtype=float)
    alpha = C - t
    r = t - s
    A = (n + alpha + r) ** 2 + x
    Cn = n * (n - 1 + 2 * r)
    diag = A + Cn - alpha ** 2
    prod = A[:-1] * Cn[1:]
    return jacobi_moments(diag, prod, degree)


def _rel(lhs, rhs, scale):
    scale = np.maximum(np.maximum(np.abs(rhs), scale), 1e-300)
    return float(np.max(np.abs(lhs - rhs) / scale))


def verify_orthogonality(p: CdhParams, n_max: int) -> float:
    """Worst residual of the Gram matrix against delta_mn prod beta_j, each
    entry scaled by sqrt(norm_m norm_n)."""
    fav = favard_classify(p)
    if fav.kind == "NotOrthogonal":
        raise DomainError("not an orthogonal family")
    top = n_max if fav.kind == "InfiniteSupport" else min(n_max, fav.N - 1)
    K = top + 5 if fav.kind == "InfiniteSupport" else fav.N
    rule = golub_welsch(p, K)
    vals = np.array([eval_poly(p, n, rule.nodes) for n in range(top + 1)])
    gram = (vals * rule.weights) @ vals.T
    j = np.arange(1, top + 1, dtype=float)
    norms = np.concatenate([[1.0], np.cumprod(p.A(j - 1) * p.C(j))])
    expected = np.diag(norms)
    scale = np.sqrt(np.outer(norms, norms))
    return float(np.max(np.abs(gram - expected) / scale))


def verify_martingale(pp: ProcessParams, s, t, x, n_max: int) -> float:
    """Worst scaled gap between int p_n(y; t) p_{s,t}(x, dy) and p_n(x; s)."""
    if not s < t:
        raise ArgumentError("need s < t")
    if not state_space_contains(pp.C, s, x):
        raise ArgumentError(f"x={x:g} is outside the state space at time s={s:g}; "
                            "the martingale identity is only claimed on it")
    rule = rule_for_measure(transition_kernel(pp.C, s, t, x), n_max)
    pt = pp.marginal_cdh(t)
    ps = pp.marginal_cdh(s)
    worst = 0.0
    for n in range(n_max + 1):
        vals = eval_poly(pt, n, rule.nodes)
        lhs = float(np.dot(rule.weights, vals))
        rhs = float(eval_poly(ps, n, x))
        scale = max(abs(rhs), float(np.dot(rule.weights, np.abs(vals))), 1e-300)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def _nested(rule, inner, degree):
    lhs = np.zeros(degree + 1)
    mag = np.zeros(degree + 1)
    for y, w in zip(rule.nodes, rule.weights):
        mk = inner(y)
        lhs += w * mk
        mag += abs(w) * np.abs(mk)
    return lhs, mag


def verify_chapman_kolmogorov(C, s, t, u, x, degree: int) -> float:
    """Worst scaled gap between the moments of int p_{s,t}(x, dy) p_{t,u}(y, .)
    and those of p_{s,u}(x, .), for k <= degree."""
    if not s < t < u:
        raise ArgumentError("need s < t < u")
    outer = rule_for_measure(transition_kernel(C, s, t, x), degree)
    lhs, mag = _nested(outer, lambda y: kernel_moments(C, t, u, y, degree), degree)
    rhs = rule_for_measure(transition_kernel(C, s, u, x), degree).moments(degree)
    return _rel(lhs, rhs, mag)


def verify_marginal_evolution(pp: ProcessParams, s, t, degree: int) -> float:
    """Same nested-moment check with the time-s marginal as outer measure."""
    if s < pp.tau - 1e-12:
        raise ArgumentError("s precedes tau")
    if not s < t:
        raise ArgumentError("need s < t")
    outer = rule_for_measure(marginal_law(pp, s), degree)
    lhs, mag = _nested(outer, lambda y: kernel_moments(pp.C, s, t, y, degree), degree)
    rhs = rule_for_measure(marginal_law(pp, t), degree).moments(degree)
    return _rel(lhs, rhs, mag)
