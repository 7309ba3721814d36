"""Classified orthogonality measures: transition kernels, marginal laws and
sigma-finite entrance laws, with density evaluation, atom masses and a few
numerical cross-checks."""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate

from . import _numerics as _nx
from .cdh_polynomials import favard_classify, orthonormal_values
from .errors import ArgumentError, ConvergenceError, DomainError
from .params import CdhParams, ProcessParams, kernel_cdh
from .special_functions import log_gamma_complex, pochhammer

DEGENERATE = "Degenerate"
FINITE = "FiniteAtomic"
MIXED = "Mixed"
_KIND_CODE = {DEGENERATE: _nx.KIND_DEGENERATE, FINITE: _nx.KIND_FINITE, MIXED: _nx.KIND_MIXED}
_KIND_NAME = {v: k for k, v in _KIND_CODE.items()}

TIME_TOL = 1e-12

__all__ = [
    "ProcessParams", "MixedMeasure", "StateSpaceSet", "state_space_contains",
    "transition_kernel", "marginal_law", "entrance_law", "density_eval",
    "log_density_eval", "continuous_mass", "total_mass", "atom_masses_christoffel",
    "marginal_mass_lower", "marginal_mass_upper", "entrance_mass_lower",
    "entrance_mass_upper", "entrance_limit_compare", "entrance_limit_bound",
    "entrance_invariance_residual", "measure_to_json",
]


@dataclass(frozen=True)
class MixedMeasure:
    """A classified measure.

    ``gamma_args`` describes the continuous part as a product of
    |Gamma(re + i(w + shift))|^2 factors over |Gamma(2iw)|^2, in w = sqrt(y),
    scaled by exp(-log_normalizer).
    """
    kind: str
    atoms: tuple = ()
    point: float = None
    density_params: CdhParams = None
    gamma_args: tuple = ()
    log_normalizer: float = None
    normalized: bool = True
    label: dict = field(default_factory=dict, compare=False)

    @property
    def has_density(self):
        return self.kind == MIXED

    @property
    def locations(self):
        return np.array([a[0] for a in self.atoms], dtype=float)

    @property
    def masses(self):
        return np.array([a[1] for a in self.atoms], dtype=float)

    @property
    def atom_mass(self):
        return float(sum(a[1] for a in self.atoms))

    def arrays(self):
        """(kind code, point, ar, ai, ln, locs, masses) for the compiled core."""
        ar = np.array([g[0] for g in self.gamma_args], dtype=float)
        ai = np.array([g[1] for g in self.gamma_args], dtype=float)
        point = self.point if self.point is not None else 0.0
        ln = self.log_normalizer if self.log_normalizer is not None else 0.0
        if self.kind == DEGENERATE:
            locs = np.array([point])
            masses = np.array([1.0])
        else:
            locs, masses = self.locations, self.masses
        return _KIND_CODE[self.kind], point, ar, ai, ln, locs, masses


def _degenerate(point, **label):
    return MixedMeasure(DEGENERATE, atoms=((float(point), 1.0),), point=float(point), label=label)


class StateSpaceSet:
    """The time-s state space: a half-line, or finitely many atoms plus [0, inf)."""

    def __init__(self, C, s):
        self.C = float(C)
        self.s = float(s)

    @property
    def atoms(self):
        C, s = self.C, self.s
        if s <= C:
            return []
        return [-(C - s + n) ** 2 for n in range(int(math.ceil(s - C))) if n < s - C]

    @property
    def lower(self):
        return -(self.C - self.s) ** 2 if self.s <= self.C else 0.0

    def contains(self, x, tol=_nx.STATE_TOL):
        if self.s <= self.C:
            return x >= self.lower - tol
        if x >= 0.0:
            return True
        return any(abs(x - a) <= tol for a in self.atoms)

    __contains__ = contains


def state_space_contains(C, s, x):
    return StateSpaceSet(C, s).contains(x)


def _from_setup(kind, point, ar, ai, ln, locs, masses, params, normalized=True, **label):
    kind = _KIND_NAME[int(kind)]
    if kind == DEGENERATE:
        return _degenerate(point, **label)
    atoms = tuple((float(l), float(m)) for l, m in zip(locs, masses))
    if kind == FINITE:
        return MixedMeasure(FINITE, atoms=atoms, density_params=params, label=label)
    return MixedMeasure(MIXED, atoms=atoms, density_params=params,
                        gamma_args=tuple(zip(map(float, ar), map(float, ai))),
                        log_normalizer=float(ln), normalized=normalized, label=label)


def transition_kernel(C, s, t, x):
    """The kernel p_{s,t}(x, .) from state x at time s to time t."""
    C, s, t, x = float(C), float(s), float(t), float(x)
    if not s < t:
        raise ArgumentError(f"need s < t, got s={s:g}, t={t:g}")
    setup = _nx.kernel_setup(C, s, t, x)
    params = kernel_cdh(C, s, t, x) if setup[0] != _nx.KIND_DEGENERATE else None
    return _from_setup(*setup, params, C=C, s=s, t=t, x=x)


# ----------------------------------------------------------- marginal laws


def _lg(z):
    v = log_gamma_complex(complex(z))
    return complex(v.re, v.im)


def marginal_mass_lower(pp: ProcessParams, t, k):
    """Mass of the marginal atom at -(A+t+k)^2 (real A with A + t < 0)."""
    A, B, C = pp.A.real, pp.B.real, pp.C
    lg = _lg(-A + C - 2 * t) - _lg(-2 * (A + t)) + _lg(B - A) - _lg(B + C)
    poch = ((A + k + t) * pochhammer(A + C, k) * pochhammer(2 * (A + t), k)
            / (math.factorial(k) * (A + t) * pochhammer(A - C + 2 * t + 1, k))
            * pochhammer(A + B + 2 * t, k) / pochhammer(A - B + 1, k))
    return float((np.exp(lg) * poch * (-1) ** k).real)


def marginal_mass_upper(pp: ProcessParams, t, k):
    """Mass of the marginal atom at -(C-t+k)^2 (t > C)."""
    A, B, C = pp.A, pp.B, pp.C
    lg = _lg(A - C + 2 * t) - _lg(2 * (t - C)) + _lg(B - C + 2 * t) - _lg(A + B + 2 * t)
    poch = ((C + k - t) / (math.factorial(k) * (C - t))
            * pochhammer(A + C, k) * pochhammer(complex(2 * (C - t)), k)
            / pochhammer(-A + C - 2 * t + 1, k)
            * pochhammer(B + C, k) / pochhammer(-B + C - 2 * t + 1, k))
    return float((np.exp(lg) * poch * (-1) ** k).real)


def _atom_indices(a):
    # k >= 0 with a + k < 0
    return range(_nx._n_atoms(float(a)))


def marginal_law(pp: ProcessParams, t):
    """The time-t marginal law of the process with parameters pp."""
    t = float(t)
    tau = pp.tau
    if t < tau - TIME_TOL:
        raise ArgumentError(f"t={t:g} precedes the start time tau={tau:g}")
    if abs(t - tau) <= TIME_TOL:
        return _degenerate(pp.start_point, t=t)
    params = pp.marginal_cdh(t)
    A, B, C = pp.A, pp.B, pp.C
    ln = _nx.LOG_4PI + (_lg(A + C) + _lg(B + C) + _lg(A + B + 2 * t)).real
    atoms = []
    if pp.is_real:
        for k in _atom_indices(A.real + t):
            atoms.append((-(A.real + t + k) ** 2, marginal_mass_lower(pp, t, k)))
    for k in _atom_indices(C - t):
        atoms.append((-(C - t + k) ** 2, marginal_mass_upper(pp, t, k)))
    atoms.sort()
    ar, ai = params.gamma_args()
    return MixedMeasure(MIXED, atoms=tuple(atoms), density_params=params,
                        gamma_args=tuple(zip(map(float, ar), map(float, ai))),
                        log_normalizer=float(ln), normalized=True, label={"t": t})


# ----------------------------------------------------------- entrance laws


def entrance_mass_lower(A, C, t, j):
    """Entrance-law atom mass at -(A+t+j)^2."""
    lg = _lg(A + C) + _lg(C - A - 2 * t) - _lg(-2 * (A + t))
    poch = ((A + j + t) / (math.factorial(j) * (A + t)) * pochhammer(A + C, j)
            * pochhammer(2 * (A + t), j) / pochhammer(A - C + 2 * t + 1, j))
    return float((np.exp(lg) * poch).real)


def entrance_mass_upper(A, C, t, k):
    """Entrance-law atom mass at -(C-t+k)^2."""
    lg = _lg(A - C + 2 * t) + _lg(A + C) - _lg(2 * (t - C))
    poch = ((C + k - t) / (math.factorial(k) * (C - t)) * pochhammer(A + C, k)
            * pochhammer(2 * (C - t), k) / pochhammer(-A + C - 2 * t + 1, k))
    return float((np.exp(lg) * poch).real)


def entrance_law(A, C, t):
    """The sigma-finite entrance law at time t (not normalizable)."""
    A, C, t = float(A), float(C), float(t)
    if not A + C > 0:
        raise ArgumentError(f"need A + C > 0, got {A + C:g}")
    atoms = [(-(A + t + j) ** 2, entrance_mass_lower(A, C, t, j)) for j in _atom_indices(A + t)]
    atoms += [(-(C - t + k) ** 2, entrance_mass_upper(A, C, t, k)) for k in _atom_indices(C - t)]
    atoms.sort()
    return MixedMeasure(MIXED, atoms=tuple(atoms), density_params=None,
                        gamma_args=((A + t, 0.0), (C - t, 0.0)),
                        log_normalizer=_nx.LOG_4PI, normalized=False,
                        label={"A": A, "C": C, "t": t})


# ----------------------------------------------------------- evaluation


def _density_arrays(m):
    if not m.has_density:
        raise DomainError(f"a {m.kind} measure has no density")
    _, _, ar, ai, ln, _, _ = m.arrays()
    return ar, ai, ln


def log_density_eval(m: MixedMeasure, x):
    ar, ai, ln = _density_arrays(m)
    x = float(x)
    if not x > 0:
        raise DomainError("the density lives on (0, inf)")
    return _nx.log_density_y(x, ar, ai, ln)


def density_eval(m: MixedMeasure, x):
    """Density of the continuous part at x > 0."""
    return math.exp(log_density_eval(m, x))


def _w_cutoff(m, ar, ai, ln, rel=1e-16):
    # step out past the bulk until the w-density is negligible against its peak
    w = max(1.0, max(abs(ai)) + 1.0)
    grid = np.linspace(1e-6, w, 200)
    peak = max(_nx.density_w(v, ar, ai, ln) for v in grid)
    while True:
        w += 1.0
        f = _nx.density_w(w, ar, ai, ln)
        peak = max(peak, f)
        if f < rel * peak and w > max(abs(ai)) + 5:
            return w


def continuous_mass(m: MixedMeasure, w_max=None):
    """Mass of the continuous part by QUADPACK on unit panels in w = sqrt(x)."""
    ar, ai, ln = _density_arrays(m)
    if not m.normalized and w_max is None:
        raise DomainError("sigma-finite measure: give a truncation w_max")
    end = _w_cutoff(m, ar, ai, ln) if w_max is None else float(w_max)
    edges = np.arange(0.0, end + 1.0, 1.0)
    edges[-1] = end
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(_nx.density_w, a, b, args=(ar, ai, ln), epsabs=1e-13, epsrel=1e-12, limit=200)
        total += val
    return total


def total_mass(m: MixedMeasure):
    if m.kind != MIXED:
        return m.atom_mass
    return continuous_mass(m) + m.atom_mass


# ----------------------------------------------------------- Christoffel


def atom_masses_christoffel(p: CdhParams, locations, truncation=64, levels=8):
    """Atom masses as reciprocals of Christoffel sums 1/sum_n p~_n(x)^2.

    Finite-atom families use the exact finite sum.  Otherwise partial sums at
    truncation * 2^i are Richardson-extrapolated using the algebraic tail
    N^{-2 sqrt(-x) - j}; the last two levels must agree to 1e-8.
    """
    if truncation < 50:
        raise ArgumentError("truncation must be at least 50")
    locations = [float(x) for x in locations]
    fav = favard_classify(p)
    if fav.kind == "NotOrthogonal":
        raise DomainError("parameters do not define a positive measure")
    if fav.kind == "FiniteAtoms":
        n = fav.N - 1
        vals = orthonormal_values(p, n, np.array(locations))
        return list(1.0 / np.sum(vals ** 2, axis=0))
    sizes = [truncation * 2 ** i for i in range(levels)]
    vals = orthonormal_values(p, sizes[-1], np.array(locations))
    partial = np.cumsum(vals ** 2, axis=0)
    out = []
    for j, x in enumerate(locations):
        if x >= 0:
            raise DomainError("atoms lie on the negative axis")
        e0 = -2.0 * math.sqrt(-x)
        table = [np.array([partial[n, j] for n in sizes])]
        for lev in range(1, levels):
            f = 2.0 ** (e0 - (lev - 1))
            prev = table[-1]
            table.append((prev[1:] - f * prev[:-1]) / (1.0 - f))
        best = table[-1][0]
        second = table[-2][1]
        if not abs(best - second) <= 1e-8 * abs(best):
            raise ConvergenceError(f"Christoffel sum at x={x:g} did not settle "
                                   f"({best:.12g} vs {second:.12g})")
        out.append(1.0 / best)
    return out


# ----------------------------------------------------------- entrance checks


def entrance_limit_bound(B, t, x):
    return math.exp(-x / (B + t) ** 2 - x / (B + t))


def entrance_limit_compare(A, C, t, B, x):
    """(Gamma-rescaled marginal density, entrance density) at x."""
    pp = ProcessParams.real(A, B, C)
    if not t > pp.tau:
        raise ArgumentError("need t > -(A+B)/2")
    if not x > 0:
        raise DomainError("x must be positive")
    marg = marginal_law(pp, t)
    log_scale = (_lg(A + C) + _lg(B + C) + _lg(A + B + 2 * t) - 2 * _lg(B + t)).real
    scaled = math.exp(log_scale + log_density_eval(marg, x))
    return scaled, density_eval(entrance_law(A, C, t), x)


def _kernel_mass_on(C, s, t, x, target):
    """p_{s,t}(x, U) for U an interval (lo, hi) in (0, inf) or an atom location."""
    k = transition_kernel(C, s, t, x)
    if isinstance(target, tuple):
        if k.kind != MIXED:
            return 0.0
        _, _, ar, ai, ln, _, _ = k.arrays()
        return _nx.integrate_density(ar, ai, ln, math.sqrt(target[1]), math.sqrt(target[0]))
    return sum(mass for loc, mass in k.atoms if abs(loc - target) <= 1e-9)


def entrance_invariance_residual(A, C, s, t, targets):
    """Max relative gap between int p_s(dx) p_{s,t}(x, U) and p_t(U).

    Each target is an interval (lo, hi) inside (0, inf) or an atom location
    of the time-t entrance law.  Indicator sets replace polynomial test
    functions, whose integrals against these measures diverge.
    """
    if not s < t:
        raise ArgumentError("need s < t")
    src = entrance_law(A, C, s)
    dst = entrance_law(A, C, t)
    _, _, ar, ai, ln, _, _ = src.arrays()
    worst = 0.0
    for target in targets:
        if isinstance(target, tuple):
            lo, hi = target
            if not 0 <= lo < hi:
                raise ArgumentError("intervals must lie in [0, inf)")
            _, _, dar, dai, dln, _, _ = dst.arrays()
            rhs = _nx.integrate_density(dar, dai, dln, math.sqrt(hi), math.sqrt(lo))
        else:
            rhs = sum(mass for loc, mass in dst.atoms if abs(loc - target) <= 1e-9)

        def outer(w):
            if w <= 0:
                return 0.0
            return _nx.density_w(w, ar, ai, ln) * _kernel_mass_on(C, s, t, w * w, target)

        w_end = 40.0 + math.sqrt(max(target[1], 0.0)) if isinstance(target, tuple) else 40.0
        edges = np.arange(0.0, w_end + 1.0, 1.0)
        lhs = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            lhs += integrate.quad(outer, a, b, epsabs=1e-14, epsrel=1e-10, limit=100)[0]
        for loc, mass in src.atoms:
            lhs += mass * _kernel_mass_on(C, s, t, loc, target)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return worst


ENTRANCE_TRUNCATIONS = (10.0, 20.0, 40.0)  # cutoffs in w = sqrt(x)


def measure_to_json(m: MixedMeasure):
    """Serialisable record of a measure."""
    out = {"kind": m.kind}
    if m.kind == DEGENERATE:
        out["point"] = m.point
    dp = None
    if m.kind == MIXED:
        if m.density_params is not None:
            dp = m.density_params.as_dict()
        else:
            # entrance law: two gamma factors only
            dp = {"alpha": m.gamma_args[1][0], "beta_re": m.gamma_args[0][0], "beta_im": 0.0,
                  "gamma_re": None, "gamma_im": None}
    elif m.kind == FINITE and m.density_params is not None:
        dp = m.density_params.as_dict()
    out["density_params"] = dp
    out["log_normalizer"] = m.log_normalizer
    out["atoms"] = [{"location": loc, "mass": mass} for loc, mass in m.atoms]
    out["normalized"] = m.normalized
    if not m.normalized:
        # finiteness is not asserted; record the mass below a few cutoffs instead
        out["truncated_mass"] = [{"x_max": w * w, "mass": continuous_mass(m, w) + m.atom_mass}
                                 for w in ENTRANCE_TRUNCATIONS]
    return out
