"""Sampling: inverse-CDF draws from classified measures, trajectories of the
process started at tau, the standard-form transform, and Monte Carlo
moment estimates."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import csv
import math
import os

import numpy as np

from . import _numerics as _nx
from .errors import ArgumentError, NotNormalized
from .measures import MixedMeasure, marginal_law, state_space_contains
from .params import ProcessParams

__all__ = [
    "Trajectory", "SeededStream", "MomentStats", "sample_measure", "sample_trajectory",
    "sample_ensemble", "conditional_mean_exact", "standard_form_transform",
    "standard_form_states", "empirical_moments", "write_trajectory_csv",
]


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "states", np.asarray(self.states, dtype=float))
        if self.times.shape != self.states.shape:
            raise ArgumentError("times and states differ in length")


@dataclass(frozen=True)
class SeededStream:
    """Counter-based stream keyed by (seed, stream_id)."""
    seed: int
    stream_id: int = 0

    def generator(self):
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def _as_generator(rng):
    if isinstance(rng, SeededStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise ArgumentError("rng must be a SeededStream or numpy Generator")


def _draw(m: MixedMeasure, u):
    return _nx.draw(*m.arrays(), float(u))


def sample_measure(m: MixedMeasure, rng, size=None):
    """Inverse-CDF sample(s) from a normalized measure."""
    if not m.normalized:
        raise NotNormalized("cannot sample from a sigma-finite entrance law")
    gen = _as_generator(rng)
    if size is None:
        return _draw(m, gen.random())
    u = gen.random(size)
    return _draw_many(m, u)


def _draw_many(m: MixedMeasure, u):
    """Vector of draws for one measure; bitwise equal to repeated _draw."""
    u = np.asarray(u, dtype=float)
    kind, point, ar, ai, ln, locs, masses = m.arrays()
    out = np.empty(u.shape)
    if kind == _nx.KIND_DEGENERATE:
        out[:] = point
        return out
    cum = 0.0
    placed = np.zeros(u.shape, dtype=bool)
    for loc, mass in zip(locs, masses):
        hit = ~placed & (u < cum + mass)
        out[hit] = loc
        placed |= hit
        cum += mass
    rest = ~placed
    if kind == _nx.KIND_FINITE:
        out[rest] = locs[-1]
        return out
    if rest.any():
        tgt = u[rest] - cum
        order = np.argsort(tgt, kind="stable")
        vals = np.empty(tgt.shape)
        _nx.invert_sorted(ar, ai, ln, np.ascontiguousarray(tgt[order]), vals)
        res = np.empty(tgt.shape)
        res[order] = vals
        out[rest] = res
    return out


def _check_times(pp, times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ArgumentError("times must be a non-empty list")
    if np.any(np.diff(times) <= 0):
        raise ArgumentError("times must be strictly increasing")
    if times[0] < pp.tau - 1e-12:
        raise ArgumentError(f"first time {times[0]:g} precedes tau={pp.tau:g}")
    return times


def _uniforms(seed, stream_id, count):
    return SeededStream(seed, stream_id).generator().random(count)


def sample_trajectory(pp: ProcessParams, times, rng) -> Trajectory:
    """One path on the given grid.  One uniform is consumed per time point."""
    times = _check_times(pp, times)
    u = _as_generator(rng).random(times.size)
    states = np.empty(times.size)
    states[0] = _draw(marginal_law(pp, times[0]), u[0])
    for j in range(1, times.size):
        states[j] = _nx.kernel_draw(pp.C, times[j - 1], times[j], states[j - 1], u[j])
    return Trajectory(times, states)


def sample_ensemble(pp: ProcessParams, times, n_replicates: int, seed: int, threads=None):
    """States array (n_replicates, len(times)); row i equals
    sample_trajectory(pp, times, SeededStream(seed, i)).states."""
    times = _check_times(pp, times)
    if n_replicates < 1:
        raise ArgumentError("need at least one replicate")
    U = np.empty((n_replicates, times.size))
    for i in range(n_replicates):
        U[i] = _uniforms(seed, i, times.size)
    states = np.empty_like(U)
    states[:, 0] = _draw_many(marginal_law(pp, times[0]), U[:, 0])
    if threads is None:
        threads = int(os.environ.get("CDH_THREADS", "1") or 1)
    threads = max(1, min(threads, n_replicates))
    if threads == 1:
        _nx.chain_kernels(pp.C, times, states, U, 0)
    else:
        bounds = np.linspace(0, n_replicates, threads + 1).astype(int)
        with ThreadPoolExecutor(threads) as ex:
            jobs = [ex.submit(_nx.chain_kernels, pp.C, times, states[a:b], U[a:b], 0)
                    for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
            for j in jobs:
                j.result()
    return states


def conditional_mean_exact(C, s, t, x):
    """E[T_t | T_s = x] = x + 2C(t - s) - (t^2 - s^2)."""
    if t < s:
        raise ArgumentError("need s <= t")
    if not state_space_contains(C, s, x):
        raise ArgumentError(f"x={x:g} is outside the state space at time {s:g}")
    return x + 2.0 * C * (t - s) - (t * t - s * s)


def standard_form_states(pp: ProcessParams, times, states):
    """Map states at process times to the standard clock; returns
    (standard times, transformed states)."""
    times = np.asarray(times, dtype=float)
    if np.any(times < pp.tau - 1e-12):
        raise ArgumentError("a time precedes tau and has no standard-clock preimage")
    std = np.maximum(2.0 * (times - pp.tau), 0.0)
    apb = (pp.A + pp.B).real
    amb2 = ((pp.A - pp.B) ** 2).real
    root = math.sqrt(pp.ac_bc)
    shift = (std ** 2 - 2.0 * (apb + 2.0 * pp.C) * std + amb2) / (4.0 * root)
    return std, np.asarray(states, dtype=float) / root + shift


def standard_form_transform(pp: ProcessParams, traj: Trajectory) -> Trajectory:
    std, x = standard_form_states(pp, traj.times, traj.states)
    return Trajectory(std, x)


@dataclass(frozen=True)
class MomentStats:
    times: np.ndarray
    n: int
    mean: np.ndarray
    mean_se: np.ndarray
    var: np.ndarray
    var_se: np.ndarray
    second: np.ndarray
    second_se: np.ndarray
    cov: np.ndarray
    cov_se: np.ndarray


def empirical_moments(ensemble, times=None) -> MomentStats:
    """Means, variances, raw second moments and covariances with standard
    errors.  ``ensemble`` is a list of Trajectory or an (n, T) array."""
    if isinstance(ensemble, np.ndarray):
        X = np.asarray(ensemble, dtype=float)
        if times is None:
            raise ArgumentError("pass times with an array ensemble")
        times = np.asarray(times, dtype=float)
    else:
        ensemble = list(ensemble)
        if not ensemble:
            raise ArgumentError("empty ensemble")
        times = ensemble[0].times
        for tr in ensemble:
            if tr.times.shape != times.shape or np.any(tr.times != times):
                raise ArgumentError("trajectories are on different time grids")
        X = np.array([tr.states for tr in ensemble])
    n = X.shape[0]
    if n < 2:
        zero = np.zeros(X.shape[1])
        zz = np.zeros((X.shape[1],) * 2)
        return MomentStats(times, n, X.mean(axis=0), zero, zero, zero,
                           np.einsum("ni,nj->ij", X, X) / n, zz, zz, zz)
    mean = X.mean(axis=0)
    dev = X - mean
    var = dev.var(axis=0, ddof=1)
    m4 = (dev ** 4).mean(axis=0)
    T = X.shape[1]
    second = np.empty((T, T))
    second_se = np.empty((T, T))
    cov = np.empty((T, T))
    cov_se = np.empty((T, T))
    for i in range(T):
        for j in range(T):
            prod = X[:, i] * X[:, j]
            second[i, j] = prod.mean()
            second_se[i, j] = prod.std(ddof=1) / math.sqrt(n)
            cp = dev[:, i] * dev[:, j]
            cov[i, j] = cp.sum() / (n - 1)
            cov_se[i, j] = cp.std(ddof=1) / math.sqrt(n)
    return MomentStats(times, n, mean, X.std(axis=0, ddof=1) / math.sqrt(n), var,
                       np.sqrt(np.maximum(m4 - var ** 2, 0.0) / n),
                       second, second_se, cov, cov_se)


def write_trajectory_csv(fh, times, states):
    """Rows ``replicate,time,state`` with 17 significant digits."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["replicate", "time", "state"])
    states = np.atleast_2d(states)
    for i, row in enumerate(states):
        for t, x in zip(times, row):
            w.writerow([i, f"{t:.17g}", f"{x:.17g}"])
