import io
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from cdhahn.errors import ArgumentError, NotNormalized
from cdhahn.measures import entrance_law, marginal_law, state_space_contains, transition_kernel
from cdhahn.markov_process import (SeededStream, Trajectory, conditional_mean_exact,
                                   empirical_moments, sample_ensemble, sample_measure,
                                   sample_trajectory, standard_form_states,
                                   standard_form_transform, write_trajectory_csv)
from cdhahn.params import ProcessParams

PP = ProcessParams.real(1, 2, 3)


def test_same_seed_same_path():
    a = sample_trajectory(PP, [0, 1, 2], SeededStream(42, 0))
    b = sample_trajectory(PP, [0, 1, 2], SeededStream(42, 0))
    assert np.array_equal(a.states, b.states)
    c = sample_trajectory(PP, [0, 1, 2], SeededStream(42, 1))
    assert not np.array_equal(a.states, c.states)


@pytest.mark.parametrize("threads", [1, 3])
def test_ensemble_rows_equal_single_paths(threads):
    times = [-1.5, -0.5, 0.25, 2.0]
    ens = sample_ensemble(PP, times, 40, seed=7, threads=threads)
    for i in range(40):
        single = sample_trajectory(PP, times, SeededStream(7, i)).states
        assert np.array_equal(ens[i], single)


def test_degenerate_sampling():
    pp = ProcessParams.real(1, 3, 2)
    m = marginal_law(pp, -2)
    assert sample_measure(m, SeededStream(1)) == -1.0
    assert np.all(sample_measure(m, SeededStream(1), size=50) == -1.0)


def test_finite_atomic_frequencies():
    k = transition_kernel(0, 2, 3, -1.0)
    draws = sample_measure(k, SeededStream(3), size=100_000)
    assert set(np.unique(draws)) <= {-9.0, -4.0}
    freq = np.mean(draws == -9.0)
    assert abs(freq - 0.4) < 3 * math.sqrt(0.24 / 100_000)


def test_entrance_law_not_sampleable():
    with pytest.raises(NotNormalized):
        sample_measure(entrance_law(1, 2, 0), SeededStream(0))


def test_marginal_mean():
    ens = sample_ensemble(PP, [0.0], 100_000, seed=11)
    assert abs(ens[:, 0].mean() - 11.0) <= 0.0735


def test_start_at_tau():
    tr = sample_trajectory(PP, [PP.tau], SeededStream(5))
    assert tr.states.shape == (1,)
    assert state_space_contains(PP.C, PP.tau, tr.states[0])
    with pytest.raises(ArgumentError):
        sample_trajectory(PP, [PP.tau - 0.5, 0.0], SeededStream(5))
    with pytest.raises(ArgumentError):
        sample_trajectory(PP, [1.0, 0.5], SeededStream(5))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32), st.floats(0.1, 3), st.floats(0.1, 3), st.floats(-0.5, 2))
def test_paths_stay_in_state_space(seed, a, b, c):
    assume(a + c > 0.05)
    pp = ProcessParams.real(a, a + b, c)
    times = pp.tau + np.array([0.0, 0.3, 1.1, 2.5, 4.0])
    ens = sample_ensemble(pp, times, 20, seed=seed)
    for row in ens:
        for t, x in zip(times, row):
            assert state_space_contains(pp.C, t, x)


def test_boundary_state_is_trapped():
    # start on the atom -(C-s)^2 with C-s > 0: the kernel is a point mass
    C, s = 2.0, 0.0
    k = transition_kernel(C, s, 1.0, -(C - s) ** 2)
    assert sample_measure(k, SeededStream(9)) == pytest.approx(-(C - 1.0) ** 2)


def test_conditional_mean_examples():
    assert conditional_mean_exact(3, 0, 1, 0.0) == 5.0
    assert conditional_mean_exact(3, 1, 1, 2.0) == 2.0
    with pytest.raises(ArgumentError):
        conditional_mean_exact(0, 2, 3, -2.0)
    with pytest.raises(ArgumentError):
        conditional_mean_exact(3, 1, 0, 2.0)


def test_standard_form_starts_at_zero():
    ens = sample_ensemble(PP, [PP.tau, 0.0, 1.0], 200, seed=1)
    std, x = standard_form_states(PP, [PP.tau, 0.0, 1.0], ens)
    assert std[0] == 0.0
    assert np.allclose(x[:, 0], 0.0, atol=1e-12)
    tr = standard_form_transform(PP, Trajectory([PP.tau, 0.0], ens[0, :2]))
    assert tr.times[1] == pytest.approx(3.0)


def test_empirical_moments_checks():
    a = Trajectory([0, 1], [1.0, 2.0])
    b = Trajectory([0, 2], [1.0, 2.0])
    with pytest.raises(ArgumentError):
        empirical_moments([a, b])
    single = empirical_moments([a])
    assert np.all(single.var == 0)
    stats = empirical_moments(np.array([[1.0, 2.0], [3.0, 6.0]]), times=[0, 1])
    assert stats.mean.tolist() == [2.0, 4.0]
    assert stats.cov[0, 1] == pytest.approx(4.0)


def test_trajectory_csv():
    buf = io.StringIO()
    write_trajectory_csv(buf, [0.0, 0.5], np.array([[1.0, 2.0], [3.0, 0.1]]))
    lines = buf.getvalue().splitlines()
    assert lines[0] == "replicate,time,state"
    assert lines[1] == "0,0,1"
    assert lines[-1] == "1,0.5,0.10000000000000001"
