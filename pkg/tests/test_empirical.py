import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bimmpp.empirical import (counting_path, empirical_moment_set, joint_moment_estimates,
                              lag_autocorr)
from bimmpp.errors import TooShort, ValidationError, ZeroVariance
from bimmpp.model import ModelParams
from bimmpp.simulate import BivariateTrace, RngStream, simulate_trace
from oracles import EXAMPLE1


def test_small_trace_arithmetic():
    ms = empirical_moment_set(BivariateTrace.from_pairs([(1, 2), (3, 4), (5, 6)]))
    assert ms.muT[0] == 3.0 and ms.muK[0] == 4.0
    assert ms.eta11 == pytest.approx((2 + 12 + 30) / 3)
    assert ms.eta21 == pytest.approx((2 + 36 + 150) / 3)


def test_constant_trace_flags_degenerate():
    ms = empirical_moment_set(BivariateTrace.from_pairs([(1, 1)] * 10))
    assert ms.rhoT1 == 0.0 and ms.rhoK1 == 0.0 and ms.corrTK == 0.0
    assert set(ms.degenerate) == {"rhoT1", "rhoK1", "corrTK"}


def test_too_short():
    with pytest.raises(TooShort):
        empirical_moment_set(BivariateTrace.from_pairs([(1, 1), (2, 2)]))
    with pytest.raises(TooShort):
        lag_autocorr([1.0, 2.0], 1)


def test_autocorr_alternating():
    assert lag_autocorr([1.0, 2.0] * 50, 1) == pytest.approx(-1.0, abs=0.05)


def test_autocorr_iid():
    x = np.random.default_rng(0).uniform(size=10_000)
    assert lag_autocorr(x, 1) == pytest.approx(0.0, abs=0.03)


def test_autocorr_slowly_varying_sequence():
    # x_{i+1} close to x_i throughout
    assert lag_autocorr(np.arange(1000.0), 1) == pytest.approx(1.0, abs=0.01)


def test_autocorr_errors():
    with pytest.raises(ZeroVariance):
        lag_autocorr(np.ones(10), 1)
    with pytest.raises(ValidationError):
        lag_autocorr(np.arange(10.0), 0)


@given(st.lists(st.floats(0.01, 100.0), min_size=5, max_size=60))
@settings(max_examples=100, deadline=None)
def test_autocorr_bounded(values):
    try:
        r = lag_autocorr(values, 1)
    except ZeroVariance:
        return
    assert -1.0 - 1e-12 <= r <= 1.0 + 1e-12


def test_joint_estimates():
    t, k = np.array([1.0, 2.0]), np.array([3.0, 4.0])
    assert np.allclose(joint_moment_estimates(t, k), [5.5, (3 + 16) / 2, (9 + 32) / 2])
    assert np.allclose(joint_moment_estimates(t, k, True)[3], (9 + 64) / 2)


def test_example1_sample_near_model():
    tr = simulate_trace(ModelParams(**EXAMPLE1), 1000, RngStream(1))
    ms = empirical_moment_set(tr)
    assert 0.4 < ms.muT[0] < 0.75
    assert ms.corrTK > 0.7


def test_counting_path():
    cp = counting_path(BivariateTrace.from_pairs([(1, 10), (2, 20)]))
    assert np.array_equal(cp.cum_t, [1, 3]) and np.array_equal(cp.cum_k, [10, 30])
    assert cp.n_t(0.5) == 0
    assert cp.n_t(1.0) == 1
    assert cp.n_joint(3, 15) == 1
    assert cp.n_joint(3, 30) == 2
    with pytest.raises(TooShort):
        counting_path(BivariateTrace(np.empty(0), np.empty(0)))


@given(st.lists(st.tuples(st.floats(0.01, 5), st.floats(0.01, 5)), min_size=1, max_size=30),
       st.floats(0, 50), st.floats(0, 50))
@settings(max_examples=100, deadline=None)
def test_joint_count_bounded_by_marginals(pairs, t, k):
    cp = counting_path(BivariateTrace.from_pairs(pairs))
    n = cp.n_joint(t, k)
    assert n <= cp.n_t(t) and n <= cp.n_k(k)
    assert cp.n_joint(t + 1.0, k) >= n
