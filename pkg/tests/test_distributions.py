import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import fsolve

from lossnet.distributions import (
    Family,
    MomentSummary,
    erlang2,
    exponential,
    from_mean_scv,
    hyper2,
    moments,
    phase_moments,
    sample,
)
from lossnet.errors import IncompatibleScv, NonpositiveMean

means = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


def test_exponential_rate():
    d = exponential(0.58)
    assert d.rates == (1 / 0.58,)
    assert moments(d) == MomentSummary(0.58, 1.0)


def test_erlang_phase_rate():
    d = erlang2(1.05)
    assert d.rates[0] == pytest.approx(2 / 1.05, rel=1e-15)
    assert moments(d).scv == 0.5


def test_hyper2_balanced_means_against_root_finder():
    # Solve the three moment/balance equations numerically and compare.
    m, scv = 2.0, 2.0

    def equations(x):
        p, r1, r2 = x
        return [
            p / r1 + (1 - p) / r2 - m,
            (2 * p / r1**2 + 2 * (1 - p) / r2**2) / m**2 - 1 - scv,
            p / r1 - (1 - p) / r2,
        ]

    p, r1, r2 = fsolve(equations, [0.7, 0.7, 0.3], xtol=1e-14)
    d = hyper2(m, scv)
    assert d.branch_prob == pytest.approx(p, abs=1e-10)
    assert d.rates == pytest.approx((r1, r2), abs=1e-10)
    assert d.branch_prob == pytest.approx((1 + math.sqrt(1 / 3)) / 2, abs=1e-15)


def test_hyper2_monte_carlo_moments():
    d = hyper2(2.0, 2.0)
    x = sample(d, np.random.default_rng(7), 1_000_000)
    assert x.mean() == pytest.approx(2.0, rel=0.01)
    assert x.var() / x.mean() ** 2 == pytest.approx(2.0, rel=0.03)


def test_stationary_excess_mean():
    assert moments(exponential(1.0)).q == 1.0
    assert moments(erlang2(1.05)).q == pytest.approx(0.7875, abs=1e-15)
    assert moments(hyper2(1.0, 3.0)).q == 2.0


@given(means)
def test_round_trip_exponential_and_erlang(m):
    for d, scv in ((exponential(m), 1.0), (erlang2(m), 0.5)):
        pm = phase_moments(d)
        assert pm.mean == pytest.approx(m, rel=1e-12)
        assert pm.scv == pytest.approx(scv, rel=1e-12)


@given(means, st.floats(min_value=1 + 1e-6, max_value=100))
def test_round_trip_hyper2(m, scv):
    pm = phase_moments(hyper2(m, scv))
    assert pm.mean == pytest.approx(m, rel=1e-12)
    assert pm.scv == pytest.approx(scv, rel=1e-9)


@given(means, st.floats(min_value=0.0, max_value=50), st.floats(min_value=0.0, max_value=50))
def test_q_monotone_in_scv(m, s1, s2):
    lo, hi = sorted((s1, s2))
    assert MomentSummary(m, lo).q <= MomentSummary(m, hi).q


def test_exponential_sample_mean():
    x = sample(exponential(1.0), np.random.default_rng(1), 1_000_000)
    assert abs(x.mean() - 1.0) < 0.01


def test_erlang_sample_scv():
    x = sample(erlang2(1.05), np.random.default_rng(2), 1_000_000)
    assert abs(x.var() / x.mean() ** 2 - 0.5) < 0.02


@pytest.mark.parametrize("d", [exponential(2.0), erlang2(2.0), hyper2(2.0, 4.0)])
def test_sampling_is_deterministic(d):
    a = sample(d, np.random.default_rng(11), 1000)
    b = sample(d, np.random.default_rng(11), 1000)
    assert a.tobytes() == b.tobytes()
    assert isinstance(sample(d, np.random.default_rng(11)), float)


@pytest.mark.parametrize(
    "family, scv",
    [(Family.EXPONENTIAL, 2.0), (Family.ERLANG2, 1.0), (Family.HYPER2, 1.0), (Family.HYPER2, 0.5)],
)
def test_incompatible_scv(family, scv):
    with pytest.raises(IncompatibleScv):
        from_mean_scv(1.0, scv, family)


@pytest.mark.parametrize("mean", [0.0, -1.0, math.inf, math.nan])
def test_nonpositive_mean(mean):
    with pytest.raises(NonpositiveMean):
        exponential(mean)


def test_family_aliases():
    assert Family.parse("exp") is Family.EXPONENTIAL
    assert Family.parse("erlang2") is Family.ERLANG2
    with pytest.raises(ValueError):
        Family.parse("gamma")
