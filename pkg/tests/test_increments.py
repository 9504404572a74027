import math

import numpy as np
import pytest
from scipy import stats

from levyinv.errors import CapabilityError, ScheduleError, ScheduleWarning
from levyinv.increments import (
    GAUSSIAN, RADEMACHER, compound_poisson, poisson_inverse, sample_exact,
    sample_first_jump, sample_truncated, sample_u,
)
from levyinv.levy import BetaOverYSq, CauchyUnit, FiniteActivity, SymmetricStableLike
from levyinv.rng import RngStream, Streams


def test_rademacher_values_and_balance():
    rng = RngStream(1)
    u = np.concatenate([sample_u(RADEMACHER, 3, rng) for _ in range(5000)])
    assert set(np.unique(u)) == {-1.0, 1.0}
    assert abs(u.mean()) < 0.03


def test_gaussian_covariance():
    rng = RngStream(2)
    u = np.array([sample_u(GAUSSIAN, 2, rng) for _ in range(40000)])
    np.testing.assert_allclose(u.mean(axis=0), 0.0, atol=0.02)
    np.testing.assert_allclose(np.cov(u.T), np.eye(2), atol=0.03)


def test_unknown_u_law():
    with pytest.raises(ValueError):
        sample_u("cauchy", 1, RngStream(0))


@pytest.mark.parametrize("mean", [0.05, 1.0, 7.5, 800.0])
def test_poisson_inverse_matches_scipy(mean):
    for v in (1e-9, 0.1, 0.5, 0.9, 0.999999):
        assert poisson_inverse(mean, v) == int(stats.poisson.ppf(v, mean))


def test_exact_cauchy_increment_scale():
    # standard normalisation: Z_gamma ~ gamma * standard Cauchy
    levy = CauchyUnit.standard()
    rng = Streams.from_seed(3)
    gamma = 0.04
    z = np.array([sample_exact(levy, gamma, rng).jump_part[0] for _ in range(40000)])
    q25, q50, q75 = np.quantile(z, [0.25, 0.5, 0.75])
    assert abs(q50) < 0.002
    assert q75 - q25 == pytest.approx(2 * gamma, rel=0.03)
    assert stats.kstest(z / gamma, "cauchy").statistic < 0.01


def test_exact_stable_increment():
    levy = SymmetricStableLike(1.5)
    rng = Streams.from_seed(4)
    gamma = 0.2
    z = np.array([sample_exact(levy, gamma, rng).jump_part[0] for _ in range(20000)])
    scale = levy.unit_scale * gamma ** (1 / 1.5)
    assert stats.kstest(z, stats.levy_stable(1.5, 0.0, scale=scale).cdf).statistic < 0.015


def test_exact_needs_capability():
    with pytest.raises(CapabilityError):
        sample_exact(BetaOverYSq(), 0.1, Streams.from_seed(0))


def test_finite_activity_exact_counts():
    levy = FiniteActivity(2.0, [(1.0, 0.5), (-1.0, 0.5)])
    rng = Streams.from_seed(5)
    counts = [sample_exact(levy, 0.5, rng).jump_count for _ in range(20000)]
    assert np.mean(counts) == pytest.approx(1.0, abs=0.02)


def test_truncated_mean_count():
    levy = CauchyUnit()
    rng = Streams.from_seed(6)
    gamma, u = 0.01, 0.2  # lambda gamma = 2/u * gamma = 0.1
    counts = [sample_truncated(levy, gamma, u, rng).jump_count for _ in range(50000)]
    assert np.mean(counts) == pytest.approx(0.1, abs=0.003)


def test_truncated_without_jumps_is_minus_compensator():
    levy = BetaOverYSq()
    gamma, u = 1e-3, 0.5
    rng = Streams.from_seed(7)
    for _ in range(200):
        s = sample_truncated(levy, gamma, u, rng)
        if s.jump_count == 0:
            assert s.jump_part[0] == -gamma * levy.drift_compensator(u)


def test_first_jump_survival():
    levy = CauchyUnit()
    gamma, u = 0.1, 0.5  # lambda gamma = 0.4
    rng = Streams.from_seed(8)
    draws = [sample_first_jump(levy, gamma, u, rng) for _ in range(40000)]
    counts = np.array([d.jump_count for d in draws])
    assert counts.max() <= 1
    assert np.mean(counts == 0) == pytest.approx(math.exp(-0.4), abs=0.006)


def test_first_jump_value_before_gamma():
    levy = BetaOverYSq()
    gamma, u = 0.2, 0.5
    comp = levy.drift_compensator(u)
    rng = Streams.from_seed(9)
    for _ in range(500):
        s = sample_first_jump(levy, gamma, u, rng)
        if s.jump_count == 0:
            assert s.jump_part[0] == -gamma * comp
        else:
            # jump in (u, 1) minus t * comp with t <= gamma
            assert u - gamma * comp <= s.jump_part[0] < 1.0


def test_truncation_converges_to_exact():
    # dropped jumps |y| <= u have variance gamma * 2u/pi, so the KS distance
    # to gamma * Cauchy shrinks with u
    levy = CauchyUnit.standard()
    gamma = 0.05
    ref = stats.cauchy(scale=gamma).cdf
    d = {}
    for u in (0.05, 1e-3):
        rng = Streams.from_seed(11)
        z = [sample_truncated(levy, gamma, u, rng, budget=None).jump_part[0]
             for _ in range(20000)]
        d[u] = stats.kstest(z, ref).statistic
    assert d[1e-3] < 0.015
    assert d[0.05] > 2 * d[1e-3]


def test_determinism():
    levy = CauchyUnit()
    x = [sample_truncated(levy, 0.1, 0.3, Streams.from_seed(42), GAUSSIAN) for _ in range(2)]
    np.testing.assert_array_equal(x[0].jump_part, x[1].jump_part)
    np.testing.assert_array_equal(x[0].gaussian_part, x[1].gaussian_part)


def test_budget_warning():
    with pytest.warns(ScheduleWarning):
        compound_poisson(CauchyUnit(), 1.0, 0.1, Streams.from_seed(0), budget=16)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.5, 2.0])
def test_threshold_range(u):
    with pytest.raises(ScheduleError):
        sample_truncated(CauchyUnit(), 0.1, u, Streams.from_seed(0))
