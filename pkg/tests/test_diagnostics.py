import math

import numpy as np
import pytest
from scipy import stats

from levyinv import diagnostics as dg
from levyinv.empirical import CauchyCDF, EmpiricalMeasure
from levyinv.errors import ConfigError, HypothesisError
from levyinv.euler import SdeSpec, run_chain
from levyinv.levy import BetaOverYSq, CauchyUnit, FiniteActivity, SymmetricStableLike
from levyinv.schedules import CallableRule, PolynomialRule, StepSchedule

# Af for b = -x, kappa = 1, standard Cauchy driver and f = bump(0, 1), from
# the exact semigroup X_t = x e^-t + (1 - e^-t) C with Richardson
# extrapolation in t (/root/notes/oracles/oracles.py)
AF_ORACLE = {0.0: -2.03718326237, 0.5: 0.749501051089, 1.5: 0.153654753153,
             5.0: 0.0117991455892}


def minus_x(x):
    return -x


def one(x):
    return 1.0


def cauchy_ou():
    return SdeSpec(b=minus_x, kappa=one, levy=CauchyUnit.standard())


def test_bump_shape():
    tf = dg.TestFunction.bump(1.0, 2.0)
    assert tf(1.0) == 1.0 and tf(3.0) == 0.0 and tf(-2.0) == 0.0
    assert tf.support == (-1.0, 3.0)
    h = 1e-6
    for x in (-0.3, 0.4, 2.2):
        assert tf.df(x) == pytest.approx((tf(x + h) - tf(x - h)) / (2 * h), rel=1e-6, abs=1e-9)
        assert tf.d2f(x) == pytest.approx((tf.df(x + h) - tf.df(x - h)) / (2 * h), rel=1e-5,
                                          abs=1e-8)


def test_generator_flat_region_vanishes():
    tf = dg.TestFunction.plateau(1.0, 2.0)
    sde = SdeSpec(b=lambda x: 3.0 + x * x)
    for x in (-0.5, 0.0, 0.9):
        assert dg.generator_apply(sde, tf, x) == 0.0


def test_generator_drift_only():
    tf = dg.TestFunction.bump(0.0, 2.0)
    sde = SdeSpec(b=minus_x)
    for x in (-1.5, 0.3, 1.1):
        assert dg.generator_apply(sde, tf, x) == pytest.approx(-x * tf.df(x), rel=1e-14)


def test_generator_diffusion():
    tf = dg.TestFunction.bump(0.0, 1.0)
    sde = SdeSpec(b=minus_x, sigma=lambda x: 0.5)
    x = 0.2
    assert dg.generator_apply(sde, tf, x) == pytest.approx(
        -x * tf.df(x) + 0.125 * tf.d2f(x), rel=1e-14)


@pytest.mark.parametrize("x", sorted(AF_ORACLE))
def test_generator_matches_semigroup_oracle(x):
    tf = dg.TestFunction.bump(0.0, 1.0)
    assert dg.generator_apply(cauchy_ou(), tf, x) == pytest.approx(AF_ORACLE[x], abs=1e-3)


def test_generator_linearity():
    f = dg.TestFunction.bump(0.0, 1.0)
    g = dg.TestFunction.bump(0.7, 0.5)
    sde = SdeSpec(b=minus_x, sigma=lambda x: 0.3, kappa=one, levy=SymmetricStableLike(1.3))
    for x in (-0.4, 0.1, 0.8, 3.0):
        lhs = dg.generator_apply(sde, f + g, x)
        rhs = dg.generator_apply(sde, f, x) + dg.generator_apply(sde, g, x)
        assert lhs == pytest.approx(rhs, abs=1e-9)


@pytest.mark.parametrize("levy", [CauchyUnit.standard(), SymmetricStableLike(1.5), BetaOverYSq()])
def test_generator_eps_split_invariance(levy):
    sde = SdeSpec(b=minus_x, kappa=lambda x: 0.7, levy=levy)
    tf = dg.TestFunction.bump(0.2, 1.0)
    for x in (-0.5, 0.1, 0.6):
        a = dg.generator_apply(sde, tf, x, eps0=1e-3)
        b = dg.generator_apply(sde, tf, x, eps0=5e-4)
        assert abs(a - b) <= 1e-6 * max(1.0, abs(a))


def test_generator_functional_interpolation():
    gf = dg.GeneratorFunctional(cauchy_ou(), dg.TestFunction.bump(0.0, 1.0))
    assert gf(0.0) == pytest.approx(AF_ORACLE[0.0], abs=1e-3)
    # interpolation error is small against the scale of Af
    xs = np.random.default_rng(0).uniform(-50, 50, 40)
    err = max(abs(gf(x) - gf.exact(x)) for x in xs)
    assert err <= 1e-5 * gf.sup_abs
    assert gf(1e4) == gf.exact(1e4)
    assert gf.sup_abs >= abs(AF_ORACLE[0.0]) - 1e-3


def test_residual_disjoint_support_is_zero():
    tf = dg.TestFunction.bump(100.0, 1.0)
    sde = SdeSpec(b=minus_x)
    m = EmpiricalMeasure({"Af": lambda x: dg.generator_apply(sde, tf, x)})
    run_chain(sde, "A", StepSchedule(), 500, x0=1.0, seed=0, measure=m)
    tr = dg.generator_residual(m)
    assert tr.values and all(v == 0.0 for v in tr.values)


def test_residual_trace_finite():
    sde = cauchy_ou()
    m = EmpiricalMeasure({"Af": dg.GeneratorFunctional(sde, dg.TestFunction.bump(0.0, 1.0))})
    run_chain(sde, "A", StepSchedule(), 2000, seed=1, measure=m)
    tr = dg.generator_residual(m)
    assert tr.n[-1] == 2000
    assert all(math.isfinite(v) for v in tr.values)


def test_lyapunov_guard():
    with pytest.raises(ValueError):
        dg.LyapunovSpec(V=lambda x: 1.0, dV=lambda x: 0.0, d2V=lambda x: 0.0)
    assert dg.LyapunovSpec(1.0, 0.4).exponent == pytest.approx(0.2)


def test_lyapunov_contraction_monotone():
    spec = dg.LyapunovSpec(1.0, 2.0)
    m = EmpiricalMeasure({"lyapunov": spec.functional()})
    run_chain(SdeSpec(b=minus_x), "A", StepSchedule(), 5000, x0=3.0, seed=0, measure=m)
    tr = dg.lyapunov_trace(m, spec)
    assert tr.values[0] == pytest.approx(10.0)
    assert all(b < a for a, b in zip(tr.values[1:], tr.values[2:]))
    assert not tr.informational


def test_lambda_p_default():
    for p in (0.2, 0.5, 0.8, 1.0):
        assert dg.lyapunov_constants(dg.LyapunovSpec(1.0, p))["lambda_p"] == pytest.approx(1.0, abs=1e-6)
    c = dg.lyapunov_constants(dg.LyapunovSpec(1.0, 1.5))
    assert c["lambda_p"] == pytest.approx(2.0, abs=1e-6)
    assert c["e_p"] == 1.0
    assert c["d_p"] == 1.0
    assert dg.lyapunov_constants(dg.LyapunovSpec(1.0, 3.0))["d_p"] == 8.0


def test_c_p_p_one():
    # (V^0 V')' = V'' = 2
    assert dg.lyapunov_constants(dg.LyapunovSpec(1.0, 1.0))["c_p"] == pytest.approx(2.0, rel=1e-9)


def rmy(r=1.5):
    return SdeSpec(b=minus_x, kappa=one, levy=SymmetricStableLike(r))


def test_mean_reversion_rmy_pass():
    rep = dg.mean_reversion_probe(rmy(), dg.LyapunovSpec(1.0, 0.5, 0.9))
    assert rep.verdict == "pass"
    assert rep.alpha_hat >= 1.0
    assert rep.R0 == pytest.approx(3.0, rel=1e-3)
    assert rep.drift_case == "b"
    assert rep.grid_radius == 1e3


def test_mean_reversion_overgrown_kappa_fails():
    sde = SdeSpec(b=minus_x, kappa=lambda x: 2.0 * x,
                  levy=FiniteActivity(1.0, [(1.0, 0.5), (-1.0, 0.5)]))
    rep = dg.mean_reversion_probe(sde, dg.LyapunovSpec(1.0, 1.0, 1.0))
    assert rep.verdict == "fail"
    assert rep.alpha_hat < 0


def test_mean_reversion_scale_invariant():
    spec = dg.LyapunovSpec(1.0, 0.5, 0.9)
    a = dg.mean_reversion_probe(rmy(), spec)
    b = dg.mean_reversion_probe(rmy(), spec.scaled(2.0))
    assert a.verdict == b.verdict == "pass"
    sde = SdeSpec(b=minus_x, kappa=lambda x: 2.0 * x,
                  levy=FiniteActivity(1.0, [(1.0, 0.5), (-1.0, 0.5)]))
    spec = dg.LyapunovSpec(1.0, 1.0, 1.0)
    assert (dg.mean_reversion_probe(sde, spec).verdict
            == dg.mean_reversion_probe(sde, spec.scaled(2.0)).verdict == "fail")


def test_mean_reversion_efc():
    sde = SdeSpec(b=lambda x: 1 - x, kappa=lambda x: -x, levy=BetaOverYSq(), compensated=False)
    rep = dg.mean_reversion_probe(sde, dg.LyapunovSpec(1.0, 1.0, 0.5))
    assert rep.verdict == "pass"
    assert rep.drift_case.startswith("b +")


def test_moment_hypotheses():
    with pytest.raises(HypothesisError):
        dg.mean_reversion_probe(rmy(1.0), dg.LyapunovSpec(1.0, 0.6, 0.9))  # 2p >= r
    with pytest.raises(HypothesisError):
        dg.mean_reversion_probe(rmy(1.5), dg.LyapunovSpec(1.0, 0.5, 0.7))  # 2q <= r


def test_asclt_weight_checks():
    assert all(dg.check_asclt_weights(dg.harmonic, 10).values())
    assert all(dg.check_asclt_weights(PolynomialRule(1.0), 10).values())
    with pytest.raises(ConfigError):
        dg.check_asclt_weights(PolynomialRule(0.5), 10)
    with pytest.raises(ConfigError):
        dg.check_asclt_weights(CallableRule(lambda k: 1.0 / math.sqrt(k)), 1000)


def test_harmonic_sum_diverges():
    H3 = math.fsum(dg.harmonic(k) for k in range(1, 10 ** 3 + 1))
    H6 = math.fsum(dg.harmonic(k) for k in range(1, 10 ** 6 + 1))
    assert H6 > H3 + 1


def test_asclt_cauchy_sum_law():
    m = dg.asclt_run(dg.CauchySampler(), 2000, seed=3)
    assert m.n == 2000
    assert m.H == pytest.approx(math.fsum(1 / k for k in range(1, 2001)), rel=1e-14)
    assert 0 <= m.ks_distance(CauchyCDF()) <= 1


def test_log_pareto_sampler_tail():
    s = dg.LogParetoSampler(1.5, 2.0)
    v = np.abs(s.draw(np.random.default_rng(0), 200000))
    assert v.min() >= 1.0
    for x in (1.5, 4.0, 20.0):
        assert np.mean(v > x) == pytest.approx(float(s.survival(x)), abs=0.004)


def test_log_pareto_harness_runs():
    s = dg.LogParetoSampler(1.0, 2.0)
    assert s.limit_scale == pytest.approx(math.pi / 4)
    m = dg.asclt_run(s, 5000, seed=1)
    ks = m.ks_distance(CauchyCDF(s.limit_scale))
    assert math.isfinite(ks)
    with pytest.raises(ValueError):
        dg.LogParetoSampler(1.0, 0.5)


def test_cauchy_sampler_law():
    v = dg.CauchySampler().draw(np.random.default_rng(1), 50000)
    assert stats.kstest(v, "cauchy").statistic < 0.01
