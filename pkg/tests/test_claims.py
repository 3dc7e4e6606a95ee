"""Tests for claim-size distributions, model parameters, and regime classification."""

import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate
from scipy import optimize as sp_optimize
from scipy import stats as sp_stats

from ruinkit.claims import (
    CramerLight,
    Exponential,
    Gamma,
    ModelParams,
    Neither,
    NetProfitError,
    Pareto,
    SubexponentialHeavy,
    classify_regime,
    density,
    integrated_tail_complement,
    mean,
    mgf_derivative,
    mgf_minus_one,
    sample_claim,
    tail,
)
from ruinkit.numerics import Tolerance, integrate_semi_infinite
from ruinkit.rng import RandomStream

TOL = Tolerance()


class TestConstruction:
    @pytest.mark.parametrize(
        "make",
        [
            lambda: Exponential(0.0),
            lambda: Exponential(-1.0),
            lambda: Pareto(1.0, 1.5),  # infinite mean
            lambda: Pareto(0.5, 1.5),
            lambda: Pareto(2.5, 0.0),
            lambda: Gamma(0.0, 2.0),
            lambda: Gamma(3.0, -2.0),
        ],
    )
    def test_invalid_distributions_rejected(self, make):
        with pytest.raises(ValueError):
            make()

    def test_net_profit_condition_enforced(self):
        # c = lambda * mu exactly is rejected; strictly above passes.
        with pytest.raises(NetProfitError):
            ModelParams(c=1.0, lam=1.0, claims=Exponential(1.0))
        with pytest.raises(NetProfitError):
            ModelParams(c=0.5, lam=1.0, claims=Pareto(2.5, 1.5))
        m = ModelParams(c=1.01, lam=1.0, claims=Exponential(1.0))
        assert m.c == 1.01

    @pytest.mark.parametrize("c,lam", [(0.0, 1.0), (-2.0, 1.0), (2.0, 0.0), (2.0, -0.5)])
    def test_positive_rates_enforced(self, c, lam):
        with pytest.raises(ValueError):
            ModelParams(c=c, lam=lam, claims=Exponential(2.0))


class TestMoments:
    def test_mean_examples(self):
        assert mean(Exponential(2.0)) == pytest.approx(0.5)
        assert mean(Pareto(2.5, 1.5)) == pytest.approx(1.0)
        assert mean(Gamma(3.0, 2.0)) == pytest.approx(1.5)

    def test_tail_examples(self):
        assert tail(Exponential(1.0), 0.0) == 1.0
        assert tail(Exponential(2.0), 1.0) == pytest.approx(0.1353352832, abs=1e-10)
        assert tail(Pareto(2.0, 1.0), 1.0) == pytest.approx(0.25, abs=1e-12)

    def test_tail_gamma_against_scipy(self):
        dist = Gamma(3.0, 2.0)
        for t in np.linspace(0.0, 8.0, 17):
            want = sp_stats.gamma.sf(t, 3.0, scale=0.5)
            assert tail(dist, float(t)) == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize(
        "dist", [Exponential(1.3), Pareto(2.5, 1.5), Gamma(3.0, 2.0), Gamma(0.7, 1.1)]
    )
    def test_tail_monotone_and_bounded(self, dist):
        ts = np.linspace(0.0, 20.0, 200)
        vals = [tail(dist, float(t)) for t in ts]
        assert vals[0] == pytest.approx(1.0, abs=1e-12)
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert all(a >= b - 1e-14 for a, b in zip(vals, vals[1:]))


class TestIntegratedTail:
    def test_exponential_integrated_tail(self):
        assert integrated_tail_complement(Exponential(1.0), 2.0) == pytest.approx(
            0.1353352832, abs=1e-10
        )

    def test_pareto_integrated_tail(self):
        got = integrated_tail_complement(Pareto(2.5, 1.5), 1.5)
        assert got == pytest.approx(0.3535533906, abs=1e-10)
        assert got == pytest.approx(2.0**-1.5, abs=1e-12)

    @pytest.mark.parametrize(
        "dist", [Exponential(2.0), Pareto(2.5, 1.5), Gamma(3.0, 2.0), Gamma(0.7, 1.1)]
    )
    def test_at_zero_is_one(self, dist):
        assert integrated_tail_complement(dist, 0.0) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize(
        "dist", [Exponential(1.5), Pareto(2.5, 1.5), Gamma(3.0, 2.0), Gamma(0.7, 1.1)]
    )
    def test_closed_form_matches_quadrature(self, dist):
        # mu * complement(u) == integral over [u, inf) of the tail.
        rng = np.random.default_rng(321)
        mu = mean(dist)
        for u in rng.uniform(0.0, 6.0, size=5):
            via_quad = integrate_semi_infinite(lambda z: tail(dist, z), float(u), TOL)
            assert integrated_tail_complement(dist, float(u)) * mu == pytest.approx(
                via_quad, abs=1e-8
            )

    def test_gamma_against_scipy_quad(self):
        dist = Gamma(3.0, 2.0)
        mu = mean(dist)
        for u in (0.0, 0.5, 1.7, 4.0):
            want, _ = sp_integrate.quad(
                lambda z: sp_stats.gamma.sf(z, 3.0, scale=0.5), u, np.inf, epsabs=1e-13
            )
            assert integrated_tail_complement(dist, u) == pytest.approx(want / mu, abs=1e-10)

    @pytest.mark.parametrize("dist", [Exponential(1.5), Pareto(2.5, 1.5), Gamma(3.0, 2.0)])
    def test_monotone_nonincreasing(self, dist):
        us = np.linspace(0.0, 12.0, 120)
        vals = [integrated_tail_complement(dist, float(u)) for u in us]
        assert all(a >= b - 1e-14 for a, b in zip(vals, vals[1:]))


class TestMgf:
    def test_exponential_inside_domain(self):
        assert mgf_minus_one(Exponential(1.0), 0.5) == pytest.approx(1.0, abs=1e-12)

    def test_exponential_boundary_infinite(self):
        assert mgf_minus_one(Exponential(1.0), 1.0) == math.inf
        assert mgf_minus_one(Exponential(1.0), 1.5) == math.inf

    def test_pareto_always_infinite(self):
        assert mgf_minus_one(Pareto(2.5, 1.5), 0.1) == math.inf

    def test_at_zero(self):
        assert mgf_minus_one(Exponential(2.0), 0.0) == 0.0
        assert mgf_minus_one(Pareto(2.5, 1.5), 0.0) == 0.0
        assert mgf_minus_one(Gamma(3.0, 2.0), 0.0) == 0.0

    def test_gamma_against_quadrature(self):
        # oracle integrand in log space so scipy's probe points never overflow
        dist = Gamma(3.0, 2.0)
        for s in (0.3, 1.0, 1.9):
            want, _ = sp_integrate.quad(
                lambda y: math.exp(s * y + sp_stats.gamma.logpdf(y, 3.0, scale=0.5)),
                0.0,
                np.inf,
                epsabs=1e-13,
            )
            assert mgf_minus_one(dist, s) == pytest.approx(want - 1.0, rel=1e-9)
        assert mgf_minus_one(dist, 2.0) == math.inf

    def test_derivative_exponential_closed_form(self):
        # E[Y e^{sY}] = rate / (rate - s)^2
        assert mgf_derivative(Exponential(1.0), 0.5) == pytest.approx(4.0, rel=1e-12)
        assert mgf_derivative(Exponential(2.0), 0.0) == pytest.approx(0.5, rel=1e-12)
        assert mgf_derivative(Exponential(1.0), 1.0) == math.inf

    def test_derivative_gamma_against_quadrature(self):
        dist = Gamma(3.0, 2.0)
        for s in (0.0, 0.7, 1.5):
            want, _ = sp_integrate.quad(
                lambda y: y * math.exp(s * y + sp_stats.gamma.logpdf(y, 3.0, scale=0.5)),
                0.0,
                np.inf,
                epsabs=1e-13,
            )
            assert mgf_derivative(dist, s) == pytest.approx(want, rel=1e-9)

    def test_derivative_pareto_infinite(self):
        assert mgf_derivative(Pareto(2.5, 1.5), 0.2) == math.inf
        assert mgf_derivative(Pareto(2.5, 1.5), 0.0) == pytest.approx(1.0, rel=1e-12)


class TestDensity:
    @pytest.mark.parametrize(
        "dist,sp",
        [
            (Exponential(2.0), sp_stats.expon(scale=0.5)),
            (Pareto(2.5, 1.5), sp_stats.lomax(2.5, scale=1.5)),
            (Gamma(3.0, 2.0), sp_stats.gamma(3.0, scale=0.5)),
        ],
    )
    def test_matches_scipy_pdf(self, dist, sp):
        for x in (0.01, 0.5, 1.0, 3.0, 7.5):
            assert density(dist, x) == pytest.approx(sp.pdf(x), rel=1e-10)

    def test_integrates_to_one(self):
        for dist in (Exponential(1.5), Pareto(2.5, 1.5), Gamma(3.0, 2.0)):
            total = integrate_semi_infinite(lambda x: density(dist, x), 0.0, TOL)
            assert total == pytest.approx(1.0, abs=1e-8)


class TestSampling:
    def test_reproducible_across_streams(self):
        a = sample_claim(Exponential(1.0), RandomStream(42, 0))
        b = sample_claim(Exponential(1.0), RandomStream(42, 0))
        assert a == b

    def test_exponential_mean_clt(self):
        # 10^6 draws; 3 sigma band for samples with sd = 0.5.
        out = np.empty(10**6)
        from ruinkit._kernels import CLAIM_EXPONENTIAL, sample_claims_batch

        sample_claims_batch(np.uint64(7), 10**6, CLAIM_EXPONENTIAL, 2.0, 0.0, out)
        assert abs(out.mean() - 0.5) < 3.0 * 0.5 / 1000.0

    def test_pareto_mean_clt(self):
        # alpha = 2.5 has finite variance: var = 2*1.5^2/1.5 - 1 ... use 3 sigma
        # with sd for Lomax(2.5, 1.5): sqrt(alpha/( (a-1)^2 (a-2) )) * theta
        out = np.empty(10**6)
        from ruinkit._kernels import CLAIM_PARETO, sample_claims_batch

        sample_claims_batch(np.uint64(8), 10**6, CLAIM_PARETO, 2.5, 1.5, out)
        sd = 1.5 * math.sqrt(2.5 / ((1.5**2) * 0.5))
        assert abs(out.mean() - 1.0) < 3.0 * sd / 1000.0
        assert abs(out.mean() - 1.0) < 0.01

    def test_gamma_sample_matches_rng_stream(self):
        got = sample_claim(Gamma(3.0, 2.0), RandomStream(11, 3))
        want = RandomStream(11, 3).gamma(3.0, 2.0)
        assert got == want


class TestClassifyRegime:
    def test_exponential_adjustment_closed_form(self):
        model = ModelParams(c=2.0, lam=1.0, claims=Exponential(1.0))
        regime = classify_regime(model, TOL)
        assert isinstance(regime, CramerLight)
        # closed form R = rate - lam / c
        assert regime.R == pytest.approx(0.5, abs=1e-10)
        resid = model.lam * mgf_minus_one(model.claims, regime.R) - model.c * regime.R
        assert abs(resid) <= 1e-9

    def test_exponential_second_example(self):
        model = ModelParams(c=1.5, lam=1.0, claims=Exponential(2.0))
        regime = classify_regime(model, TOL)
        assert regime.R == pytest.approx(4.0 / 3.0, abs=1e-10)

    def test_pareto_is_heavy(self):
        model = ModelParams(c=2.0, lam=1.0, claims=Pareto(2.5, 1.5))
        assert isinstance(classify_regime(model, TOL), SubexponentialHeavy)

    def test_gamma_against_scipy_root(self):
        model = ModelParams(c=2.0, lam=1.0, claims=Gamma(3.0, 2.0))
        regime = classify_regime(model, TOL)
        assert isinstance(regime, CramerLight)
        g = lambda s: model.lam * ((2.0 / (2.0 - s)) ** 3 - 1.0) - model.c * s
        want = sp_optimize.brentq(g, 1e-9, 2.0 - 1e-9, xtol=1e-13)
        assert regime.R == pytest.approx(want, abs=1e-9)
        assert 0.0 < regime.R < 2.0
        resid = model.lam * mgf_minus_one(model.claims, regime.R) - model.c * regime.R
        assert abs(resid) <= 1e-9

    def test_solver_failure_reports_neither(self):
        # Starved iteration budget propagates as Neither with a diagnostic.
        model = ModelParams(c=2.0, lam=1.0, claims=Gamma(3.0, 2.0))
        regime = classify_regime(model, Tolerance(abs_tol=1e-14, rel_tol=0.0, max_iter=2))
        assert isinstance(regime, Neither)
        assert regime.detail
