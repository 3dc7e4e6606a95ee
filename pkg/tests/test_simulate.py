"""Tests for the Monte Carlo engine: estimates, CRN ratios, deficit sampling."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats as sp_stats

from ruinkit.claims import Exponential, Gamma, ModelParams, Pareto
from ruinkit.mechanisms import (
    Classical,
    ConstantBelowZero,
    ConstantP,
    CumulativeParisianExponential,
    ExponentialDecay,
    Investor,
    Omega,
    ParisianExponential,
    ParisianFixed,
)
from ruinkit.simulate import (
    AutoBarrier,
    Estimate,
    FixedBarrier,
    SampleBudgetExceeded,
    SimConfig,
    Verdict,
    ZeroDenominator,
    estimate_deficit_distribution,
    estimate_ratio_crn,
    estimate_recovery_probability,
    estimate_ruin,
    simulate_paths,
)

MODEL = ModelParams(c=2.0, lam=1.0, claims=Exponential(1.0))


def psi_cl_exact(u, delta=1.0, lam=1.0, c=2.0):
    return (lam / (c * delta)) * math.exp(-(delta - lam / c) * u)


class TestSimConfig:
    @pytest.mark.parametrize(
        "make",
        [
            lambda: SimConfig(n_paths=0, seed=1),
            lambda: SimConfig(n_paths=100, seed=1, survival_barrier_mode=AutoBarrier(0.0)),
            lambda: SimConfig(n_paths=100, seed=1, survival_barrier_mode=AutoBarrier(0.2)),
            lambda: SimConfig(n_paths=100, seed=1, survival_barrier_mode=FixedBarrier(-1.0)),
            lambda: SimConfig(n_paths=100, seed=1, max_events_per_path=0),
        ],
    )
    def test_invalid_rejected(self, make):
        with pytest.raises(ValueError):
            make()

    def test_defaults(self):
        cfg = SimConfig(n_paths=10, seed=3)
        assert cfg.survival_barrier_mode == AutoBarrier(1e-4)
        assert cfg.max_events_per_path == 10_000_000


class TestEstimateRuinClassical:
    def test_psi0_matches_closed_form(self):
        est = estimate_ruin(MODEL, Classical(), 0.0, SimConfig(n_paths=10**6, seed=42))
        assert est.n == 10**6
        assert est.stderr == pytest.approx(0.0005, rel=0.05)
        assert abs(est.p_hat - 0.5) < 3.0 * est.stderr

    def test_sanity_battery_exact_values(self):
        cfg = SimConfig(n_paths=3 * 10**5, seed=7)
        for u in (0.0, 1.0, 2.0, 5.0):
            est = estimate_ruin(MODEL, Classical(), u, cfg)
            want = psi_cl_exact(u)
            assert abs(est.p_hat - want) < 3.0 * max(est.stderr, 1e-12), f"u={u}"

    def test_estimate_fields_consistent(self):
        est = estimate_ruin(MODEL, Classical(), 1.0, SimConfig(n_paths=50_000, seed=9))
        assert est.stderr == pytest.approx(
            math.sqrt(est.p_hat * (1.0 - est.p_hat) / est.n), abs=1e-15
        )
        lo, hi = est.ci95
        assert 0.0 <= lo <= est.p_hat <= hi <= 1.0
        assert est.truncation_bias_bound == pytest.approx(1e-4, abs=1e-12)

    def test_cramer_auto_barrier_bound_is_eps(self):
        cfg = SimConfig(n_paths=1000, seed=2, survival_barrier_mode=AutoBarrier(1e-3))
        est = estimate_ruin(MODEL, Classical(), 1.0, cfg)
        assert est.truncation_bias_bound == pytest.approx(1e-3, abs=1e-12)

    def test_barrier_monotonicity(self):
        # Raising the barrier moves the estimate by at most bias + noise.
        n = 2 * 10**5
        lo = estimate_ruin(
            MODEL, Classical(), 1.0,
            SimConfig(n_paths=n, seed=11, survival_barrier_mode=AutoBarrier(1e-3)),
        )
        hi = estimate_ruin(
            MODEL, Classical(), 1.0,
            SimConfig(n_paths=n, seed=11, survival_barrier_mode=FixedBarrier(60.0)),
        )
        gap = abs(lo.p_hat - hi.p_hat)
        noise = 3.0 * math.sqrt(lo.stderr**2 + hi.stderr**2)
        assert gap <= lo.truncation_bias_bound + noise

    def test_fixed_barrier_must_exceed_u(self):
        cfg = SimConfig(n_paths=100, seed=1, survival_barrier_mode=FixedBarrier(2.0))
        with pytest.raises(ValueError):
            estimate_ruin(MODEL, Classical(), 2.0, cfg)

    def test_event_budget_reported(self):
        cfg = SimConfig(n_paths=2000, seed=5, max_events_per_path=5)
        est = estimate_ruin(MODEL, Classical(), 0.5, cfg)
        assert est.n_budget_exceeded > 0
        assert any("budget" in note for note in est.notes)

    def test_heavy_regime_runs_with_heuristic_bound(self):
        model = ModelParams(c=2.0, lam=1.0, claims=Pareto(2.5, 1.5))
        est = estimate_ruin(model, Classical(), 1.0, SimConfig(n_paths=20_000, seed=13))
        assert 0.0 < est.p_hat < 1.0
        assert est.truncation_bias_bound > 0.0
        assert any("heuristic" in note for note in est.notes)


class TestDegenerateMechanisms:
    def test_certain_rescue_never_ruins(self):
        est = estimate_ruin(
            MODEL, Investor(ConstantP(1.0)), 1.0, SimConfig(n_paths=10**5, seed=21)
        )
        assert est.p_hat == 0.0
        assert est.ci95 == (0.0, 0.0)

    def test_impossible_rescue_equals_classical_pathwise(self):
        cfg = SimConfig(n_paths=10**5, seed=22)
        a = simulate_paths(MODEL, Classical(), 1.0, cfg)
        b = simulate_paths(MODEL, Investor(ConstantP(0.0)), 1.0, cfg)
        assert np.array_equal(a.verdict, b.verdict)
        assert np.array_equal(a.classical_ruin, b.classical_ruin)

    def test_investor_halfway_matches_exact_formula(self):
        # Modified ruin probability (2/3) * psi_cl(2) = 0.1226264804.
        est = estimate_ruin(
            MODEL, Investor(ConstantP(0.5)), 2.0, SimConfig(n_paths=10**6, seed=23)
        )
        want = (2.0 / 3.0) * psi_cl_exact(2.0)
        assert abs(est.p_hat - want) < 3.0 * est.stderr


class TestPathBatch:
    def test_nesting_mechanism_ruin_implies_classical(self):
        batch = simulate_paths(
            MODEL, ParisianFixed(0.5), 1.0, SimConfig(n_paths=50_000, seed=31)
        )
        ruined = batch.verdict == 1
        assert np.all(batch.classical_ruin[ruined])

    def test_deficit_present_iff_classical_ruin(self):
        batch = simulate_paths(MODEL, Classical(), 1.0, SimConfig(n_paths=20_000, seed=32))
        has_deficit = ~np.isnan(batch.first_passage_deficit)
        assert np.array_equal(has_deficit, batch.classical_ruin)
        assert np.all(batch.first_passage_deficit[has_deficit] > 0.0)

    def test_outcome_accessor(self):
        batch = simulate_paths(MODEL, Classical(), 0.5, SimConfig(n_paths=500, seed=33))
        i_ruin = int(np.argmax(batch.verdict == 1))
        out = batch.outcome(i_ruin)
        assert out.verdict is Verdict.RUINED
        assert out.classical_ruin_flag and out.first_passage_deficit > 0.0
        assert out.n_excursions >= 1
        i_surv = int(np.argmax(batch.verdict == 0))
        out2 = batch.outcome(i_surv)
        assert out2.verdict is Verdict.SURVIVED_TO_BARRIER
        if not out2.classical_ruin_flag:
            assert out2.first_passage_deficit is None

    def test_same_seed_bit_identical(self):
        cfg = SimConfig(n_paths=30_000, seed=34)
        a = simulate_paths(MODEL, ParisianExponential(0.5), 1.0, cfg)
        b = simulate_paths(MODEL, ParisianExponential(0.5), 1.0, cfg)
        assert np.array_equal(a.verdict, b.verdict)
        assert np.array_equal(
            a.first_passage_deficit, b.first_passage_deficit, equal_nan=True
        )


class TestRatioCRN:
    def test_classical_ratio_exactly_one(self):
        res = estimate_ratio_crn(MODEL, Classical(), 1.0, SimConfig(n_paths=50_000, seed=41))
        assert res.ratio_hat == 1.0
        assert res.ci95 == (1.0, 1.0)
        assert res.n_mechanism_ruined == res.n_classical_ruined > 0

    def test_investor_decay_ratio_brackets_two_thirds(self):
        # Exact ratio is C = 2/3 at every u for exponential claims.
        for u in (0.0, 2.0):
            res = estimate_ratio_crn(
                MODEL, Investor(ExponentialDecay(1.0)), u, SimConfig(n_paths=10**6, seed=142)
            )
            lo, hi = res.ci95
            assert lo <= 2.0 / 3.0 <= hi, f"u={u}: ci=({lo}, {hi})"

    def test_zero_denominator(self):
        cfg = SimConfig(n_paths=200, seed=43)
        with pytest.raises(ZeroDenominator):
            estimate_ratio_crn(MODEL, Classical(), 50.0, cfg)


class TestEquivalenceTriple:
    def test_exponential_clock_mechanisms_agree(self):
        # Memoryless clocks: a constant bankruptcy rate, a per-excursion
        # exponential deadline, and a cumulative exponential budget all give
        # the same ruin probability.
        q = 0.5
        mechs = [
            Omega(ConstantBelowZero(q)),
            ParisianExponential(q),
            CumulativeParisianExponential(q),
        ]
        for u in (0.0, 2.0):
            cis = []
            for k, mech in enumerate(mechs):
                est = estimate_ruin(MODEL, mech, u, SimConfig(n_paths=2 * 10**5, seed=50 + k))
                cis.append(est.ci95)
            for a in range(len(cis)):
                for b in range(a + 1, len(cis)):
                    lo = max(cis[a][0], cis[b][0])
                    hi = min(cis[a][1], cis[b][1])
                    assert lo <= hi, f"u={u}: CIs {cis[a]} and {cis[b]} disjoint"


class TestDeficitDistribution:
    def test_zero_conditional_is_empty(self):
        got = estimate_deficit_distribution(MODEL, 0.0, 0, SimConfig(n_paths=1000, seed=61))
        assert got.shape == (0,)

    def test_sorted_positive_exact_count(self):
        got = estimate_deficit_distribution(MODEL, 0.0, 5000, SimConfig(n_paths=10**6, seed=62))
        assert got.shape == (5000,)
        assert np.all(np.diff(got) >= 0.0)
        assert np.all(got > 0.0)

    def test_u0_deficit_law_is_integrated_tail(self):
        # From u=0 the conditional deficit law is the integrated tail, which
        # for Exp(1) claims is again Exp(1).
        n = 10**5
        got = estimate_deficit_distribution(MODEL, 0.0, n, SimConfig(n_paths=10**6, seed=63))
        ks = sp_stats.kstest(got, sp_stats.expon.cdf).statistic
        assert ks < 1.36 / math.sqrt(n)

    def test_budget_exceeded_carries_partials(self):
        cfg = SimConfig(n_paths=5000, seed=64)
        with pytest.raises(SampleBudgetExceeded) as exc_info:
            estimate_deficit_distribution(MODEL, 30.0, 1000, cfg)
        err = exc_info.value
        assert err.n_paths_run == 5000
        assert err.deficits.shape[0] < 1000
        assert np.all(np.diff(err.deficits) >= 0.0)

    def test_deterministic(self):
        cfg = SimConfig(n_paths=10**5, seed=65)
        a = estimate_deficit_distribution(MODEL, 1.0, 2000, cfg)
        b = estimate_deficit_distribution(MODEL, 1.0, 2000, cfg)
        assert np.array_equal(a, b)


class TestRecoveryProbability:
    def test_investor_constant_matches_p(self):
        est = estimate_recovery_probability(
            MODEL, Investor(ConstantP(0.3)), 1.0, n=200_000, seed=71
        )
        assert abs(est.p_hat - 0.3) < 3.0 * est.stderr

    def test_decreasing_in_entry_deficit(self):
        mech = Omega(ConstantBelowZero(0.5))
        ps = [
            estimate_recovery_probability(MODEL, mech, d, n=100_000, seed=72).p_hat
            for d in (0.5, 1.5, 2.5)
        ]
        assert ps[0] > ps[1] > ps[2]


class TestWorkerIndependence:
    def test_thread_count_does_not_change_results(self, tmp_path):
        # Same seed at 1 and 4 workers must give bit-identical estimates.
        script = tmp_path / "run.py"
        script.write_text(
            "import os, sys\n"
            "sys.path.insert(0, os.environ['RUINKIT_SRC'])\n"
            "from ruinkit.claims import Exponential, ModelParams\n"
            "from ruinkit.mechanisms import ParisianFixed\n"
            "from ruinkit.simulate import SimConfig, estimate_ruin\n"
            "model = ModelParams(c=2.0, lam=1.0, claims=Exponential(1.0))\n"
            "est = estimate_ruin(model, ParisianFixed(1.0), 1.0,"
            " SimConfig(n_paths=30000, seed=77))\n"
            "print(repr((est.p_hat, est.stderr, est.ci95, est.n)))\n"
        )
        outputs = []
        for threads in ("1", "4"):
            env = dict(os.environ)
            env["NUMBA_NUM_THREADS"] = "4"
            env["RUINKIT_THREADS"] = threads
            env["RUINKIT_SRC"] = os.path.join(os.path.dirname(__file__), "..", "src")
            proc = subprocess.run(
                [sys.executable, str(script)], capture_output=True, text=True, env=env
            )
            assert proc.returncode == 0, proc.stderr
            outputs.append(proc.stdout)
        assert outputs[0] == outputs[1]


class TestGammaClaimsEndToEnd:
    def test_gamma_classical_estimate_reasonable(self):
        # Light-tail gamma model; estimate must land in (0,1) and carry the
        # exponential truncation bound.
        model = ModelParams(c=2.0, lam=1.0, claims=Gamma(2.0, 2.0))
        est = estimate_ruin(model, Classical(), 1.0, SimConfig(n_paths=10**5, seed=81))
        assert 0.0 < est.p_hat < 1.0
        assert est.truncation_bias_bound == pytest.approx(1e-4, abs=1e-12)
