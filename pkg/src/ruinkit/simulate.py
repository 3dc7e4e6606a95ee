"""Parallel Monte Carlo engine for ruin probabilities under modified ruin.

Paths share nothing but immutable model constants: each path owns a
counter-based RNG stream keyed by (seed, path index), and results are merged
by deterministic reductions in path-index order, so estimates are bit-equal
for any worker count.  Paths run until the mechanism rules ruin or the
surplus reaches a truncation barrier, above which survival is declared with
a quantified bias bound.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numba
import numpy as np

from . import _kernels
from .claims import (
    CramerLight,
    ModelParams,
    Neither,
    RegimeUnavailable,
    SubexponentialHeavy,
    classify_regime,
    integrated_tail_complement,
    inverse_integrated_tail,
    kernel_params,
    mean,
)
from .mechanisms import Classical, Mechanism, kernel_encoding

_Z95 = 1.959963984540054
_MASK64 = 0xFFFFFFFFFFFFFFFF
# widen the heavy-tail barrier beyond the eps quantile: the Lundberg argument
# is unavailable there, so the quantile alone is not a bias certificate
_HEAVY_BARRIER_SAFETY = 2.0


class ZeroDenominator(RuntimeError):
    """No classical ruins observed; the CRN ratio is undefined."""


class SampleBudgetExceeded(RuntimeError):
    """Ruin too rare to collect the requested conditional samples.

    Carries the partial sorted deficits and the number of paths consumed.
    """

    def __init__(self, deficits: np.ndarray, n_paths_run: int):
        self.deficits = deficits
        self.n_paths_run = n_paths_run
        super().__init__(
            f"collected {deficits.shape[0]} deficit samples in {n_paths_run} paths"
        )


@dataclass(frozen=True)
class AutoBarrier:
    """Barrier sized from the regime so that truncation bias <= eps_trunc."""

    eps_trunc: float = 1e-4

    def __post_init__(self):
        if not (0.0 < self.eps_trunc <= 0.1):
            raise ValueError("eps_trunc must lie in (0, 0.1]")


@dataclass(frozen=True)
class FixedBarrier:
    """Explicit survival barrier level."""

    M: float

    def __post_init__(self):
        if not (math.isfinite(self.M) and self.M > 0.0):
            raise ValueError("barrier M must be finite and > 0")


BarrierMode = Union[AutoBarrier, FixedBarrier]


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    seed: int
    survival_barrier_mode: BarrierMode = AutoBarrier()
    max_events_per_path: int = 10_000_000

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.max_events_per_path < 1:
            raise ValueError("max_events_per_path must be >= 1")
        if not isinstance(self.survival_barrier_mode, (AutoBarrier, FixedBarrier)):
            raise ValueError("survival_barrier_mode must be AutoBarrier or FixedBarrier")


class Verdict(Enum):
    SURVIVED_TO_BARRIER = "survived_to_barrier"
    RUINED = "ruined"
    EVENT_BUDGET_EXCEEDED = "event_budget_exceeded"


_VERDICT_BY_CODE = {
    0: Verdict.SURVIVED_TO_BARRIER,
    1: Verdict.RUINED,
    2: Verdict.EVENT_BUDGET_EXCEEDED,
}


@dataclass(frozen=True)
class PathOutcome:
    verdict: Verdict
    first_passage_deficit: Optional[float]
    classical_ruin_flag: bool
    n_excursions: int


@dataclass(frozen=True)
class PathBatch:
    """Per-path results in path-index order (arrays share one index)."""

    verdict: np.ndarray  # uint8 codes: 0 survived, 1 ruined, 2 budget
    classical_ruin: np.ndarray  # bool
    first_passage_deficit: np.ndarray  # float64, NaN when no classical ruin
    n_excursions: np.ndarray  # int64
    barrier: float
    truncation_bias_bound: float
    notes: Tuple[str, ...]

    def __len__(self) -> int:
        return self.verdict.shape[0]

    def outcome(self, i: int) -> PathOutcome:
        deficit = float(self.first_passage_deficit[i])
        return PathOutcome(
            verdict=_VERDICT_BY_CODE[int(self.verdict[i])],
            first_passage_deficit=None if math.isnan(deficit) else deficit,
            classical_ruin_flag=bool(self.classical_ruin[i]),
            n_excursions=int(self.n_excursions[i]),
        )


@dataclass(frozen=True)
class Estimate:
    p_hat: float
    stderr: float
    ci95: Tuple[float, float]
    n: int
    truncation_bias_bound: float
    n_budget_exceeded: int = 0
    notes: Tuple[str, ...] = ()


@dataclass(frozen=True)
class RatioEstimate:
    """Ratio of mechanism ruin to classical ruin on common random numbers."""

    ratio_hat: float
    ci95: Tuple[float, float]
    n_classical_ruined: int
    n_mechanism_ruined: int
    n: int
    truncation_bias_bound: float
    notes: Tuple[str, ...] = ()


def _configure_threads() -> None:
    raw = os.environ.get("RUINKIT_THREADS", "").strip()
    if not raw:
        return
    want = max(1, int(raw))
    numba.set_num_threads(min(want, numba.config.NUMBA_NUM_THREADS))


def _barrier(model: ModelParams, u: float, cfg: SimConfig) -> Tuple[float, float, Tuple[str, ...]]:
    """Resolve barrier level and truncation bias bound for a start level u."""
    regime = classify_regime(model)
    mode = cfg.survival_barrier_mode
    if isinstance(mode, FixedBarrier):
        barrier = mode.M
        if barrier <= u:
            raise ValueError(f"fixed barrier {barrier} must exceed start level {u}")
    elif isinstance(regime, CramerLight):
        barrier = u + math.log(1.0 / mode.eps_trunc) / regime.R
    elif isinstance(regime, SubexponentialHeavy):
        barrier = u + _HEAVY_BARRIER_SAFETY * inverse_integrated_tail(
            model.claims, mode.eps_trunc
        )
    else:
        raise RegimeUnavailable(
            f"auto barrier needs a recognized regime, got {regime}; use FixedBarrier"
        )

    gap = barrier - u
    if isinstance(regime, CramerLight):
        bound = math.exp(-regime.R * gap)
        notes = (f"barrier {barrier:.6g}: Lundberg truncation bound exp(-R*(M-u))",)
    elif isinstance(regime, SubexponentialHeavy):
        mu = mean(model.claims)
        bound = (
            integrated_tail_complement(model.claims, gap)
            * model.lam
            * mu
            / (model.c - model.lam * mu)
        )
        notes = (f"barrier {barrier:.6g}: heuristic heavy-tail truncation bound",)
    else:
        bound = float("nan")
        notes = (f"barrier {barrier:.6g}: no regime, truncation bound unavailable",)
    return barrier, bound, notes


def simulate_paths(model: ModelParams, mech: Mechanism, u: float, cfg: SimConfig) -> PathBatch:
    """Run cfg.n_paths independent paths from u; arrays are path-indexed."""
    if not (math.isfinite(u) and u >= 0.0):
        raise ValueError("u must be finite and >= 0")
    _configure_threads()
    barrier, bound, notes = _barrier(model, u, cfg)
    enc = kernel_encoding(mech)
    claim_kind, cp1, cp2 = kernel_params(model.claims)
    n = cfg.n_paths
    out_verdict = np.empty(n, dtype=np.uint8)
    out_classical = np.empty(n, dtype=np.uint8)
    out_deficit = np.empty(n, dtype=np.float64)
    out_nexc = np.empty(n, dtype=np.int64)
    _kernels.path_batch(
        float(u),
        float(barrier),
        model.c,
        model.lam,
        claim_kind,
        cp1,
        cp2,
        enc.kind,
        enc.param,
        enc.omega_breaks,
        enc.omega_levels,
        enc.resc_kind,
        enc.resc_param,
        enc.resc_ys,
        enc.resc_ps,
        np.uint64(cfg.seed & _MASK64),
        np.int64(0),
        n,
        np.int64(cfg.max_events_per_path),
        out_verdict,
        out_classical,
        out_deficit,
        out_nexc,
    )
    return PathBatch(
        verdict=out_verdict,
        classical_ruin=out_classical.astype(bool),
        first_passage_deficit=out_deficit,
        n_excursions=out_nexc,
        barrier=barrier,
        truncation_bias_bound=bound,
        notes=notes,
    )


def _binomial_estimate(
    hits: int, n: int, bound: float, n_budget: int, notes: Tuple[str, ...]
) -> Estimate:
    p = hits / n
    se = math.sqrt(p * (1.0 - p) / n)
    lo = min(1.0, max(0.0, p - _Z95 * se))
    hi = min(1.0, max(0.0, p + _Z95 * se))
    if n_budget > 0:
        notes = notes + (
            f"{n_budget} paths hit the event budget and were counted as survivors",
        )
    return Estimate(
        p_hat=p,
        stderr=se,
        ci95=(lo, hi),
        n=n,
        truncation_bias_bound=bound,
        n_budget_exceeded=n_budget,
        notes=notes,
    )


def estimate_from_batch(batch: PathBatch) -> Estimate:
    """Binomial ruin estimate from an already simulated batch."""
    hits = int(np.count_nonzero(batch.verdict == 1))
    n_budget = int(np.count_nonzero(batch.verdict == 2))
    return _binomial_estimate(
        hits, len(batch), batch.truncation_bias_bound, n_budget, batch.notes
    )


def estimate_ruin(model: ModelParams, mech: Mechanism, u: float, cfg: SimConfig) -> Estimate:
    """Monte Carlo estimate of the modified ruin probability from u."""
    return estimate_from_batch(simulate_paths(model, mech, u, cfg))


def ratio_from_batch(batch: PathBatch) -> RatioEstimate:
    """Conditional ratio estimate from an already simulated batch.

    Mechanism ruin implies classical ruin on the same path, so the ratio is
    the conditional probability (#mech ruined)/(#classically ruined).
    """
    n_mech = int(np.count_nonzero(batch.verdict == 1))
    n_classical = int(np.count_nonzero(batch.classical_ruin))
    if n_classical == 0:
        raise ZeroDenominator(f"no classical ruins in {len(batch)} paths")
    r = n_mech / n_classical
    se = math.sqrt(r * (1.0 - r) / n_classical)
    lo = min(1.0, max(0.0, r - _Z95 * se))
    hi = min(1.0, max(0.0, r + _Z95 * se))
    n_budget = int(np.count_nonzero(batch.verdict == 2))
    notes = batch.notes
    if n_budget > 0:
        notes = notes + (f"{n_budget} paths hit the event budget",)
    return RatioEstimate(
        ratio_hat=r,
        ci95=(lo, hi),
        n_classical_ruined=n_classical,
        n_mechanism_ruined=n_mech,
        n=len(batch),
        truncation_bias_bound=batch.truncation_bias_bound,
        notes=notes,
    )


def estimate_ratio_crn(
    model: ModelParams, mech: Mechanism, u: float, cfg: SimConfig
) -> RatioEstimate:
    """Estimate psi_mech(u)/psi_cl(u) from one pass of common paths."""
    return ratio_from_batch(simulate_paths(model, mech, u, cfg))


def estimate_deficit_distribution(
    model: ModelParams, u: float, n_conditional: int, cfg: SimConfig
) -> np.ndarray:
    """Sorted first-passage deficits conditional on classical ruin from u.

    Runs paths in growing batches until n_conditional deficits are collected;
    cfg.n_paths is the total path budget.  Collection is truncated to exactly
    n_conditional in path-index order before sorting, so the result does not
    depend on the worker count.
    """
    if n_conditional < 0:
        raise ValueError("n_conditional must be >= 0")
    if n_conditional == 0:
        return np.empty(0, dtype=np.float64)
    if not (math.isfinite(u) and u >= 0.0):
        raise ValueError("u must be finite and >= 0")
    _configure_threads()
    barrier, _, _ = _barrier(model, u, cfg)
    enc = kernel_encoding(Classical())
    claim_kind, cp1, cp2 = kernel_params(model.claims)

    collected: list = []
    n_collected = 0
    paths_used = 0
    budget = cfg.n_paths
    batch_size = min(budget, 20_000)
    while n_collected < n_conditional:
        if paths_used >= budget:
            partial = _concat_truncate(collected, n_collected)
            partial.sort()
            raise SampleBudgetExceeded(partial, paths_used)
        b = min(batch_size, budget - paths_used)
        out_verdict = np.empty(b, dtype=np.uint8)
        out_classical = np.empty(b, dtype=np.uint8)
        out_deficit = np.empty(b, dtype=np.float64)
        out_nexc = np.empty(b, dtype=np.int64)
        _kernels.path_batch(
            float(u),
            float(barrier),
            model.c,
            model.lam,
            claim_kind,
            cp1,
            cp2,
            enc.kind,
            enc.param,
            enc.omega_breaks,
            enc.omega_levels,
            enc.resc_kind,
            enc.resc_param,
            enc.resc_ys,
            enc.resc_ps,
            np.uint64(cfg.seed & _MASK64),
            np.int64(paths_used),
            b,
            np.int64(cfg.max_events_per_path),
            out_verdict,
            out_classical,
            out_deficit,
            out_nexc,
        )
        hits = out_deficit[out_classical == 1]
        collected.append(hits)
        n_collected += hits.shape[0]
        paths_used += b
        # size the next batch from the observed hit rate, with headroom
        rate = max(n_collected / paths_used, 1.0 / (paths_used + 1))
        need = n_conditional - n_collected
        batch_size = int(min(5_000_000, max(20_000, 1.3 * need / rate)))
    result = _concat_truncate(collected, n_conditional)
    result.sort()
    return result


def _concat_truncate(chunks: list, limit: int) -> np.ndarray:
    if not chunks:
        return np.empty(0, dtype=np.float64)
    joined = np.concatenate(chunks)
    return joined[:limit].copy()


def estimate_recovery_probability(
    model: ModelParams,
    mech: Mechanism,
    entry_deficit: float,
    n: int,
    seed: int,
    max_events: int = 10_000_000,
) -> Estimate:
    """Fraction of fresh-state excursions from -entry_deficit that recover."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (math.isfinite(entry_deficit) and entry_deficit > 0.0):
        raise ValueError("entry_deficit must be finite and > 0")
    _configure_threads()
    enc = kernel_encoding(mech)
    claim_kind, cp1, cp2 = kernel_params(model.claims)
    out = np.empty(n, dtype=np.int64)
    _kernels.excursion_batch(
        enc.kind,
        enc.param,
        enc.omega_breaks,
        enc.omega_levels,
        enc.resc_kind,
        enc.resc_param,
        enc.resc_ys,
        enc.resc_ps,
        float(entry_deficit),
        model.c,
        model.lam,
        claim_kind,
        cp1,
        cp2,
        np.uint64(seed & _MASK64),
        n,
        np.int64(max_events),
        out,
    )
    hits = int(np.count_nonzero(out == _kernels.VERDICT_RECOVERED))
    n_budget = int(np.count_nonzero(out == _kernels.VERDICT_EVENT_BUDGET))
    return _binomial_estimate(hits, n, 0.0, n_budget, ())
