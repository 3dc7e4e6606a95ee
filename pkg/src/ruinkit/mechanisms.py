"""Modified-ruin mechanisms and per-excursion resolution.

A mechanism decides what happens while the surplus is negative: classical
ruin fires immediately, Parisian clocks tolerate sojourns up to a budget,
an omega rate function kills at a surplus-dependent hazard, debit interest
reshapes the drift, and an investor may rescue the whole excursion at entry.
`resolve_excursion` plays a single negative excursion to its verdict;
cross-excursion memory (cumulative budgets) travels in `MechanismState`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np

from . import _kernels
from .claims import ModelParams, kernel_params
from .rng import RandomStream


class InvalidState(ValueError):
    """Mechanism state fields do not fit the mechanism variant."""


class DomainError(ValueError):
    """Argument outside the domain a rescue function is defined on."""


# -- rate functions (omega mechanism) ---------------------------------------


@dataclass(frozen=True)
class ConstantBelowZero:
    """Bankruptcy rate equal to `level` everywhere below zero."""

    level: float

    def __post_init__(self):
        if not (math.isfinite(self.level) and self.level >= 0.0):
            raise ValueError("level must be finite and >= 0")


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant bankruptcy rate.

    `breakpoints` are strictly descending negative thresholds.  With m
    breakpoints there are m+1 pieces: levels[0] applies on
    [breakpoints[0], 0), levels[j] on [breakpoints[j], breakpoints[j-1]),
    and levels[m] extends below the deepest breakpoint.  Rates must not
    decrease as the surplus gets deeper.
    """

    breakpoints: Tuple[float, ...]
    levels: Tuple[float, ...]

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        lvls = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "levels", lvls)
        if len(bps) < 1:
            raise ValueError("need at least one breakpoint")
        if len(lvls) != len(bps) + 1:
            raise ValueError("need one level per piece (len(breakpoints) + 1)")
        if any(not (math.isfinite(b) and b < 0.0) for b in bps):
            raise ValueError("breakpoints must be finite and negative")
        if any(a <= b for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly descending")
        if any(not (math.isfinite(v) and v >= 0.0) for v in lvls):
            raise ValueError("levels must be finite and >= 0")
        if any(a > b + 1e-15 for a, b in zip(lvls, lvls[1:])):
            raise ValueError("levels must not decrease with depth")


RateFunction = Union[ConstantBelowZero, StepFunction]


# -- rescue functions (investor mechanism) ----------------------------------


@dataclass(frozen=True)
class ConstantP:
    """Rescue probability independent of the deficit."""

    p: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("p must lie in [0, 1]")


@dataclass(frozen=True)
class ExponentialDecay:
    """Rescue probability e^{kappa * y} for surplus y < 0 (kappa > 0)."""

    kappa: float

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa > 0.0):
            raise ValueError("kappa must be finite and > 0")


@dataclass(frozen=True)
class Table:
    """Rescue probability interpolated linearly between (y, p) points.

    Points are sorted by strictly increasing negative y; outside the table
    the nearest endpoint value applies.
    """

    points: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(y), float(p)) for y, p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 1:
            raise ValueError("need at least one point")
        ys = [y for y, _ in pts]
        if any(not (math.isfinite(y) and y < 0.0) for y in ys):
            raise ValueError("table y values must be finite and negative")
        if any(a >= b for a, b in zip(ys, ys[1:])):
            raise ValueError("table y values must be strictly increasing")
        if any(not (0.0 <= p <= 1.0) for _, p in pts):
            raise ValueError("table probabilities must lie in [0, 1]")


RescueFunction = Union[ConstantP, ExponentialDecay, Table]


# -- mechanisms --------------------------------------------------------------


@dataclass(frozen=True)
class Classical:
    """Ruin the instant the surplus goes negative."""


@dataclass(frozen=True)
class ParisianFixed:
    """Ruin when a single sojourn below zero exceeds r; clock resets at recovery."""

    r: float

    def __post_init__(self):
        _require_positive("r", self.r)


@dataclass(frozen=True)
class ParisianExponential:
    """Ruin when a sojourn outlasts a fresh Exp(rate) clock drawn per excursion."""

    rate: float

    def __post_init__(self):
        _require_positive("rate", self.rate)


@dataclass(frozen=True)
class CumulativeParisianFixed:
    """Ruin when total time spent below zero, summed over excursions, exceeds r."""

    r: float

    def __post_init__(self):
        _require_positive("r", self.r)


@dataclass(frozen=True)
class CumulativeParisianExponential:
    """Cumulative clock against a single Exp(rate) budget drawn once."""

    rate: float

    def __post_init__(self):
        _require_positive("rate", self.rate)


@dataclass(frozen=True)
class Omega:
    """Ruin at state-dependent rate omega(U_t) while the surplus is negative."""

    omega: RateFunction

    def __post_init__(self):
        if not isinstance(self.omega, (ConstantBelowZero, StepFunction)):
            raise ValueError("omega must be a rate function")


@dataclass(frozen=True)
class DebitInterest:
    """Below zero the insurer borrows at rate beta; recovery impossible from -c/beta."""

    debit_rate: float

    def __post_init__(self):
        _require_positive("debit_rate", self.debit_rate)


@dataclass(frozen=True)
class Investor:
    """One rescue draw at excursion entry; success guarantees recovery."""

    p: RescueFunction

    def __post_init__(self):
        if not isinstance(self.p, (ConstantP, ExponentialDecay, Table)):
            raise ValueError("p must be a rescue function")


Mechanism = Union[
    Classical,
    ParisianFixed,
    ParisianExponential,
    CumulativeParisianFixed,
    CumulativeParisianExponential,
    Omega,
    DebitInterest,
    Investor,
]


def _require_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError(f"{name} must be finite and > 0")


# -- state and verdicts -------------------------------------------------------


@dataclass(frozen=True)
class MechanismState:
    """Cross-excursion memory.

    remaining_budget is the unspent cumulative Parisian clock (infinite for
    mechanisms without one, and for a cumulative exponential budget not yet
    drawn); accumulated_hazard tallies consumed omega hazard; rescue_consumed
    records whether an investor rescue has fired.
    """

    remaining_budget: float = math.inf
    accumulated_hazard: float = 0.0
    rescue_consumed: bool = False


@dataclass(frozen=True)
class RecoveredAtZero:
    """Excursion ended with the surplus back at zero."""

    state: MechanismState


@dataclass(frozen=True)
class Ruined:
    """The mechanism triggered during the excursion."""


ExcursionVerdict = Union[RecoveredAtZero, Ruined]


def new_state(mech: Mechanism) -> MechanismState:
    """Fresh state for a path that has not yet gone below zero."""
    if isinstance(mech, CumulativeParisianFixed):
        return MechanismState(remaining_budget=mech.r)
    return MechanismState()


def _check_state(mech: Mechanism, state: MechanismState) -> None:
    budget = state.remaining_budget
    if math.isnan(budget) or budget < 0.0:
        raise InvalidState("remaining_budget must be >= 0")
    if math.isnan(state.accumulated_hazard) or state.accumulated_hazard < 0.0:
        raise InvalidState("accumulated_hazard must be >= 0")
    if isinstance(mech, CumulativeParisianFixed):
        if math.isinf(budget):
            raise InvalidState("cumulative fixed budget must be finite")
    elif not isinstance(mech, CumulativeParisianExponential):
        if not math.isinf(budget):
            raise InvalidState("only cumulative mechanisms carry a finite budget")


# -- kernel encoding ----------------------------------------------------------

_EMPTY = np.empty(0, dtype=np.float64)


class KernelMechanism(NamedTuple):
    """Flat encoding consumed by the numba kernels."""

    kind: int
    param: float
    omega_breaks: np.ndarray
    omega_levels: np.ndarray
    resc_kind: int
    resc_param: float
    resc_ys: np.ndarray
    resc_ps: np.ndarray


def _rate_arrays(omega: RateFunction) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(omega, ConstantBelowZero):
        return _EMPTY, np.array([omega.level], dtype=np.float64)
    return (
        np.array(omega.breakpoints, dtype=np.float64),
        np.array(omega.levels, dtype=np.float64),
    )


def _rescue_encoding(p: RescueFunction) -> Tuple[int, float, np.ndarray, np.ndarray]:
    if isinstance(p, ConstantP):
        return _kernels.RESCUE_CONSTANT, p.p, _EMPTY, _EMPTY
    if isinstance(p, ExponentialDecay):
        return _kernels.RESCUE_EXP_DECAY, p.kappa, _EMPTY, _EMPTY
    ys = np.array([y for y, _ in p.points], dtype=np.float64)
    ps = np.array([q for _, q in p.points], dtype=np.float64)
    return _kernels.RESCUE_TABLE, 0.0, ys, ps


def kernel_encoding(mech: Mechanism) -> KernelMechanism:
    """Flatten a mechanism into the arrays/scalars the kernels expect."""
    kind, param = {
        Classical: (_kernels.MECH_CLASSICAL, 0.0),
        ParisianFixed: (_kernels.MECH_PARISIAN_FIXED, None),
        ParisianExponential: (_kernels.MECH_PARISIAN_EXP, None),
        CumulativeParisianFixed: (_kernels.MECH_CUM_PARISIAN_FIXED, None),
        CumulativeParisianExponential: (_kernels.MECH_CUM_PARISIAN_EXP, None),
        Omega: (_kernels.MECH_OMEGA, 0.0),
        DebitInterest: (_kernels.MECH_DEBIT, None),
        Investor: (_kernels.MECH_INVESTOR, 0.0),
    }[type(mech)]
    if param is None:
        if isinstance(mech, (ParisianFixed, CumulativeParisianFixed)):
            param = mech.r
        elif isinstance(mech, DebitInterest):
            param = mech.debit_rate
        else:
            param = mech.rate
    breaks, levels = _rate_arrays(mech.omega) if isinstance(mech, Omega) else (_EMPTY, _EMPTY)
    if isinstance(mech, Investor):
        resc_kind, resc_param, resc_ys, resc_ps = _rescue_encoding(mech.p)
    else:
        resc_kind, resc_param, resc_ys, resc_ps = _kernels.RESCUE_CONSTANT, 0.0, _EMPTY, _EMPTY
    return KernelMechanism(kind, float(param), breaks, levels, resc_kind, resc_param, resc_ys, resc_ps)


# -- operations ---------------------------------------------------------------

# An excursion terminates in finitely many claims with probability one, so the
# direct-call path places no practical cap on events.
_NO_EVENT_LIMIT = np.int64(2**62)


def rescue_probability(p: RescueFunction, y: float) -> float:
    """Probability of an investor rescue at negative surplus y."""
    if not y < 0.0:
        raise DomainError("rescue probability is defined for y < 0 only")
    kind, param, ys, ps = _rescue_encoding(p)
    val = float(_kernels.rescue_prob_kernel(kind, param, ys, ps, float(y)))
    return min(1.0, max(0.0, val))


def trigger_time_omega(
    omega: RateFunction,
    segment_start_surplus: float,
    drift: float,
    duration: float,
    hazard_budget: float,
) -> Tuple[float, Optional[float]]:
    """Hazard consumed along one linear sub-zero segment.

    Integrates the rate function along U(s) = start + drift*s for
    s in [0, duration].  Returns (consumed, trigger_offset); the offset is
    the segment time at which cumulative hazard crosses the budget, or None
    if the budget survives.
    """
    if not isinstance(omega, (ConstantBelowZero, StepFunction)):
        raise ValueError("omega must be a rate function")
    if duration < 0.0:
        raise ValueError("duration must be >= 0")
    if not hazard_budget > 0.0:
        raise ValueError("hazard_budget must be > 0")
    end = segment_start_surplus + drift * duration
    if segment_start_surplus > 1e-12 or end > 1e-9:
        raise ValueError("segment must stay at or below zero")
    breaks, levels = _rate_arrays(omega)
    consumed, offset = _kernels.omega_segment(
        breaks, levels, float(segment_start_surplus), float(drift), float(duration), float(hazard_budget)
    )
    return float(consumed), (None if offset < 0.0 else float(offset))


def debit_recovery_time(debit_rate: float, c: float, deficit: float) -> float:
    """Closed-form time for U' = c + debit_rate*U to climb from -deficit to 0."""
    _require_positive("debit_rate", debit_rate)
    _require_positive("c", c)
    limit = c / debit_rate
    if not (0.0 < deficit < limit):
        raise ValueError("recovery requires 0 < deficit < c/debit_rate")
    return math.log(limit / (limit - deficit)) / debit_rate


def resolve_excursion(
    mech: Mechanism,
    state: MechanismState,
    entry_deficit: float,
    model: ModelParams,
    rng: RandomStream,
) -> ExcursionVerdict:
    """Play one negative excursion, entered by a claim jump to -entry_deficit."""
    if not (math.isfinite(entry_deficit) and entry_deficit > 0.0):
        raise ValueError("entry_deficit must be finite and > 0")
    _check_state(mech, state)
    enc = kernel_encoding(mech)
    claim_kind, cp1, cp2 = kernel_params(model.claims)
    state_vec = np.array(
        [state.remaining_budget, state.accumulated_hazard, 1.0 if state.rescue_consumed else 0.0],
        dtype=np.float64,
    )
    verdict, _ = _kernels.resolve_excursion_kernel(
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
        state_vec,
        rng.state,
        _NO_EVENT_LIMIT,
    )
    if verdict == _kernels.VERDICT_RUINED:
        return Ruined()
    return RecoveredAtZero(
        MechanismState(
            remaining_budget=float(state_vec[0]),
            accumulated_hazard=float(state_vec[1]),
            rescue_consumed=bool(state_vec[2]),
        )
    )
