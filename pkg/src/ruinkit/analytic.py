"""Closed forms and quadrature for ruin probabilities under rescue at first passage.

The classical ruin probability admits an exact formula for exponential
claims, a light-tailed exponential asymptotic, and a heavy-tailed
integrated-tail asymptotic. When every sub-zero excursion is resolved by
a single rescue draw at the entry deficit, the modified ruin probability
inherits the classical decay rate and differs only by a constant factor;
the functions here compute that factor and its renewal-equation
ingredients by adaptive quadrature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Optional, Tuple, Union

from .claims import (
    ClaimDistribution,
    CramerLight,
    Exponential,
    ModelParams,
    Neither,
    RegimeTag,
    RegimeUnavailable,
    SubexponentialHeavy,
    classify_regime,
    density,
    integrated_tail_complement,
    mean,
    mgf_derivative,
    tail,
)
from .mechanisms import (
    Classical,
    Investor,
    Mechanism,
    RescueFunction,
    rescue_probability,
)
from .numerics import DEFAULT_TOLERANCE, Tolerance, integrate_finite, integrate_semi_infinite

__all__ = [
    "AsymptoticReport",
    "Cramer",
    "DegenerateP0",
    "GammaKind",
    "HeavyTail",
    "PsiMethod",
    "ReportRow",
    "cramer_constant_general",
    "cramer_constant_renewal",
    "cramer_prefactor",
    "limit_overshoot_tail",
    "make_report",
    "p0_renewal",
    "p_infinity_df",
    "psi_classical",
    "psi_modified_exact_exponential",
    "q0_renewal",
    "report_to_json",
]


class DegenerateP0(ValueError):
    """Rescue succeeds with probability one at every deficit; the renewal ratio blows up."""


class PsiMethod(Enum):
    """How a classical ruin value was obtained."""

    EXACT = "exact"
    CRAMER_ASYMPTOTIC = "cramer_asymptotic"
    HEAVY_ASYMPTOTIC = "heavy_asymptotic"


@dataclass(frozen=True)
class Cramer:
    """Exponential weighting exp(-R y) for overshoot limits in the light regime."""

    R: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.R) and self.R > 0.0):
            raise ValueError("R must be finite and > 0")


@dataclass(frozen=True)
class HeavyTail:
    """Unit weighting; the overshoot limit collapses to the trivial law."""


GammaKind = Union[Cramer, HeavyTail]


def _validate_nonneg(x: float, name: str) -> None:
    if not (math.isfinite(x) and x >= 0.0):
        raise ValueError(f"{name} must be finite and >= 0")


def cramer_prefactor(model: ModelParams, R: float) -> float:
    """Constant k in the light-tailed decay k * exp(-R u) of classical ruin.

    k = (c - lam*mean) / (lam * E[Y exp(RY)] - c); the denominator is
    positive at the adjustment coefficient.
    """
    slope = model.lam * mgf_derivative(model.claims, R) - model.c
    if not (math.isfinite(slope) and slope > 0.0):
        raise ArithmeticError("E[Y exp(RY)] must exceed c/lam at the adjustment coefficient")
    return (model.c - model.lam * mean(model.claims)) / slope


def psi_classical(model: ModelParams, u: float) -> Tuple[float, PsiMethod]:
    """Classical ruin probability at initial surplus u, with a method tag.

    Exponential claims get the exact closed form. Otherwise the value is
    the asymptotic matching the claim regime: k*exp(-R u) in the light
    case, lam*mean/(c - lam*mean) times the integrated-tail complement
    in the heavy case.

    Raises:
        RegimeUnavailable: No supported asymptotic applies.
    """
    _validate_nonneg(u, "u")
    dist = model.claims
    if isinstance(dist, Exponential):
        delta = dist.rate
        val = (model.lam / (model.c * delta)) * math.exp(-(delta - model.lam / model.c) * u)
        return min(1.0, val), PsiMethod.EXACT
    regime = classify_regime(model)
    if isinstance(regime, CramerLight):
        k = cramer_prefactor(model, regime.R)
        return min(1.0, k * math.exp(-regime.R * u)), PsiMethod.CRAMER_ASYMPTOTIC
    if isinstance(regime, SubexponentialHeavy):
        lam_mu = model.lam * mean(dist)
        val = lam_mu / (model.c - lam_mu) * integrated_tail_complement(dist, u)
        return min(1.0, val), PsiMethod.HEAVY_ASYMPTOTIC
    raise RegimeUnavailable("claims fit neither the light nor the heavy asymptotic regime")


def limit_overshoot_tail(
    kind: GammaKind,
    model: ModelParams,
    x: float,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> float:
    """Tail at x of the limiting first-passage deficit law, given ruin at large u.

    With weight g(y) = exp(-R y) (light regime) or g(y) = 1 (heavy
    regime), the tail is

        (c*g(x) - lam*I1 - lam*I2) / (c - lam*mean),

    where I1 integrates g(x - z) * P(Y > z) over [0, x] and I2 is the
    raw tail mass beyond x. The heavy case collapses to 1 identically.
    """
    _validate_nonneg(x, "x")
    dist = model.claims
    mu = mean(dist)
    if isinstance(kind, Cramer):
        R = kind.R
        g: Callable[[float], float] = lambda y: math.exp(-R * y)
    else:
        g = lambda y: 1.0
    head = 0.0
    if x > 0.0:
        head = integrate_finite(lambda z: g(x - z) * tail(dist, z), 0.0, x, tol)
    numer = model.c * g(x) - model.lam * head - model.lam * mu * integrated_tail_complement(dist, x)
    val = numer / (model.c - model.lam * mu)
    return min(1.0, max(0.0, val))


def _weighted_tail(dist: ClaimDistribution, R: float, z: float, x: float) -> float:
    """(exp(R z) - 1) * P(Y > z + x), evaluated without intermediate overflow."""
    t = tail(dist, z + x)
    if t <= 0.0:
        return 0.0
    rz = R * z
    if rz < 1.0:
        return math.expm1(rz) * t
    return math.exp(rz + math.log(t)) - t


def _weighted_density(dist: ClaimDistribution, R: float, z: float, x: float) -> float:
    """(exp(R z) - 1) * density(z + x), evaluated without intermediate overflow."""
    d = density(dist, z + x)
    if d <= 0.0:
        return 0.0
    rz = R * z
    if rz < 1.0:
        return math.expm1(rz) * d
    return math.exp(rz + math.log(d)) - d


def _check_unit_interval(val: float, what: str) -> float:
    if not math.isfinite(val) or val < -1e-6 or val > 1.0 + 1e-6:
        raise ArithmeticError(f"{what} = {val!r} is not a probability; quadrature failed")
    return min(1.0, max(0.0, val))


def p_infinity_df(
    model: ModelParams, R: float, x: float, tol: Tolerance = DEFAULT_TOLERANCE
) -> float:
    """Distribution function at x of the limiting deficit law (light regime).

    DF(x) = 1 - lam/(c - lam*mean) * integral over z in [0, inf) of
    (exp(R z) - 1) * P(Y > z + x).
    """
    if not (math.isfinite(R) and R > 0.0):
        raise ValueError("R must be finite and > 0")
    _validate_nonneg(x, "x")
    dist = model.claims
    weight = model.lam / (model.c - model.lam * mean(dist))
    integral = integrate_semi_infinite(lambda z: _weighted_tail(dist, R, z, x), 0.0, tol)
    return _check_unit_interval(1.0 - weight * integral, "limiting deficit DF")


def _p_infinity_density(model: ModelParams, R: float, x: float, tol: Tolerance) -> float:
    """Density at x > 0 of the limiting deficit law (light regime)."""
    dist = model.claims
    weight = model.lam / (model.c - model.lam * mean(dist))
    return weight * integrate_semi_infinite(lambda z: _weighted_density(dist, R, z, x), 0.0, tol)


def _rescue_at_depth(p: RescueFunction, x: float) -> float:
    # Quadrature nodes are strictly interior, but guard the x -> 0 edge anyway:
    # evaluate the rescue function just below the surface.
    return rescue_probability(p, -x if x > 0.0 else -5e-324)


def p0_renewal(
    p: RescueFunction, model: ModelParams, tol: Tolerance = DEFAULT_TOLERANCE
) -> float:
    """Probability that a fresh-start excursion ends in a successful rescue.

    p0 = (lam/c) * integral over x in (0, inf) of p(-x) * P(Y > x).
    The result is clamped into [0, lam*mean/c], its analytic range.
    """
    dist = model.claims
    integral = integrate_semi_infinite(
        lambda x: _rescue_at_depth(p, x) * tail(dist, x), 0.0, tol
    )
    val = (model.lam / model.c) * integral
    upper = model.lam * mean(dist) / model.c
    return min(upper, max(0.0, val))


def q0_renewal(p0: float, model: ModelParams) -> float:
    """Survival probability from surplus zero under rescue at first passage.

    q0 = (1 - psi_cl(0)) / (1 - p0), with psi_cl(0) = lam*mean/c for
    every claim family.

    Raises:
        DegenerateP0: p0 >= 1.
        ValueError: p0 negative, non-finite, or above psi_cl(0).
    """
    if not (math.isfinite(p0) and p0 >= 0.0):
        raise ValueError("p0 must be finite and >= 0")
    if p0 >= 1.0:
        raise DegenerateP0("rescue absorbs every excursion; survival from zero is certain")
    psi0 = model.lam * mean(model.claims) / model.c
    q0 = (1.0 - psi0) / (1.0 - p0)
    if q0 > 1.0 + 1e-9:
        raise ValueError("p0 exceeds the classical ruin mass at zero")
    return min(1.0, q0)


def psi_modified_exact_exponential(
    p: RescueFunction,
    model: ModelParams,
    u: float,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> float:
    """Exact modified ruin probability for exponential claims.

    The modified probability is the classical one scaled by
    (1 - c*delta*p0/lam) / (1 - p0), a constant in u.

    Raises:
        ValueError: Claims are not exponential.
        DegenerateP0: Rescue succeeds with probability one at all depths.
    """
    _validate_nonneg(u, "u")
    dist = model.claims
    if not isinstance(dist, Exponential):
        raise ValueError("exact modified ruin formula requires exponential claims")
    p0 = p0_renewal(p, model, tol)
    if p0 >= 1.0:
        raise DegenerateP0("rescue absorbs every excursion")
    factor = (1.0 - model.c * dist.rate * p0 / model.lam) / (1.0 - p0)
    psi_cl, _ = psi_classical(model, u)
    return max(0.0, factor * psi_cl)


def _inner_tolerance(tol: Tolerance) -> Tolerance:
    # Inner quadrature errors accumulate across outer nodes; tighten two decades.
    return Tolerance(tol.abs_tol * 1e-2, tol.rel_tol, tol.max_iter)


def cramer_constant_renewal(
    p: RescueFunction,
    model: ModelParams,
    R: float,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> float:
    """Ratio of modified to classical ruin probability in the light-tailed limit.

    C = 1 - q0 * integral over x in (0, inf) of p(-x) * f(x), where f is
    the limiting deficit density. Both the deficit density and the outer
    integral are evaluated by adaptive quadrature; no family-specific
    shortcut is taken, so this route is independent of the exact
    exponential formula.
    """
    if not (math.isfinite(R) and R > 0.0):
        raise ValueError("R must be finite and > 0")
    p0 = p0_renewal(p, model, tol)
    q0 = q0_renewal(p0, model)
    inner = _inner_tolerance(tol)
    integral = integrate_semi_infinite(
        lambda x: _rescue_at_depth(p, x) * _p_infinity_density(model, R, x, inner), 0.0, tol
    )
    return _check_unit_interval(1.0 - q0 * integral, "renewal ratio constant")


def cramer_constant_general(
    psi_neg: Callable[[float], float],
    model: ModelParams,
    R: float,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> float:
    """Light-tailed ruin ratio from an arbitrary sub-zero ruin profile.

    C = integral over x in (0, inf) of psi_neg(-x) * f(x) against the
    limiting deficit density f. ``psi_neg(y)`` is the ruin probability
    when an excursion starts at y < 0; it is assumed measurable and
    bounded in [0, 1] (continuity or monotonicity is the caller's
    responsibility; it is not checked here).
    """
    if not (math.isfinite(R) and R > 0.0):
        raise ValueError("R must be finite and > 0")
    inner = _inner_tolerance(tol)

    def outer(x: float) -> float:
        w = float(psi_neg(-x if x > 0.0 else -5e-324))
        if w == 0.0:
            return 0.0
        return w * _p_infinity_density(model, R, x, inner)

    integral = integrate_semi_infinite(outer, 0.0, tol)
    return _check_unit_interval(integral, "general ratio constant")


# -- consolidated report ------------------------------------------------------


class ReportRow(NamedTuple):
    u: float
    psi_cl: float
    psi_cl_method: PsiMethod
    psi_modified: Optional[float]


@dataclass(frozen=True)
class AsymptoticReport:
    """Everything the asymptotic theory pins down for one model/mechanism pair."""

    regime: RegimeTag
    R: Optional[float]
    k: Optional[float]
    C: Optional[float]
    p0: Optional[float]
    q0: Optional[float]
    notes: Tuple[str, ...]
    table: Tuple[ReportRow, ...]


def make_report(
    model: ModelParams,
    mechanism: Mechanism,
    u_grid: Tuple[float, ...] = (),
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> AsymptoticReport:
    """Collect regime, decay constants, and per-u analytic values.

    The ratio constant C is available only in the light-tailed regime
    and only for mechanisms whose excursions are settled by a single
    draw at the entry deficit (classical, investor rescue). For other
    mechanisms the ratio must be estimated by simulation. In the heavy
    regime the modified probability is asymptotically the classical one.
    """
    regime = classify_regime(model)
    notes = []
    R: Optional[float] = None
    k: Optional[float] = None
    if isinstance(regime, CramerLight):
        R = regime.R
        k = cramer_prefactor(model, R)
        notes.append("light-tailed regime: classical ruin decays like k*exp(-R*u)")
    elif isinstance(regime, SubexponentialHeavy):
        notes.append(
            "heavy-tailed regime: modified ruin is asymptotically equivalent to "
            "classical ruin (the ratio tends to 1)"
        )
    else:
        notes.append("no supported asymptotic regime for this model")

    C: Optional[float] = None
    p0: Optional[float] = None
    q0: Optional[float] = None
    psi_mod: Callable[[float], Optional[float]] = lambda u: None
    if isinstance(mechanism, Classical):
        p0 = 0.0
        q0 = q0_renewal(p0, model)
        if R is not None:
            C = 1.0
        psi_mod = lambda u: psi_classical(model, u)[0]
    elif isinstance(mechanism, Investor):
        p0 = p0_renewal(mechanism.p, model, tol)
        q0 = q0_renewal(p0, model)
        if R is not None:
            C = cramer_constant_renewal(mechanism.p, model, R, tol)
        if isinstance(model.claims, Exponential):
            psi_mod = lambda u: psi_modified_exact_exponential(mechanism.p, model, u, tol)
        else:
            notes.append("modified ruin curve has no closed form for these claims")
    elif R is not None:
        notes.append(
            "no analytic ratio constant for this mechanism; estimate the ratio "
            "to classical ruin by simulation"
        )

    rows = []
    for u in u_grid:
        val, method = psi_classical(model, float(u))
        rows.append(ReportRow(float(u), val, method, psi_mod(float(u))))
    return AsymptoticReport(
        regime=regime,
        R=R,
        k=k,
        C=C,
        p0=p0,
        q0=q0,
        notes=tuple(notes),
        table=tuple(rows),
    )


_REGIME_LABELS = {CramerLight: "cramer", SubexponentialHeavy: "heavy", Neither: "neither"}


def report_to_json(report: AsymptoticReport) -> str:
    """Serialize a report to a stable, human-readable JSON document."""
    payload = {
        "regime": _REGIME_LABELS[type(report.regime)],
        "R": report.R,
        "k": report.k,
        "C": report.C,
        "p0": report.p0,
        "q0": report.q0,
        "notes": list(report.notes),
        "table": [
            {
                "u": row.u,
                "psi_cl": row.psi_cl,
                "psi_cl_method": row.psi_cl_method.value,
                "psi_modified": row.psi_modified,
            }
            for row in report.table
        ],
    }
    return json.dumps(payload, indent=2)
