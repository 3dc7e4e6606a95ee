"""Claim-size distribution families and surplus-process model parameters.

Three positive claim families are supported: Exponential(rate),
Pareto(shape, scale) in the Lomax parameterization with support [0, inf)
and shape > 1 so the mean is finite, and Gamma(shape, rate). The module
houses the distribution function, tail, mean, integrated-tail law,
moment generating function, density, samplers, and the light/heavy
regime classifier built on the adjustment-coefficient equation
lam * (E[exp(s Y)] - 1) = c * s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

from scipy import special as sp_special

from ruinkit import _kernels
from ruinkit.numerics import (
    DEFAULT_TOLERANCE,
    NumericsError,
    Tolerance,
    find_root_bracketed,
)

if TYPE_CHECKING:
    from ruinkit.rng import RandomStream


class RegimeUnavailable(RuntimeError):
    """No supported asymptotic regime applies to the model."""


class NetProfitError(ValueError):
    """Premium income does not exceed the expected claim outflow."""


@dataclass(frozen=True)
class Exponential:
    """Exponential claim sizes with the given rate (mean 1/rate)."""

    rate: float

    def __post_init__(self) -> None:
        if not self.rate > 0.0:
            raise ValueError("Exponential rate must be > 0")


@dataclass(frozen=True)
class Pareto:
    """Pareto (Lomax) claim sizes: tail (1 + t/scale)^(-shape) on [0, inf).

    shape > 1 is required so the mean is finite.
    """

    shape: float
    scale: float

    def __post_init__(self) -> None:
        if not self.shape > 1.0:
            raise ValueError("Pareto shape must be > 1 for a finite mean")
        if not self.scale > 0.0:
            raise ValueError("Pareto scale must be > 0")


@dataclass(frozen=True)
class Gamma:
    """Gamma claim sizes with the given shape and rate."""

    shape: float
    rate: float

    def __post_init__(self) -> None:
        if not self.shape > 0.0:
            raise ValueError("Gamma shape must be > 0")
        if not self.rate > 0.0:
            raise ValueError("Gamma rate must be > 0")


ClaimDistribution = Union[Exponential, Pareto, Gamma]


@dataclass(frozen=True)
class ModelParams:
    """Premium rate c, claim arrival intensity lam, and the claim law.

    The constructor enforces the net profit condition c > lam * mean.
    """

    c: float
    lam: float
    claims: ClaimDistribution

    def __post_init__(self) -> None:
        if not self.c > 0.0:
            raise ValueError("premium rate c must be > 0")
        if not self.lam > 0.0:
            raise ValueError("claim intensity lam must be > 0")
        mu = mean(self.claims)
        if not self.c > self.lam * mu:
            raise NetProfitError(
                f"net profit condition violated: c = {self.c} <= lam * mean = {self.lam * mu}"
            )


@dataclass(frozen=True)
class CramerLight:
    """Light-tailed regime; carries the adjustment coefficient R."""

    R: float


@dataclass(frozen=True)
class SubexponentialHeavy:
    """Heavy-tailed regime (integrated tail subexponential by family)."""


@dataclass(frozen=True)
class Neither:
    """No usable regime; detail carries the solver diagnostic."""

    detail: str = ""


RegimeTag = Union[CramerLight, SubexponentialHeavy, Neither]


def mean(dist: ClaimDistribution) -> float:
    """Exact closed-form mean of the claim law."""
    if isinstance(dist, Exponential):
        return 1.0 / dist.rate
    if isinstance(dist, Pareto):
        return dist.scale / (dist.shape - 1.0)
    return dist.shape / dist.rate


def tail(dist: ClaimDistribution, t: float) -> float:
    """Survival function value P(Y > t) for t >= 0."""
    if t < 0.0:
        raise ValueError("tail argument must be >= 0")
    if isinstance(dist, Exponential):
        return math.exp(-dist.rate * t)
    if isinstance(dist, Pareto):
        return (1.0 + t / dist.scale) ** (-dist.shape)
    return float(sp_special.gammaincc(dist.shape, dist.rate * t))


def integrated_tail_complement(dist: ClaimDistribution, u: float) -> float:
    """Tail of the integrated-tail law: (1/mean) * integral over [u, inf) of the tail.

    Closed form for every supported family.
    """
    if u < 0.0:
        raise ValueError("argument must be >= 0")
    if isinstance(dist, Exponential):
        return math.exp(-dist.rate * u)
    if isinstance(dist, Pareto):
        return (1.0 + u / dist.scale) ** (-(dist.shape - 1.0))
    k, beta = dist.shape, dist.rate
    x = beta * u
    val = float(sp_special.gammaincc(k + 1.0, x)) - (u * beta / k) * float(
        sp_special.gammaincc(k, x)
    )
    return min(1.0, max(0.0, val))


def inverse_integrated_tail(dist: ClaimDistribution, q: float) -> float:
    """Smallest u with integrated-tail complement <= q; used for barrier sizing."""
    if not 0.0 < q <= 1.0:
        raise ValueError("quantile level must be in (0, 1]")
    if isinstance(dist, Exponential):
        return -math.log(q) / dist.rate
    if isinstance(dist, Pareto):
        return dist.scale * (q ** (-1.0 / (dist.shape - 1.0)) - 1.0)
    # Gamma: bracket geometrically, then bisect the monotone closed form.
    hi = 1.0 / dist.rate
    while integrated_tail_complement(dist, hi) > q:
        hi *= 2.0
    return find_root_bracketed(
        lambda u: integrated_tail_complement(dist, u) - q, 0.0, hi, Tolerance(1e-12, 1e-12, 400)
    ) if integrated_tail_complement(dist, 0.0) > q else 0.0


def mgf_minus_one(dist: ClaimDistribution, s: float) -> float:
    """E[exp(s Y)] - 1, or inf outside the MGF domain."""
    if s < 0.0:
        raise ValueError("s must be >= 0")
    if s == 0.0:
        return 0.0
    if isinstance(dist, Exponential):
        return s / (dist.rate - s) if s < dist.rate else math.inf
    if isinstance(dist, Pareto):
        return math.inf
    if s < dist.rate:
        return (dist.rate / (dist.rate - s)) ** dist.shape - 1.0
    return math.inf


def mgf_derivative(dist: ClaimDistribution, s: float) -> float:
    """E[Y exp(s Y)], or inf outside the MGF domain."""
    if s < 0.0:
        raise ValueError("s must be >= 0")
    if isinstance(dist, Exponential):
        if s < dist.rate:
            return dist.rate / (dist.rate - s) ** 2
        return math.inf
    if isinstance(dist, Pareto):
        return mean(dist) if s == 0.0 else math.inf
    if s < dist.rate:
        ratio = dist.rate / (dist.rate - s)
        return dist.shape / (dist.rate - s) * ratio**dist.shape
    return math.inf


def density(dist: ClaimDistribution, x: float) -> float:
    """Probability density at x (0 for x < 0)."""
    if x < 0.0:
        return 0.0
    if isinstance(dist, Exponential):
        return dist.rate * math.exp(-dist.rate * x)
    if isinstance(dist, Pareto):
        return (dist.shape / dist.scale) * (1.0 + x / dist.scale) ** (-dist.shape - 1.0)
    k, beta = dist.shape, dist.rate
    if x == 0.0:
        if k < 1.0:
            return math.inf
        return beta if k == 1.0 else 0.0
    logpdf = k * math.log(beta) + (k - 1.0) * math.log(x) - beta * x - float(
        sp_special.gammaln(k)
    )
    return math.exp(logpdf)


def kernel_params(dist: ClaimDistribution) -> tuple[int, float, float]:
    """Encode the family for the compiled kernels: (kind, p1, p2)."""
    if isinstance(dist, Exponential):
        return _kernels.CLAIM_EXPONENTIAL, dist.rate, 0.0
    if isinstance(dist, Pareto):
        return _kernels.CLAIM_PARETO, dist.shape, dist.scale
    return _kernels.CLAIM_GAMMA, dist.shape, dist.rate


def sample_claim(dist: ClaimDistribution, rng: "RandomStream") -> float:
    """One claim-size draw from the stream (inverse CDF where available)."""
    kind, p1, p2 = kernel_params(dist)
    return float(_kernels.claim_draw(rng.state, kind, p1, p2))


_BRACKET_EPS = 1e-12


def classify_regime(model: ModelParams, tol: Tolerance = DEFAULT_TOLERANCE) -> RegimeTag:
    """Classify the model as light-tailed (with R), heavy-tailed, or neither.

    In the light case R > 0 solves lam * (E[exp(R Y)] - 1) = c * R on a
    bracket just inside the MGF domain; under the net profit condition
    the equation has exactly one positive root there.
    """
    dist = model.claims
    if isinstance(dist, Pareto):
        return SubexponentialHeavy()
    boundary = dist.rate

    def cramer_gap(s: float) -> float:
        return model.lam * mgf_minus_one(dist, s) - model.c * s

    try:
        r = find_root_bracketed(
            cramer_gap, _BRACKET_EPS, (1.0 - _BRACKET_EPS) * boundary, tol
        )
    except NumericsError as exc:
        return Neither(detail=f"adjustment-coefficient solve failed: {exc}")
    return CramerLight(R=r)
