"""Ruin probabilities for the compound-Poisson surplus process.

Analytic formulas and a parallel Monte Carlo engine for classical ruin
and for modified notions of ruin: Parisian delays (fixed or exponential
clocks, per excursion or cumulative), hazard-rate bankruptcy below zero,
debit interest on negative surplus, and investor rescue at first
passage.
"""

from .analytic import (
    AsymptoticReport,
    Cramer,
    DegenerateP0,
    GammaKind,
    HeavyTail,
    PsiMethod,
    ReportRow,
    cramer_constant_general,
    cramer_constant_renewal,
    cramer_prefactor,
    limit_overshoot_tail,
    make_report,
    p0_renewal,
    p_infinity_df,
    psi_classical,
    psi_modified_exact_exponential,
    q0_renewal,
    report_to_json,
)
from .claims import (
    ClaimDistribution,
    CramerLight,
    Exponential,
    Gamma,
    ModelParams,
    Neither,
    NetProfitError,
    Pareto,
    RegimeTag,
    RegimeUnavailable,
    SubexponentialHeavy,
    classify_regime,
    density,
    integrated_tail_complement,
    inverse_integrated_tail,
    mean,
    mgf_derivative,
    mgf_minus_one,
    tail,
)
from .cli import Scenario, ScenarioError, parse_scenario, scenario_to_json
from .mechanisms import (
    Classical,
    ConstantBelowZero,
    ConstantP,
    CumulativeParisianExponential,
    CumulativeParisianFixed,
    DebitInterest,
    DomainError,
    ExponentialDecay,
    InvalidState,
    Investor,
    Mechanism,
    MechanismState,
    Omega,
    ParisianExponential,
    ParisianFixed,
    RateFunction,
    RecoveredAtZero,
    RescueFunction,
    Ruined,
    StepFunction,
    Table,
    debit_recovery_time,
    new_state,
    rescue_probability,
    resolve_excursion,
    trigger_time_omega,
)
from .numerics import (
    DEFAULT_TOLERANCE,
    Divergent,
    MaxIterExceeded,
    NoSignChange,
    NumericsError,
    Tolerance,
    find_root_bracketed,
    integrate_finite,
    integrate_semi_infinite,
)
from .rng import RandomStream
from .simulate import (
    AutoBarrier,
    BarrierMode,
    Estimate,
    FixedBarrier,
    PathBatch,
    PathOutcome,
    RatioEstimate,
    SampleBudgetExceeded,
    SimConfig,
    Verdict,
    ZeroDenominator,
    estimate_deficit_distribution,
    estimate_from_batch,
    estimate_ratio_crn,
    estimate_recovery_probability,
    estimate_ruin,
    ratio_from_batch,
    simulate_paths,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticReport",
    "AutoBarrier",
    "BarrierMode",
    "ClaimDistribution",
    "Classical",
    "ConstantBelowZero",
    "ConstantP",
    "Cramer",
    "CramerLight",
    "CumulativeParisianExponential",
    "CumulativeParisianFixed",
    "DEFAULT_TOLERANCE",
    "DebitInterest",
    "DegenerateP0",
    "Divergent",
    "DomainError",
    "Estimate",
    "Exponential",
    "ExponentialDecay",
    "FixedBarrier",
    "Gamma",
    "GammaKind",
    "HeavyTail",
    "InvalidState",
    "Investor",
    "MaxIterExceeded",
    "Mechanism",
    "MechanismState",
    "ModelParams",
    "Neither",
    "NetProfitError",
    "NoSignChange",
    "NumericsError",
    "Omega",
    "ParisianExponential",
    "ParisianFixed",
    "Pareto",
    "PathBatch",
    "PathOutcome",
    "PsiMethod",
    "RandomStream",
    "RateFunction",
    "RatioEstimate",
    "RecoveredAtZero",
    "RegimeTag",
    "RegimeUnavailable",
    "ReportRow",
    "RescueFunction",
    "Ruined",
    "SampleBudgetExceeded",
    "Scenario",
    "ScenarioError",
    "SimConfig",
    "StepFunction",
    "SubexponentialHeavy",
    "Table",
    "Tolerance",
    "Verdict",
    "ZeroDenominator",
    "classify_regime",
    "cramer_constant_general",
    "cramer_constant_renewal",
    "cramer_prefactor",
    "debit_recovery_time",
    "density",
    "estimate_deficit_distribution",
    "estimate_from_batch",
    "estimate_ratio_crn",
    "estimate_recovery_probability",
    "estimate_ruin",
    "find_root_bracketed",
    "integrate_finite",
    "integrate_semi_infinite",
    "integrated_tail_complement",
    "inverse_integrated_tail",
    "limit_overshoot_tail",
    "make_report",
    "mean",
    "mgf_derivative",
    "mgf_minus_one",
    "new_state",
    "p0_renewal",
    "p_infinity_df",
    "parse_scenario",
    "psi_classical",
    "psi_modified_exact_exponential",
    "q0_renewal",
    "ratio_from_batch",
    "report_to_json",
    "rescue_probability",
    "resolve_excursion",
    "scenario_to_json",
    "simulate_paths",
    "tail",
    "trigger_time_omega",
]
