"""Exact and Monte Carlo spinlabor statistics for erasure with a spin reservoir."""

from .core import (
    LN2,
    DomainError,
    ErasureParams,
    FirstLawLedger,
    NonConvergenceError,
    alpha_from_gamma,
    gamma_from_alpha,
    mean_spinlabor,
    q_up,
    spintherm_from_spinlabor,
    variance_spinlabor,
    vb_bound,
)
from .distribution import (
    SpinlaborPmf,
    bernoulli_increments,
    closed_form_full_half,
    closed_form_pm,
    pmf_after_m_cycles,
    pmf_exp_average,
    pmf_full_erasure,
)
from .fluctuation import (
    SemiAnalyticFit,
    ViolationCurve,
    bound_a,
    bound_b,
    decay_limit_study,
    decay_trend,
    jarzynski_lhs,
    jarzynski_rhs,
    partial_exp_averages,
    ratio_term,
    semi_analytic_fit,
    violation_curve,
    violation_probability,
)
from .montecarlo import (
    EnsembleSummary,
    StopRule,
    TrajectoryRecord,
    chi_square_vs_exact,
    ledger_check,
    sample_reservoir_up_count,
    simulate_ensemble,
    simulate_trajectory,
)

__version__ = "0.1.0"
