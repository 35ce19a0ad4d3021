"""Fluctuation relations for the spinlabor cost.

Covers the Jarzynski-like equality ``<exp(-g L)> = (1 + r) / (2 (1 + r^2))``,
the probability that a single erasure beats the VB cost ``ln2 / g`` by at
least ``eps`` quanta, the exponential bounds A and B on that probability, and
the two-point exponential fit ``C exp(-a eps)`` at the special inverse
temperatures ``g = ln2 / b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import LN2, DomainError, ErasureParams, _check_finite, _check_positive_g, truncation_cycles
from .distribution import SpinlaborPmf, pmf_exp_average, pmf_full_erasure

# absolute slack on the violation threshold ln2/g - eps; keeps integer grids exact at g = ln2/b
BOUNDARY_SLACK = 1e-12


def jarzynski_rhs(g: float) -> float:
    g = _check_finite(g)
    r = math.exp(-g)
    return (1.0 + r) / (2.0 * (1.0 + r * r))


def _require_converged_half(pmf: SpinlaborPmf, what: str) -> None:
    if not pmf.converged:
        raise DomainError(f"{what} needs a converged full-erasure PMF")
    if pmf.p_init != 0.5:
        raise DomainError(f"{what} needs p_init = 1/2, got {pmf.p_init!r}")


def jarzynski_lhs(pmf: SpinlaborPmf) -> float:
    """Average exponentiated spinlabor ``<exp(-g L)>`` over an exact full-erasure PMF."""
    _require_converged_half(pmf, "jarzynski_lhs")
    return pmf_exp_average(pmf, pmf.g)


def partial_exp_averages(params: ErasureParams) -> tuple[float, float]:
    """Factors of ``<exp(-g L)>`` from the first CNOT and from the remaining cycles.

    The second factor is evaluated as the explicit product
    ``prod_k (1 - q_up(k) + q_up(k) r)``, which telescopes to ``1 / (1 + r^2)``.
    """
    if params.p_init != 0.5:
        raise DomainError("partial_exp_averages needs p_init = 1/2")
    r = params.r
    first = (1.0 + r) / 2.0
    n = truncation_cycles(params.g, params.tail_tol)
    k = np.arange(1, n + 1)
    x = np.exp(-(k + 1) * params.g)
    # 1 - q + q r with q = x / (1 + x)
    rest = math.exp(math.fsum(np.log1p(x * r) - np.log1p(x)))
    return first, rest


def bound_a(g: float) -> float:
    """Prefactor ``A = (1 + r) / (1 + r^2)``, twice the Jarzynski-like average."""
    g = _check_positive_g(g)
    return 2.0 * jarzynski_rhs(g)


def _threshold(g: float, eps: float) -> float:
    return LN2 / g - eps + BOUNDARY_SLACK


def bound_b(pmf: SpinlaborPmf) -> float:
    """Prefactor ``B = 2 sum_{q <= ln2/g} P(q) exp(-g q)``; never exceeds ``A``."""
    if not pmf.converged:
        raise DomainError("bound_b needs a converged full-erasure PMF")
    g = pmf.g
    q = pmf.support
    mask = q <= _threshold(g, 0.0)
    return 2.0 * math.fsum(pmf.probs[mask] * np.exp(-g * q[mask]))


def violation_probability(pmf: SpinlaborPmf, epsilon: float) -> float:
    """Probability that the spinlabor is at most ``ln2/g - epsilon``."""
    if epsilon < 0:
        raise DomainError(f"epsilon must be >= 0, got {epsilon!r}")
    if not pmf.converged:
        raise DomainError("violation_probability needs a converged full-erasure PMF")
    top = _threshold(pmf.g, epsilon)
    if top < 0:
        return 0.0
    n = min(len(pmf.probs), math.floor(top) + 1)
    return math.fsum(pmf.probs[:n])


def special_b(g: float, rtol: float = 1e-12) -> int | None:
    """Return ``b`` when ``g == ln2 / b`` for a positive integer ``b``, else ``None``."""
    b = LN2 / g
    nb = round(b)
    if nb >= 1 and abs(b - nb) <= rtol * nb:
        return int(nb)
    return None


def ratio_term(b: int, n: int) -> float:
    """``P(b - n) / P(b)`` for the full-erasure PMF at ``g = ln2 / b`` (so ``r^b = 1/2``)."""
    if int(b) != b or b < 1:
        raise DomainError(f"b must be a positive integer, got {b!r}")
    if int(n) != n or not 0 <= n <= b:
        raise DomainError(f"n must be an integer in [0, {b}], got {n!r}")
    b, n = int(b), int(n)
    if n == 0:
        return 1.0
    r = 2.0 ** (-1.0 / b)
    prod = math.prod(2.0 * r**j - 1.0 for j in range(1, n))
    if n < b:
        return prod * (2.0 - r ** (-n) * (1.0 - r)) / (1.0 + r)
    return prod * 2.0 * r / (1.0 + r)


def ratio_sum(b: int) -> float:
    """``Pr_v(0) / P(b) = sum_{n=0}^{b} P(b - n) / P(b)`` from the product formulas."""
    return math.fsum(ratio_term(b, n) for n in range(b + 1))


@dataclass(frozen=True)
class SemiAnalyticFit:
    """Two-point exponential fit ``C exp(-a eps)`` to the violation probability at ``g = ln2/b``."""

    b: int
    g: float
    amplitude_c: float
    decay_a: float
    ratio_from_pmf: float
    ratio_from_formula: float

    def __call__(self, epsilon):
        return self.amplitude_c * np.exp(-self.decay_a * np.asarray(epsilon, dtype=float))

    @property
    def a_squared_over_g(self) -> float:
        return self.decay_a**2 / self.g


def semi_analytic_fit(b: int, tail_tol: float = 1e-14, ratio_atol: float = 1e-9) -> SemiAnalyticFit:
    """Fit ``C exp(-a eps)`` through the violation probability at ``eps = 0`` and ``eps = 1``.

    ``C = Pr_v(0)`` and ``a = -ln(1 - P(b) / Pr_v(0))``. The ratio ``Pr_v(0)/P(b)`` is
    taken from the exact PMF and cross-checked against the product formulas of
    :func:`ratio_term`; a disagreement beyond ``ratio_atol`` (relative) raises.
    """
    params = ErasureParams.from_b(b, 0.5, tail_tol)
    b = int(b)
    pmf = pmf_full_erasure(params)
    c = violation_probability(pmf, 0.0)
    ratio_pmf = c / pmf[b]
    ratio_formula = ratio_sum(b)
    if abs(ratio_pmf - ratio_formula) > ratio_atol * ratio_formula:
        raise ArithmeticError(
            f"ratio mismatch at b={b}: PMF {ratio_pmf!r} vs formula {ratio_formula!r}"
        )
    a = -math.log1p(-pmf[b] / c)
    return SemiAnalyticFit(b, params.g, c, a, ratio_pmf, ratio_formula)


@dataclass(frozen=True, eq=False)
class ViolationCurve:
    """Violation probability and its bounds tabulated on an ``eps`` grid.

    ``bound_semi`` is the fitted ``C exp(-a eps)`` and exists only at ``g = ln2/b``;
    ``bound_sqrt`` is ``C exp(-sqrt(g) eps)`` and exists for every ``g``.
    """

    g: float
    epsilons: np.ndarray
    pr_violation: np.ndarray
    bound_a: np.ndarray
    bound_b: np.ndarray
    bound_sqrt: np.ndarray
    bound_semi: np.ndarray | None = None
    fit: SemiAnalyticFit | None = field(default=None, repr=False)

    def validate(self) -> None:
        """Raise ``ValueError`` if the curve breaks monotonicity, range or the bound chain."""
        pr = self.pr_violation
        if np.any(np.diff(self.epsilons) <= 0):
            raise ValueError("epsilon grid is not strictly ascending")
        if np.any(np.diff(pr) > 0):
            raise ValueError("violation probability increases with epsilon")
        if np.any((pr < 0) | (pr > 1)):
            raise ValueError("violation probability outside [0, 1]")
        if np.any(pr > self.bound_b):
            raise ValueError("violation probability exceeds bound B")
        if np.any(self.bound_b > self.bound_a):
            raise ValueError("bound B exceeds bound A")


def default_epsilons(g: float, step: float = 0.1, eps_max: float | None = None) -> np.ndarray:
    if eps_max is None:
        eps_max = math.ceil(LN2 / g) + 2
    if step <= 0 or eps_max < 0:
        raise DomainError("eps_step must be > 0 and eps_max >= 0")
    n = int(math.floor(eps_max / step + 1e-9))
    # integer multiples keep grid points such as eps = 1 exact
    return np.arange(n + 1) * step


def violation_curve(
    params: ErasureParams,
    eps_max: float | None = None,
    eps_step: float = 0.1,
    pmf: SpinlaborPmf | None = None,
) -> ViolationCurve:
    """Tabulate ``Pr_v(eps)`` against the A, B, fitted and square-root bounds."""
    if params.p_init != 0.5:
        raise DomainError("violation curves are defined for p_init = 1/2")
    g = params.g
    if pmf is None:
        pmf = pmf_full_erasure(params)
    eps = default_epsilons(g, eps_step, eps_max)
    pr = np.array([violation_probability(pmf, e) for e in eps])
    decay = np.exp(-g * eps)
    c = violation_probability(pmf, 0.0)
    fit = None
    semi = None
    b = special_b(g)
    if b is not None:
        fit = semi_analytic_fit(b, params.tail_tol)
        semi = fit(eps)
    return ViolationCurve(
        g=g,
        epsilons=eps,
        pr_violation=pr,
        bound_a=bound_a(g) * decay,
        bound_b=bound_b(pmf) * decay,
        bound_sqrt=c * np.exp(-math.sqrt(g) * eps),
        bound_semi=semi,
        fit=fit,
    )


@dataclass(frozen=True)
class DecayRow:
    b: int
    g: float
    a: float
    a_squared: float


def decay_limit_study(b_list, tail_tol: float = 1e-14) -> list[DecayRow]:
    """Decay rate ``a`` of the fitted bound and ``a**2`` for each ``b`` (``g = ln2/b``)."""
    rows = []
    for b in b_list:
        fit = semi_analytic_fit(b, tail_tol)
        rows.append(DecayRow(fit.b, fit.g, fit.decay_a, fit.decay_a**2))
    return rows


@dataclass(frozen=True)
class DecayTrend:
    ratios: tuple[float, ...]
    monotone_increasing: bool
    final_gap: float


def decay_trend(rows: list[DecayRow]) -> DecayTrend:
    """Summarise how ``a**2 / g`` behaves along increasing ``b``.

    ``final_gap`` is ``|a**2/g - 1|`` at the largest ``b``.
    """
    rows = sorted(rows, key=lambda row: row.b)
    ratios = tuple(row.a_squared / row.g for row in rows)
    mono = all(y > x for x, y in zip(ratios, ratios[1:]))
    return DecayTrend(ratios, mono, abs(ratios[-1] - 1.0))
