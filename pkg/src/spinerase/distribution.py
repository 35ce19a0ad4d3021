"""Exact spinlabor distributions.

Every CNOT costs either 0 or 1 quantum and, because each equilibration
resamples the memory spin independently of its history, the per-cycle costs
are independent Bernoulli variables. The total spinlabor after ``m`` cycles is
therefore Poisson-binomial with success probabilities
``[p, q_up(1), ..., q_up(m - 1)]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    LN2,
    DomainError,
    ErasureParams,
    NonConvergenceError,
    _check_positive_g,
    cycle_up_probabilities,
    q_up,
    tail_mass_bound,
    truncation_cycles,
)


@dataclass(frozen=True, eq=False)
class SpinlaborPmf:
    """Probability mass function over integer spinlabor quanta ``q = 0, 1, 2, ...``.

    ``cycles`` is the number of protocol cycles for a finite run and ``None``
    for the converged full-erasure limit. ``tail_bound`` bounds the probability
    mass that is missing because the infinite cycle product was truncated.
    """

    g: float
    p_init: float
    cycles: int | None
    probs: np.ndarray = field(repr=False)
    tail_bound: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def converged(self) -> bool:
        return self.cycles is None

    @property
    def support(self) -> np.ndarray:
        return np.arange(len(self.probs))

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, q: int) -> float:
        if q < 0 or q >= len(self.probs):
            return 0.0
        return float(self.probs[q])

    @property
    def total(self) -> float:
        return math.fsum(self.probs)

    @property
    def mean(self) -> float:
        return math.fsum(self.support * self.probs)

    @property
    def variance(self) -> float:
        q = self.support
        mu = self.mean
        return math.fsum((q - mu) ** 2 * self.probs)

    def as_dict(self) -> dict[int, float]:
        return {int(q): float(p) for q, p in enumerate(self.probs)}

    def validate(self, atol: float = 1e-12) -> None:
        """Raise ``ValueError`` unless the mass function is a (sub)normalised distribution."""
        if np.any(self.probs < 0):
            raise ValueError("negative probability in spinlabor PMF")
        total = self.total
        if not (1.0 - self.tail_bound - atol <= total <= 1.0 + atol):
            raise ValueError(f"PMF total {total!r} outside [1 - tail_bound, 1]")


def bernoulli_increments(params: ErasureParams, m: int) -> list[float]:
    """Cost probabilities of the first ``m`` CNOTs: ``[p, q_up(1), ..., q_up(m-1)]``."""
    if int(m) != m or m < 1:
        raise DomainError(f"number of cycles must be an integer >= 1, got {m!r}")
    return [params.p_init] + cycle_up_probabilities(params.g, int(m) - 1)


def poisson_binomial(probs) -> np.ndarray:
    """Exact PMF of a sum of independent Bernoulli variables by direct convolution."""
    out = np.ones(1)
    for p in probs:
        nxt = np.empty(len(out) + 1)
        nxt[:-1] = out * (1.0 - p)
        nxt[-1] = 0.0
        nxt[1:] += out * p
        out = nxt
    return out


def pmf_after_m_cycles(params: ErasureParams, m: int, printed_recurrence: bool = False) -> SpinlaborPmf:
    """Spinlabor PMF after ``m`` cycles.

    Implements ``P_{k+1}(n) = (1 - q_up(k)) P_k(n) + q_up(k) P_k(n - 1)`` from
    ``P_1 = {0: 1 - p, 1: p}``. With ``printed_recurrence=True`` the step uses
    ``q_up(k + 1)`` instead; that variant does not reproduce the closed form
    or the mean cost and is kept for comparison only.
    """
    incs = bernoulli_increments(params, m)
    if printed_recurrence:
        incs = [params.p_init] + [q_up(k + 1, params.g) for k in range(1, int(m))]
    return SpinlaborPmf(params.g, params.p_init, int(m), poisson_binomial(incs))


def pmf_full_erasure(params: ErasureParams) -> SpinlaborPmf:
    """Converged spinlabor PMF of a complete erasure.

    The cycle product is cut where the analytic geometric tail drops below
    ``params.tail_tol``; trailing bins below ``tail_tol * 1e-2`` are dropped.
    """
    if not params.g > 0:
        raise NonConvergenceError("full erasure requires g > 0")
    n = params.n_terms
    probs = poisson_binomial(bernoulli_increments(params, n + 1))
    cutoff = params.tail_tol * 1e-2
    keep = np.nonzero(probs > cutoff)[0]
    last = int(keep[-1]) if len(keep) else 0
    probs = probs[: last + 1]
    return SpinlaborPmf(params.g, params.p_init, None, probs, tail_mass_bound(params.g, n))


def closed_form_pm(params: ErasureParams, m: int, q: int) -> float:
    """Closed-form ``P_m(q)``.

    ``P_m(0) = (1 - p) / prod_{k=2}^{m} (1 + r^k)`` and, for ``1 <= q <= m``,
    ``P_m(q) = [(1 - p) prod_{j<=q} a_j + p prod_{j<q} a_j] / prod_{k=2}^{m} (1 + r^k)``
    with ``a_j = (r^(j+1) - r^(m+1)) / (1 - r^j)``.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"number of cycles must be an integer >= 1, got {m!r}")
    m, q = int(m), int(q)
    if q < 0 or q > m:
        return 0.0
    g, p = params.g, params.p_init
    log_norm = math.fsum(math.log1p(math.exp(-k * g)) for k in range(2, m + 1))
    if q == 0:
        return (1.0 - p) * math.exp(-log_norm)
    # r^(j+1) - r^(m+1) = r^(j+1) * (1 - r^(m-j)), written to avoid cancellation
    log_a = [
        -(j + 1) * g + math.log(-math.expm1(-(m - j) * g)) - math.log(-math.expm1(-j * g))
        if j < m
        else -math.inf
        for j in range(1, q + 1)
    ]
    head = math.fsum(log_a[:-1])
    upper = 0.0 if q == m else math.exp(head + log_a[-1] - log_norm)
    return (1.0 - p) * upper + p * math.exp(head - log_norm)


def _log_infinite_norm(g: float, tail_tol: float) -> float:
    """``log prod_{k>=2} (1 + r^k)``, truncated by the tail rule."""
    n = truncation_cycles(g, tail_tol)
    return math.fsum(math.log1p(math.exp(-k * g)) for k in range(2, n + 2))


def closed_form_full_half(g: float, q: int, tail_tol: float = 1e-14) -> float:
    """Closed-form full-erasure PMF for an initially maximally mixed memory (``p = 1/2``).

    ``P(0) = (1/2) / N`` and ``P(q) = (1/2) prod_{j<=q} r^j / (1 - r^j) * (1 - r^q (1 - r)) / r / N``
    with ``N = prod_{k>=2} (1 + r^k)``.
    """
    g = _check_positive_g(g)
    if int(q) != q or q < 0:
        return 0.0
    q = int(q)
    log_norm = _log_infinite_norm(g, tail_tol)
    if q == 0:
        return 0.5 * math.exp(-log_norm)
    j = np.arange(1, q + 1)
    log_prod = math.fsum(-j * g - np.log(-np.expm1(-j * g)))
    last = math.log1p(-math.exp(-q * g) * -math.expm1(-g)) + g
    return 0.5 * math.exp(log_prod + last - log_norm)


def pmf_exp_average(pmf: SpinlaborPmf, g: float) -> float:
    """``sum_q P(q) exp(-g q)``."""
    return math.fsum(pmf.probs * np.exp(-g * pmf.support))
