"""Units, protocol parameters and closed-form moments of the spin erasure protocol.

Angular momentum is measured in quanta of hbar (hbar = 1). The only protocol
parameter that enters any quantity is the dimensionless inverse spin
temperature ``g = gamma * hbar``. Exact bookkeeping (the first-law ledger) is
kept in integer half-quanta so that spin-1/2 offsets stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

LN2 = math.log(2.0)
DEFAULT_TAIL_TOL = 1e-14


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class NonConvergenceError(DomainError):
    """Full erasure was requested for parameters where it does not converge."""


def _check_finite(g: float, name: str = "g") -> float:
    g = float(g)
    if not math.isfinite(g):
        raise DomainError(f"{name} must be finite, got {g!r}")
    return g


def _check_positive_g(g: float) -> float:
    g = _check_finite(g)
    if g <= 0.0:
        raise DomainError(f"g must be > 0, got {g!r}")
    return g


def gamma_from_alpha(alpha: float) -> float:
    """Inverse spin temperature ``ln((1 - alpha) / alpha)`` of a reservoir with up-fraction ``alpha``."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    # log1p keeps the antisymmetry g(1 - alpha) = -g(alpha) tight near alpha -> 1/2
    return math.log1p(-alpha) - math.log(alpha)


def alpha_from_gamma(g: float) -> float:
    """Reservoir up-fraction ``r / (1 + r)`` with ``r = exp(-g)``."""
    g = _check_finite(g)
    if g >= 0.0:
        r = math.exp(-g)
        return r / (1.0 + r)
    return 1.0 / (1.0 + math.exp(g))


def ratio_r(g: float) -> float:
    """Boltzmann-like ratio ``r = exp(-g)``."""
    return math.exp(-_check_finite(g))


def q_up(m: int, g: float) -> float:
    """Probability the memory spin is up after the equilibration of cycle ``m``.

    Equals ``r**(m+1) / (1 + r**(m+1))``: the aligned block of ``m + 1`` spins
    (memory plus ``m`` ancillas) equilibrates with the reservoir as a unit.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"cycle index m must be an integer >= 1, got {m!r}")
    g = _check_positive_g(g)
    x = math.exp(-(int(m) + 1) * g)
    return x / (1.0 + x)


def vb_bound(g: float) -> float:
    """Asymptotic erasure cost ``ln 2 / g`` in quanta."""
    return LN2 / _check_positive_g(g)


def truncation_cycles(g: float, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    """Number of cycle probabilities ``q_up(1..m)`` kept by the tail rule.

    Returns the first ``m >= 0`` with ``sum_{k>m} r**(k+1) = r**(m+2) / (1 - r) < tail_tol``.
    Since ``q_up(k) < r**(k+1)``, the neglected mass and mean are both below ``tail_tol``.
    """
    g = _check_positive_g(g)
    if not 0.0 < tail_tol <= 1e-6:
        raise DomainError(f"tail_tol must lie in (0, 1e-6], got {tail_tol!r}")
    log_r = -g
    log_one_minus_r = math.log(-math.expm1(-g))
    log_tol = math.log(tail_tol)
    # closed-form guess, then walk to the exact first index
    m = max(0, math.ceil((log_tol + log_one_minus_r) / log_r) - 2)
    while m > 0 and (m + 1) * log_r - log_one_minus_r < log_tol:
        m -= 1
    while (m + 2) * log_r - log_one_minus_r >= log_tol:
        m += 1
    return m


def tail_mass_bound(g: float, m: int) -> float:
    """Analytic bound ``r**(m+2) / (1 - r)`` on ``sum_{k>m} q_up(k)``."""
    g = _check_positive_g(g)
    return math.exp(-(m + 2) * g) / -math.expm1(-g)


@dataclass(frozen=True)
class ErasureParams:
    """Protocol configuration.

    Parameters
    ----------
    g : float
        Dimensionless inverse spin temperature ``gamma * hbar``, strictly positive.
    p_init : float
        Initial probability that the memory spin is up.
    tail_tol : float
        Truncation tolerance for the infinite cycle sums.
    """

    g: float
    p_init: float = 0.5
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        g = _check_positive_g(self.g)
        object.__setattr__(self, "g", g)
        p = float(self.p_init)
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"p_init must lie in [0, 1], got {self.p_init!r}")
        object.__setattr__(self, "p_init", p)
        tol = float(self.tail_tol)
        if not 0.0 < tol <= 1e-6:
            raise DomainError(f"tail_tol must lie in (0, 1e-6], got {self.tail_tol!r}")
        object.__setattr__(self, "tail_tol", tol)

    @classmethod
    def from_alpha(cls, alpha: float, p_init: float = 0.5, tail_tol: float = DEFAULT_TAIL_TOL):
        return cls(gamma_from_alpha(alpha), p_init, tail_tol)

    @classmethod
    def from_b(cls, b: int, p_init: float = 0.5, tail_tol: float = DEFAULT_TAIL_TOL):
        """Special inverse temperature ``g = ln2 / b`` at which the VB cost is ``b`` quanta."""
        if int(b) != b or b < 1:
            raise DomainError(f"b must be a positive integer, got {b!r}")
        return cls(LN2 / int(b), p_init, tail_tol)

    @property
    def alpha(self) -> float:
        return alpha_from_gamma(self.g)

    @property
    def r(self) -> float:
        return math.exp(-self.g)

    @property
    def n_terms(self) -> int:
        """Number of ``q_up`` terms kept for full erasure."""
        return truncation_cycles(self.g, self.tail_tol)


def cycle_up_probabilities(g: float, m_max: int) -> list[float]:
    """``[q_up(1, g), ..., q_up(m_max, g)]``."""
    return [q_up(m, g) for m in range(1, m_max + 1)]


def mean_spinlabor(params: ErasureParams) -> float:
    """Mean full-erasure spinlabor ``p + sum_m q_up(m)`` in quanta."""
    qs = cycle_up_probabilities(params.g, params.n_terms)
    return params.p_init + math.fsum(qs)


def variance_spinlabor(params: ErasureParams) -> float:
    """Variance of the full-erasure spinlabor (independent Bernoulli increments)."""
    p = params.p_init
    qs = cycle_up_probabilities(params.g, params.n_terms)
    return p * (1.0 - p) + math.fsum(q * (1.0 - q) for q in qs)


def spintherm_from_spinlabor(spinlabor: float, p_init: float = 0.5) -> float:
    """Spintherm absorbed by the memory-ancilla system, ``-(L_s + p)``.

    The memory's mean initial J_z offset above the erased state is ``p`` quanta,
    so erasure removes ``L_s + p`` quanta of spintherm. ``p = 1/2`` gives the
    familiar ``-Q_s = L_s + hbar/2``.
    """
    if spinlabor < 0:
        raise DomainError(f"spinlabor must be >= 0, got {spinlabor!r}")
    if not 0.0 <= p_init <= 1.0:
        raise DomainError(f"p_init must lie in [0, 1], got {p_init!r}")
    return -(spinlabor + p_init)


@dataclass(frozen=True)
class FirstLawLedger:
    """Exact spin first-law bookkeeping for one trajectory, in half-quanta."""

    spinlabor_halfquanta: int
    spintherm_halfquanta: int
    delta_jz_memory_ancilla_halfquanta: int

    @property
    def balanced(self) -> bool:
        return (
            self.delta_jz_memory_ancilla_halfquanta
            == self.spinlabor_halfquanta + self.spintherm_halfquanta
        )

    @property
    def spinlabor(self) -> float:
        return self.spinlabor_halfquanta / 2

    @property
    def spintherm(self) -> float:
        return self.spintherm_halfquanta / 2

    @property
    def delta_jz(self) -> float:
        return self.delta_jz_memory_ancilla_halfquanta / 2
