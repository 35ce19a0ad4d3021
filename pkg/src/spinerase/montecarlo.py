"""Stochastic simulation of the erasure protocol.

Each trajectory starts with the memory spin up with probability ``p``. Cycle
``m`` applies a CNOT onto a fresh spin-down ancilla (cost 1 quantum when the
memory is up, which aligns the block of ``m + 1`` spins) and then lets the
block equilibrate with an infinite reservoir, leaving it up with probability
``q_up(m)``. Reservoir back-action on ``g`` is neglected.

Bookkeeping is exact in half-quanta. Every ancilla the run will use is counted
as part of the memory-ancilla system from the start, so
``delta_jz = spinlabor + spintherm`` holds as an integer identity.

Randomness
----------
Ensembles are split into fixed blocks of :data:`BLOCK_SIZE` trajectories.
Block ``i`` draws from ``PCG64(SeedSequence(master_seed, spawn_key=(i,)))``,
the same mixing numpy applies when spawning child seeds, so results depend
only on ``(params, n_samples, master_seed)`` and never on worker count or
completion order. All accumulators are integers, so merging is exact.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import (
    DomainError,
    ErasureParams,
    FirstLawLedger,
    _check_finite,
    alpha_from_gamma,
    q_up,
)
from .distribution import SpinlaborPmf, pmf_after_m_cycles

BLOCK_SIZE = 1 << 16


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class StopRule:
    """Number of cycles to run: until ``q_up(m) < q_up_threshold``, capped at ``max_cycles``."""

    max_cycles: int | None = None
    q_up_threshold: float | None = None

    def n_cycles(self, g: float) -> int:
        if self.max_cycles is None and not (self.q_up_threshold and self.q_up_threshold > 0):
            raise ConfigurationError("stop rule needs max_cycles or a positive q_up_threshold")
        if self.max_cycles is not None and self.max_cycles < 1:
            raise ConfigurationError("max_cycles must be >= 1")
        cap = self.max_cycles if self.max_cycles is not None else math.inf
        if self.q_up_threshold is None:
            return int(cap)
        m = 1
        while m < cap and q_up(m, g) >= self.q_up_threshold:
            m += 1
        return m

    @classmethod
    def for_params(cls, params: ErasureParams, max_cycles: int | None = None):
        """Default rule: stop once ``q_up`` drops below the parameter tail tolerance."""
        return cls(max_cycles, params.tail_tol)


@dataclass(frozen=True)
class CycleRecord:
    cnot_cost_quanta: int
    pre_equilibration_up: bool
    post_equilibration_up: bool


@dataclass(frozen=True)
class TrajectoryRecord:
    seed: int
    cycles_run: int
    initial_up: bool
    per_cycle: tuple[CycleRecord, ...]
    ledger: FirstLawLedger

    @property
    def spinlabor(self) -> int:
        return sum(c.cnot_cost_quanta for c in self.per_cycle)

    @property
    def finished(self) -> bool:
        """True when the memory ended spin-down, i.e. the bit was erased."""
        return not self.per_cycle[-1].post_equilibration_up

    def per_cycle_spintherm(self) -> list[int]:
        """Spintherm of each equilibration in whole quanta: ``-(m+1)``, ``0`` or ``m+1``."""
        return [
            (m + 1) * (int(c.post_equilibration_up) - int(c.pre_equilibration_up))
            for m, c in enumerate(self.per_cycle, start=1)
        ]


def _run_block(rng, g, p, n, n_cycles, record=False):
    """Vectorised protocol over ``n`` trajectories.

    Returns initial state, final state, spinlabor and spintherm (half-quanta)
    and, when ``record`` is set, the per-cycle pre/post states.
    """
    qs = np.array([q_up(m, g) for m in range(1, n_cycles + 1)])
    s0 = rng.random(n) < p
    up = s0.copy()
    labor = np.zeros(n, dtype=np.int64)
    therm = np.zeros(n, dtype=np.int64)
    pre = post = None
    if record:
        pre = np.empty((n_cycles, n), dtype=bool)
        post = np.empty((n_cycles, n), dtype=bool)
    for i in range(n_cycles):
        m = i + 1
        labor += 2 * up
        new = rng.random(n) < qs[i]
        therm += 2 * (m + 1) * (new.astype(np.int64) - up)
        if record:
            pre[i] = up
            post[i] = new
        up = new
    return s0, up, labor, therm, pre, post


def _delta_jz_halfquanta(s0, s_final, n_cycles):
    """Endpoint change of J_z over memory plus ``n_cycles`` ancillas, in half-quanta."""
    s0 = np.asarray(s0, dtype=np.int64)
    s_final = np.asarray(s_final, dtype=np.int64)
    initial = (2 * s0 - 1) - n_cycles
    final = (n_cycles + 1) * (2 * s_final - 1)
    return final - initial


def simulate_trajectory(params: ErasureParams, seed: int, stop_rule: StopRule | None = None) -> TrajectoryRecord:
    """Run one erasure and return its per-cycle record and first-law ledger."""
    if stop_rule is None:
        stop_rule = StopRule.for_params(params)
    n_cycles = stop_rule.n_cycles(params.g)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    s0, up, labor, therm, pre, post = _run_block(rng, params.g, params.p_init, 1, n_cycles, record=True)
    cycles = tuple(
        CycleRecord(int(pre[i, 0]), bool(pre[i, 0]), bool(post[i, 0])) for i in range(n_cycles)
    )
    djz = int(_delta_jz_halfquanta(s0, up, n_cycles)[0])
    ledger = FirstLawLedger(int(labor[0]), int(therm[0]), djz)
    return TrajectoryRecord(seed, n_cycles, bool(s0[0]), cycles, ledger)


@dataclass(frozen=True, eq=False)
class EnsembleSummary:
    """Integer accumulators of a Monte Carlo ensemble plus derived statistics.

    ``counts[q]`` is the number of trajectories with spinlabor ``q``; the
    empirical PMF is ``counts / n_samples``. Spintherm and ``delta_jz`` sums are
    in half-quanta.
    """

    g: float
    p_init: float
    cycles_run: int
    n_samples: int
    counts: np.ndarray = field(repr=False)
    spintherm_sum: int
    spintherm_sq_sum: int
    delta_jz_sum: int
    delta_jz_sq_sum: int
    ledger_violations: int
    unfinished: int

    @property
    def empirical_pmf(self) -> dict[int, float]:
        return {int(q): c / self.n_samples for q, c in enumerate(self.counts) if c}

    def _moments(self, s1: int, s2: int, scale: float = 1.0):
        n = self.n_samples
        mean = s1 / n
        var = (s2 - s1 * s1 / n) / (n - 1) if n > 1 else 0.0
        return mean * scale, math.sqrt(max(var, 0.0) / n) * scale

    def _labor_sums(self):
        q = np.arange(len(self.counts), dtype=object)
        c = self.counts.astype(object)
        return int(np.sum(q * c)), int(np.sum(q * q * c))

    @property
    def mean_spinlabor(self) -> float:
        return self._moments(*self._labor_sums())[0]

    @property
    def mean_spintherm(self) -> float:
        return self._moments(self.spintherm_sum, self.spintherm_sq_sum, 0.5)[0]

    @property
    def standard_errors(self) -> dict[str, float]:
        """Standard errors of the ensemble means, in quanta."""
        removed = self._removed_sums()
        return {
            "spinlabor": self._moments(*self._labor_sums())[1],
            "spintherm": self._moments(self.spintherm_sum, self.spintherm_sq_sum, 0.5)[1],
            "delta_jz": self._moments(self.delta_jz_sum, self.delta_jz_sq_sum, 0.5)[1],
            "spintherm_excess": self._moments(*removed, 0.5)[1],
        }

    def _removed_sums(self):
        # -Q_s - L_s = -delta_jz per trajectory (half-quanta)
        return -self.delta_jz_sum, self.delta_jz_sq_sum

    @property
    def mean_delta_jz(self) -> float:
        return self.delta_jz_sum / self.n_samples / 2

    @property
    def mean_spintherm_excess(self) -> float:
        """Mean of ``-Q_s - L_s`` in quanta."""
        return -self.delta_jz_sum / self.n_samples / 2

    def exp_average(self, g: float | None = None) -> tuple[float, float]:
        """Empirical ``<exp(-g L)>`` and its standard error."""
        g = self.g if g is None else g
        w = np.exp(-g * np.arange(len(self.counts)))
        c = self.counts.astype(float)
        n = self.n_samples
        mean = math.fsum(w * c) / n
        second = math.fsum(w * w * c) / n
        var = (second - mean * mean) * n / (n - 1) if n > 1 else 0.0
        return mean, math.sqrt(max(var, 0.0) / n)

    def merge(self, other: EnsembleSummary) -> EnsembleSummary:
        if (self.g, self.p_init, self.cycles_run) != (other.g, other.p_init, other.cycles_run):
            raise ValueError("cannot merge ensembles with different parameters")
        size = max(len(self.counts), len(other.counts))
        counts = np.zeros(size, dtype=np.int64)
        counts[: len(self.counts)] += self.counts
        counts[: len(other.counts)] += other.counts
        return EnsembleSummary(
            self.g,
            self.p_init,
            self.cycles_run,
            self.n_samples + other.n_samples,
            counts,
            self.spintherm_sum + other.spintherm_sum,
            self.spintherm_sq_sum + other.spintherm_sq_sum,
            self.delta_jz_sum + other.delta_jz_sum,
            self.delta_jz_sq_sum + other.delta_jz_sq_sum,
            self.ledger_violations + other.ledger_violations,
            self.unfinished + other.unfinished,
        )


def block_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def _simulate_block(params: ErasureParams, n_cycles: int, master_seed: int, index: int, n: int):
    rng = np.random.Generator(np.random.PCG64(block_seed(master_seed, index)))
    s0, up, labor, therm, _, _ = _run_block(rng, params.g, params.p_init, n, n_cycles)
    djz = _delta_jz_halfquanta(s0, up, n_cycles)
    violations = int(np.count_nonzero(djz != labor + therm))
    counts = np.bincount(labor // 2)
    therm_o = therm.astype(object)
    djz_o = djz.astype(object)
    return EnsembleSummary(
        params.g,
        params.p_init,
        n_cycles,
        n,
        counts.astype(np.int64),
        int(therm_o.sum()),
        int((therm_o * therm_o).sum()),
        int(djz_o.sum()),
        int((djz_o * djz_o).sum()),
        violations,
        int(np.count_nonzero(up)),
    )


def simulate_ensemble(
    params: ErasureParams,
    n_samples: int,
    master_seed: int,
    stop_rule: StopRule | None = None,
    workers: int = 1,
) -> EnsembleSummary:
    """Simulate ``n_samples`` independent erasures and reduce them to an :class:`EnsembleSummary`."""
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    if stop_rule is None:
        stop_rule = StopRule.for_params(params)
    n_cycles = stop_rule.n_cycles(params.g)
    sizes = [BLOCK_SIZE] * (n_samples // BLOCK_SIZE)
    if n_samples % BLOCK_SIZE:
        sizes.append(n_samples % BLOCK_SIZE)

    def job(i):
        return _simulate_block(params, n_cycles, master_seed, i, sizes[i])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total


def exact_pmf_for(ensemble: EnsembleSummary, tail_tol: float = 1e-14) -> SpinlaborPmf:
    """Exact spinlabor PMF for the cycle count the ensemble actually ran."""
    params = ErasureParams(ensemble.g, ensemble.p_init, tail_tol)
    return pmf_after_m_cycles(params, ensemble.cycles_run)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    n_bins: int


def chi_square_vs_exact(ensemble: EnsembleSummary, pmf: SpinlaborPmf, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson chi-square of the empirical counts against an exact PMF.

    Consecutive bins are pooled from the upper tail until each has expected
    count ``>= min_expected``; the remaining tail mass joins the last bin.
    """
    n = ensemble.n_samples
    size = max(len(ensemble.counts), len(pmf.probs))
    obs = np.zeros(size)
    obs[: len(ensemble.counts)] = ensemble.counts
    exp = np.zeros(size)
    exp[: len(pmf.probs)] = pmf.probs
    exp = exp / exp.sum() * n
    obs_bins, exp_bins = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(obs, exp):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc or o_acc:
        if obs_bins:
            obs_bins[-1] += o_acc
            exp_bins[-1] += e_acc
        else:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
    if len(obs_bins) < 2:
        return ChiSquareResult(0.0, 0, 1.0, len(obs_bins))
    stat, pval = stats.chisquare(obs_bins, exp_bins)
    return ChiSquareResult(float(stat), len(obs_bins) - 1, float(pval), len(obs_bins))


@dataclass(frozen=True)
class LedgerReport:
    n_samples: int
    ledger_violations: int
    unfinished: int
    mean_delta_jz: float
    delta_jz_se: float
    expected_delta_jz: float
    mean_spintherm_excess: float
    spintherm_excess_se: float
    expected_spintherm_excess: float
    z_limit: float

    @property
    def delta_jz_ok(self) -> bool:
        return abs(self.mean_delta_jz - self.expected_delta_jz) <= self.z_limit * self.delta_jz_se

    @property
    def spintherm_excess_ok(self) -> bool:
        return (
            abs(self.mean_spintherm_excess - self.expected_spintherm_excess)
            <= self.z_limit * self.spintherm_excess_se
        )

    @property
    def passed(self) -> bool:
        return (
            self.ledger_violations == 0
            and self.unfinished == 0
            and self.delta_jz_ok
            and self.spintherm_excess_ok
        )


def ledger_check(ensemble: EnsembleSummary, z_limit: float = 4.0) -> LedgerReport:
    """Check the spin first law on an ensemble.

    The mean memory-ancilla J_z change should be ``-p`` quanta and the spintherm
    removed should exceed the spinlabor by ``p`` quanta on average. A degenerate
    ensemble (zero standard error) must match exactly.
    """
    p = ensemble.p_init
    se = ensemble.standard_errors
    # the analytic SE of a Bernoulli(p) indicator guards against an all-equal sample
    se_bern = math.sqrt(p * (1 - p) / ensemble.n_samples)
    return LedgerReport(
        n_samples=ensemble.n_samples,
        ledger_violations=ensemble.ledger_violations,
        unfinished=ensemble.unfinished,
        mean_delta_jz=ensemble.mean_delta_jz,
        delta_jz_se=max(se["delta_jz"], se_bern),
        expected_delta_jz=-p,
        mean_spintherm_excess=ensemble.mean_spintherm_excess,
        spintherm_excess_se=max(se["spintherm_excess"], se_bern),
        expected_spintherm_excess=p,
        z_limit=z_limit,
    )


def sample_reservoir_up_count(N: int, g: float, seed, size=None):
    """Number of up spins in an ``N``-spin reservoir at inverse spin temperature ``g``.

    The weight of ``n`` up spins is ``C(N, n) exp(-g n)``, i.e. Binomial(N, alpha).
    """
    if int(N) != N or N < 1:
        raise DomainError(f"N must be an integer >= 1, got {N!r}")
    g = _check_finite(g)
    rng = np.random.default_rng(seed)
    return rng.binomial(int(N), alpha_from_gamma(g), size=size)
