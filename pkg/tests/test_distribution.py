import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinerase.core import LN2, DomainError, ErasureParams, mean_spinlabor, q_up, variance_spinlabor
from spinerase.distribution import (
    bernoulli_increments,
    closed_form_full_half,
    closed_form_pm,
    pmf_after_m_cycles,
    pmf_exp_average,
    pmf_full_erasure,
    poisson_binomial,
    SpinlaborPmf,
)

import oracles
from frozen import LN2_PMF, LN2_MEAN, LN2_VARIANCE

G_GRID = sorted({LN2 / b for b in range(1, 17)} | {round(0.05 * k, 10) for k in range(1, 61)})
P_GRID = [0.0, 0.25, 0.5, 1.0]


def test_bernoulli_increments():
    assert bernoulli_increments(ErasureParams(LN2), 1) == [0.5]
    incs = bernoulli_increments(ErasureParams(LN2), 3)
    assert incs == pytest.approx([0.5, 0.2, 1 / 9], abs=1e-15)
    assert bernoulli_increments(ErasureParams(LN2, 0.0), 2) == pytest.approx([0.0, 0.2], abs=1e-15)
    with pytest.raises(DomainError):
        bernoulli_increments(ErasureParams(LN2), 0)


def test_pmf_after_m_cycles_examples():
    pmf = pmf_after_m_cycles(ErasureParams(LN2), 1)
    assert pmf.probs.tolist() == [0.5, 0.5]
    pmf = pmf_after_m_cycles(ErasureParams(LN2), 2)
    # hand convolution of Bern(1/2) and Bern(1/5)
    assert pmf.probs == pytest.approx([0.4, 0.5, 0.1], abs=1e-15)
    pmf = pmf_after_m_cycles(ErasureParams(LN2, 0.0), 2)
    assert pmf.probs == pytest.approx([0.8, 0.2, 0.0], abs=1e-15)
    assert pmf.cycles == 2 and not pmf.converged


def test_full_erasure_matches_oracle():
    pmf = pmf_full_erasure(ErasureParams(LN2))
    assert pmf.converged
    assert pmf.tail_bound < 1e-14
    assert pmf.probs[: len(LN2_PMF)] == pytest.approx(LN2_PMF, abs=1e-14)
    assert pmf.mean == pytest.approx(LN2_MEAN, abs=1e-12)
    assert pmf.variance == pytest.approx(LN2_VARIANCE, abs=1e-12)


def test_full_erasure_frozen_reservoir():
    pmf = pmf_full_erasure(ErasureParams(20.0))
    assert len(pmf) == 2
    assert pmf.probs == pytest.approx([0.5, 0.5], abs=1e-8)


def test_full_erasure_small_gamma_against_mpmath():
    g = LN2 / 8
    ref = oracles.full_pmf(g, 0.5, tol="1e-20", dps=30)
    pmf = pmf_full_erasure(ErasureParams(g))
    n = min(len(ref), len(pmf))
    assert np.max(np.abs(pmf.probs[:n] - np.array([float(x) for x in ref[:n]]))) < 1e-13


@pytest.mark.parametrize("m", range(1, 41))
def test_grid_normalisation_and_moments(m):
    for g in G_GRID:
        for p in P_GRID:
            params = ErasureParams(g, p)
            pmf = pmf_after_m_cycles(params, m)
            assert len(pmf) == m + 1
            assert abs(pmf.total - 1) <= 1e-12
            qs = [q_up(k, g) for k in range(1, m)]
            mean = p + math.fsum(qs)
            var = p * (1 - p) + math.fsum(q * (1 - q) for q in qs)
            assert abs(pmf.mean - mean) <= 1e-12
            assert abs(pmf.variance - var) <= 1e-12


@pytest.mark.parametrize("p", P_GRID)
def test_closed_form_matches_recurrence(p):
    worst = 0.0
    for g in G_GRID:
        params = ErasureParams(g, p)
        for m in range(1, 41):
            pmf = pmf_after_m_cycles(params, m)
            closed = np.array([closed_form_pm(params, m, q) for q in range(m + 1)])
            worst = max(worst, np.max(np.abs(closed - pmf.probs)))
    assert worst <= 1e-12


def test_closed_form_examples():
    r = 0.5
    for p in [0.0, 0.3, 0.5, 1.0]:
        params = ErasureParams(LN2, p)
        assert closed_form_pm(params, 2, 1) == pytest.approx((r * r * (1 - p) + p) / (1 + r * r), abs=1e-15)
    assert closed_form_pm(ErasureParams(LN2), 2, 0) == pytest.approx(0.4, abs=1e-15)
    params = ErasureParams(0.4, 0.7)
    for m in [1, 3, 9]:
        top = 0.7 * math.prod(q_up(k, 0.4) for k in range(1, m))
        assert closed_form_pm(params, m, m) == pytest.approx(top, rel=1e-12)
    assert closed_form_pm(params, 3, 4) == 0.0
    assert closed_form_pm(params, 3, -1) == 0.0


def test_closed_form_full_half_examples():
    norm = math.prod(1 + 2.0**-k for k in range(2, 80))
    assert norm == pytest.approx(1.589487, abs=1e-6)
    assert closed_form_full_half(LN2, 0) == pytest.approx(0.5 / norm, abs=1e-14)
    assert closed_form_full_half(LN2, 1) == pytest.approx(0.75 / norm, abs=1e-14)
    # P(0)/P(1) = 2r/(1+r)
    ratio = closed_form_full_half(LN2, 0) / closed_form_full_half(LN2, 1)
    assert ratio == pytest.approx(2 / 3, rel=1e-14)
    with pytest.raises(DomainError):
        closed_form_full_half(0.0, 1)


def test_closed_form_full_half_matches_full_pmf():
    for g in G_GRID:
        pmf = pmf_full_erasure(ErasureParams(g))
        closed = np.array([closed_form_full_half(g, q) for q in range(len(pmf))])
        assert np.max(np.abs(closed - pmf.probs)) <= 1e-10
        assert abs(math.fsum(closed) - 1) < 1e-10


def test_printed_expression_sums_to_two():
    # the unhalved expression is twice a distribution
    pmf = pmf_full_erasure(ErasureParams(0.5))
    total = math.fsum(2 * closed_form_full_half(0.5, q) for q in range(len(pmf)))
    assert total == pytest.approx(2.0, abs=1e-10)


BRUTE_CASES = [(LN2, 0.5), (0.15, 0.25), (1.7, 1.0), (0.05, 0.0)]


@pytest.mark.parametrize("m", [1, 2, 5, 8])
def test_brute_force_enumeration_mpmath(m):
    for g, p in BRUTE_CASES:
        ref = oracles.enumerate_pmf(oracles.increments(g, p, m, dps=30))
        pmf = pmf_after_m_cycles(ErasureParams(g, p), m)
        assert np.max(np.abs(pmf.probs - np.array([float(x) for x in ref]))) <= 1e-12


@pytest.mark.parametrize("m", [12, 16, 20])
def test_brute_force_enumeration(m):
    for g, p in BRUTE_CASES:
        ref = oracles.enumerate_pmf_fast(oracles.increments(g, p, m))
        pmf = pmf_after_m_cycles(ErasureParams(g, p), m)
        assert np.max(np.abs(pmf.probs - ref)) <= 1e-12


def test_printed_recurrence_variant_differs():
    params = ErasureParams(LN2)
    fixed = pmf_after_m_cycles(params, 6)
    printed = pmf_after_m_cycles(params, 6, printed_recurrence=True)
    assert abs(printed.mean - fixed.mean) > 1e-3
    assert printed.mean == pytest.approx(0.5 + sum(q_up(k, LN2) for k in range(2, 7)), abs=1e-14)
    closed = [closed_form_pm(params, 6, q) for q in range(7)]
    assert np.allclose(closed, fixed.probs, atol=1e-14)
    assert not np.allclose(closed, printed.probs, atol=1e-6)


def test_exp_average():
    pmf = pmf_full_erasure(ErasureParams(LN2))
    ref = math.fsum(p * 2.0**-q for q, p in enumerate(pmf.probs))
    assert pmf_exp_average(pmf, LN2) == pytest.approx(ref, abs=1e-15)
    assert pmf_exp_average(pmf, LN2) == pytest.approx(0.6, abs=1e-12)
    point = SpinlaborPmf(LN2, 0.5, 1, np.array([1.0]))
    assert pmf_exp_average(point, LN2) == 1.0
    one = pmf_after_m_cycles(ErasureParams(LN2), 1)
    assert pmf_exp_average(one, LN2) == pytest.approx(0.75, abs=1e-15)


def test_telescoping_product():
    for g in [0.05, 0.3, LN2, 2.0]:
        r = math.exp(-g)
        prod = 1.0
        for k in range(1, 3000):
            q = q_up(k, g)
            prod *= (1 - q) + q * r
        assert prod == pytest.approx(1 / (1 + r * r), abs=1e-12)


def test_full_mean_matches_core():
    for g in G_GRID:
        for p in P_GRID:
            params = ErasureParams(g, p)
            pmf = pmf_full_erasure(params)
            assert abs(pmf.mean - mean_spinlabor(params)) <= 1e-10
            assert abs(pmf.variance - variance_spinlabor(params)) <= 1e-10
            assert 1 - pmf.tail_bound - 1e-12 <= pmf.total <= 1 + 1e-12


def test_degenerate_initial_states_shift():
    g = 0.8
    down = pmf_full_erasure(ErasureParams(g, 0.0))
    up = pmf_full_erasure(ErasureParams(g, 1.0))
    assert up.probs[0] == 0.0
    n = min(len(down), len(up) - 1)
    assert np.allclose(up.probs[1 : n + 1], down.probs[:n], atol=1e-16)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.02, 5.0),
    st.floats(0.0, 1.0),
    st.integers(1, 60),
)
def test_pmf_is_distribution(g, p, m):
    pmf = pmf_after_m_cycles(ErasureParams(g, p), m)
    assert np.all(pmf.probs >= 0)
    assert abs(pmf.total - 1) <= 1e-12
    pmf.validate()


def test_poisson_binomial_trivial():
    assert poisson_binomial([]).tolist() == [1.0]
    assert poisson_binomial([1.0, 1.0]).tolist() == [0.0, 0.0, 1.0]


def test_pmf_getitem_outside_support():
    pmf = pmf_after_m_cycles(ErasureParams(LN2), 2)
    assert pmf[-1] == 0.0 and pmf[3] == 0.0
    assert pmf.as_dict()[1] == pytest.approx(0.5)
