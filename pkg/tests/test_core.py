import math

import pytest
from hypothesis import assume, given, strategies as st

from spinerase.core import (
    LN2,
    DomainError,
    ErasureParams,
    FirstLawLedger,
    alpha_from_gamma,
    gamma_from_alpha,
    mean_spinlabor,
    q_up,
    spintherm_from_spinlabor,
    tail_mass_bound,
    truncation_cycles,
    variance_spinlabor,
    vb_bound,
)

from frozen import LN2_MEAN, LN2_VARIANCE


@pytest.mark.parametrize(
    "alpha, g",
    [(0.5, 0.0), (1 / 3, math.log(2)), (0.2, math.log(4))],
)
def test_gamma_from_alpha(alpha, g):
    assert gamma_from_alpha(alpha) == pytest.approx(g, abs=1e-15)


@pytest.mark.parametrize(
    "g, alpha",
    [(0.0, 0.5), (math.log(2), 1 / 3), (math.log(4), 0.2)],
)
def test_alpha_from_gamma(g, alpha):
    assert alpha_from_gamma(g) == pytest.approx(alpha, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_gamma_from_alpha_domain(alpha):
    with pytest.raises(DomainError):
        gamma_from_alpha(alpha)


@pytest.mark.parametrize("g", [float("inf"), float("-inf"), float("nan")])
def test_alpha_from_gamma_domain(g):
    with pytest.raises(DomainError):
        alpha_from_gamma(g)


@given(st.floats(1e-6, 1 - 1e-6))
def test_alpha_gamma_roundtrip(alpha):
    assert alpha_from_gamma(gamma_from_alpha(alpha)) == pytest.approx(alpha, abs=1e-12)


@given(st.floats(0, 13))
def test_gamma_alpha_roundtrip(g):
    assert gamma_from_alpha(alpha_from_gamma(g)) == pytest.approx(g, abs=1e-12)


@given(st.floats(1e-6, 1 - 1e-6))
def test_gamma_antisymmetry(alpha):
    # 1 - alpha is rounded; compare against the alpha it actually represents
    mirrored = 1 - alpha
    assert gamma_from_alpha(mirrored) == pytest.approx(-gamma_from_alpha(1 - mirrored), abs=1e-12)


@given(st.floats(1e-6, 0.49), st.floats(1e-6, 0.49))
def test_gamma_strictly_decreasing(a1, a2):
    if a1 < a2:
        assert gamma_from_alpha(a1) > gamma_from_alpha(a2)


def test_q_up_examples():
    assert q_up(1, LN2) == pytest.approx(0.2, abs=1e-15)
    assert q_up(2, LN2) == pytest.approx(1 / 9, abs=1e-15)
    seq = [q_up(m, 0.3) for m in range(1, 400)]
    assert all(b < a for a, b in zip(seq, seq[1:]))
    assert seq[-1] < 1e-50


@pytest.mark.parametrize("m, g", [(0, 1.0), (-1, 1.0), (1.5, 1.0), (1, 0.0), (1, -0.5)])
def test_q_up_domain(m, g):
    with pytest.raises(DomainError):
        q_up(m, g)


@given(st.integers(1, 200), st.floats(1e-3, 20), st.floats(1e-3, 5))
def test_q_up_bounds_and_monotone(m, g, dg):
    assume((m + 2) * (g + dg) < 700)  # stay clear of double underflow
    q = q_up(m, g)
    assert 0 < q < 0.5
    assert q_up(m + 1, g) < q
    assert q_up(m, g + dg) < q


@pytest.mark.parametrize("g, expected", [(LN2, 1.0), (LN2 / 4, 4.0), (LN2 / 64, 64.0)])
def test_vb_bound(g, expected):
    assert vb_bound(g) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("g", [0.0, -1.0])
def test_vb_bound_domain(g):
    with pytest.raises(DomainError):
        vb_bound(g)


def test_truncation_rule_is_first_index():
    for g in [0.01, 0.05, 0.3, LN2, 3.0, 20.0]:
        for tol in [1e-14, 1e-10, 1e-7]:
            m = truncation_cycles(g, tol)
            assert tail_mass_bound(g, m) < tol
            if m > 0:
                assert tail_mass_bound(g, m - 1) >= tol


def test_params_validation():
    with pytest.raises(DomainError):
        ErasureParams(0.0)
    with pytest.raises(DomainError):
        ErasureParams(1.0, p_init=1.1)
    with pytest.raises(DomainError):
        ErasureParams(1.0, tail_tol=1e-3)
    p = ErasureParams.from_alpha(1 / 3)
    assert p.g == pytest.approx(LN2, abs=1e-12)
    assert abs(p.alpha - 1 / 3) < 1e-12
    assert ErasureParams.from_b(4).g == LN2 / 4


def test_mean_spinlabor():
    assert mean_spinlabor(ErasureParams(LN2)) == pytest.approx(LN2_MEAN, abs=1e-12)
    assert mean_spinlabor(ErasureParams(60.0)) == 0.5
    assert mean_spinlabor(ErasureParams(60.0, p_init=0.0)) == 0.0
    # the mean lies below ln2/g at this temperature
    assert mean_spinlabor(ErasureParams(LN2)) < vb_bound(LN2)


def test_variance_spinlabor():
    assert variance_spinlabor(ErasureParams(LN2)) == pytest.approx(LN2_VARIANCE, abs=1e-12)
    assert variance_spinlabor(ErasureParams(60.0)) == 0.25
    assert variance_spinlabor(ErasureParams(60.0, p_init=1.0)) == 0.0


def test_mean_by_direct_summation():
    # direct summation far past the truncation point
    g, p = 0.37, 0.3
    direct = p + math.fsum(q_up(m, g) for m in range(1, 2000))
    assert mean_spinlabor(ErasureParams(g, p)) == pytest.approx(direct, abs=1e-13)


@pytest.mark.parametrize(
    "labor, p, expected",
    [(1.0, 0.5, -1.5), (0.0, 0.5, -0.5), (LN2_MEAN, 0.5, -(LN2_MEAN + 0.5)), (2.0, 0.0, -2.0)],
)
def test_spintherm_from_spinlabor(labor, p, expected):
    assert spintherm_from_spinlabor(labor, p) == pytest.approx(expected, abs=1e-15)


def test_spintherm_domain():
    with pytest.raises(DomainError):
        spintherm_from_spinlabor(-1.0)


def test_ledger_identity():
    assert FirstLawLedger(2, -4, -2).balanced
    assert not FirstLawLedger(2, -4, 0).balanced
    led = FirstLawLedger(4, -6, -2)
    assert (led.spinlabor, led.spintherm, led.delta_jz) == (2.0, -3.0, -1.0)
