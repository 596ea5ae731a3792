import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfnide.errors import DomainError, NumericOverflowError
from sfnide.specialfn import GAMMA_MAX_ARG, beta, gamma, log_gamma, mittag_leffler

# 50-digit mpmath references
LOG_GAMMA_10_5 = 13.94062521940376363316124
BETA_04_06 = 3.303265999194124105185899
ML_05_2 = 108.9409043899779724123554


def test_gamma_known_values():
    assert gamma(1.0) == 1.0
    assert gamma(0.5) == pytest.approx(1.7724538509055160, rel=1e-15)
    assert gamma(5.0) == pytest.approx(24.0, rel=1e-15)


def test_gamma_matches_math_on_wide_range():
    xs = np.concatenate([np.linspace(0.01, 5, 200), np.linspace(5, 171, 200)])
    worst = max(abs(gamma(x) / math.gamma(x) - 1) for x in xs)
    assert worst < 1e-13


def test_gamma_recurrence():
    for k in range(1, 51):
        x = k / 10
        assert gamma(x + 1) == pytest.approx(x * gamma(x), rel=1e-12)


def test_gamma_domain_errors():
    for bad in (0.0, -1.0, -0.5):
        with pytest.raises(DomainError):
            gamma(bad)
    with pytest.raises(NumericOverflowError):
        gamma(GAMMA_MAX_ARG + 1)


def test_log_gamma_values():
    assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-15)
    assert log_gamma(2.0) == pytest.approx(0.0, abs=1e-15)
    assert log_gamma(10.5) == pytest.approx(LOG_GAMMA_10_5, rel=1e-14)


def test_log_gamma_large_arguments_relative():
    for x in (200.0, 1e3, 1e5, 1e6):
        assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-13)


def test_log_gamma_vectorised_and_monotone():
    xs = np.linspace(2.0, 300.0, 2000)
    vals = log_gamma(xs)
    assert vals.shape == xs.shape
    assert np.all(np.diff(vals) > 0)
    with pytest.raises(DomainError):
        log_gamma(np.array([1.0, -2.0]))


def test_beta_values():
    assert beta(1, 1) == pytest.approx(1.0, rel=1e-15)
    assert beta(0.5, 0.5) == pytest.approx(math.pi, rel=1e-15)
    assert beta(0.4, 0.6) == pytest.approx(BETA_04_06, rel=1e-14)
    # large arguments take the log route
    assert beta(100.0, 90.0) == pytest.approx(
        math.exp(math.lgamma(100) + math.lgamma(90) - math.lgamma(190)), rel=1e-11)


@given(st.floats(0.01, 50.0), st.floats(0.01, 50.0))
def test_beta_symmetric(x, y):
    assert beta(x, y) == pytest.approx(beta(y, x), rel=1e-14)


def test_mittag_leffler_values():
    assert mittag_leffler(1.0, 1.0) == pytest.approx(math.e, rel=1e-15)
    assert mittag_leffler(0.5, 0.0) == 1.0
    assert mittag_leffler(0.5, 2.0) == pytest.approx(ML_05_2, rel=1e-13)


def test_mittag_leffler_exponential_case():
    for x in np.linspace(0.0, 20.0, 81):
        assert mittag_leffler(1.0, x) == pytest.approx(math.exp(x), rel=1e-13, abs=1e-15)


@settings(max_examples=40)
@given(st.floats(0.3, 1.0), st.floats(0.0, 5.0))
def test_mittag_leffler_increasing_in_x(alpha, x):
    assert mittag_leffler(alpha, x + 0.5) > mittag_leffler(alpha, x)


def test_mittag_leffler_domain():
    with pytest.raises(DomainError):
        mittag_leffler(0.0, 1.0)
    with pytest.raises(DomainError):
        mittag_leffler(1.5, 1.0)
    with pytest.raises(DomainError):
        mittag_leffler(0.5, -1.0)
    with pytest.raises(DomainError):
        mittag_leffler(0.5, 51.0)
    with pytest.raises(NumericOverflowError):
        mittag_leffler(0.1, 50.0)
