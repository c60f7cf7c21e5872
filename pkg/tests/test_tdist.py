import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from qformat.tdist import normal_cdf, normal_quantile, sample_t, t_cdf, t_pdf, t_quantile

NUS = [1, 2, 3, 5, 10, 100]


# frozen from independent oracles (see test bodies for how they were computed)
T_PDF_1_NU2 = 0.19245008972987523  # quad-normalized (1 + t^2/2)^(-3/2) at t = 1
NORMAL_Q975 = 1.9599639845400318  # bisection on 0.5 * erfc(-x / sqrt 2) to 1e-13


def test_pdf_cauchy_peak():
    assert t_pdf(0.0, 1) == pytest.approx(1 / math.pi, abs=1e-15)


def test_pdf_normal_limit():
    assert t_pdf(0.0, math.inf) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)
    assert t_pdf(0.0, 1e12) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-9)


def test_pdf_against_quadrature_oracle():
    norm, _ = integrate.quad(lambda t: (1 + t * t / 2) ** -1.5, -np.inf, np.inf, epsabs=1e-13)
    assert (1.5 ** -1.5) / norm == pytest.approx(T_PDF_1_NU2, rel=1e-10)
    assert t_pdf(1.0, 2) == pytest.approx(T_PDF_1_NU2, rel=1e-12)


@pytest.mark.parametrize("nu", [0.7, 1, 3, 5.5, 30])
def test_pdf_integrates_to_one(nu):
    total, _ = integrate.quad(lambda t: t_pdf(t, nu), -np.inf, np.inf, limit=200)
    assert total == pytest.approx(1.0, abs=1e-7)


def test_pdf_peak_and_tail_ordering():
    for lo, hi in zip(NUS, NUS[1:]):
        assert t_pdf(0, lo) < t_pdf(0, hi)
        assert t_pdf(6, lo) > t_pdf(6, hi)


@pytest.mark.parametrize("bad", [0, -1, float("nan")])
def test_domain_errors(bad):
    with pytest.raises(ValueError):
        t_pdf(0.0, bad)
    with pytest.raises(ValueError):
        t_cdf(0.0, bad)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_quantile_domain(p):
    with pytest.raises(ValueError):
        t_quantile(p, 5)
    with pytest.raises(ValueError):
        normal_quantile(p)


def test_cdf_closed_forms():
    assert t_cdf(0.0, 5) == 0.5
    assert t_cdf(1.0, 1) == pytest.approx(0.75, abs=1e-15)
    assert t_cdf(1.0, 2) == pytest.approx(0.5 + 1 / (2 * math.sqrt(3)), abs=1e-15)
    # quadrature cross-check of the nu = 2 closed form
    mass, _ = integrate.quad(lambda t: t_pdf(t, 2), -np.inf, 1.0, epsabs=1e-13)
    assert mass == pytest.approx(0.5 + 1 / (2 * math.sqrt(3)), abs=1e-10)


def test_cdf_against_closed_forms_on_grid():
    t = np.linspace(-50, 50, 20001)
    assert np.max(np.abs(t_cdf(t, 1) - (0.5 + np.arctan(t) / math.pi))) <= 1e-10
    assert np.max(np.abs(t_cdf(t, 2) - (0.5 + t / (2 * np.sqrt(t * t + 2))))) <= 1e-10


def test_cdf_monotone():
    t = np.linspace(-30, 30, 5001)
    for nu in NUS + [0.6, 1e6]:
        assert np.all(np.diff(t_cdf(t, nu)) >= 0)


def test_quantile_closed_forms():
    assert t_quantile(0.5, 5) == 0.0
    assert t_quantile(0.975, 1) == pytest.approx(math.tan(math.pi * 0.475), rel=1e-11)
    p = 0.975
    assert t_quantile(p, 2) == pytest.approx((2 * p - 1) * math.sqrt(2 / (4 * p * (1 - p))), rel=1e-11)


def test_quantile_closed_forms_on_grid():
    p = np.linspace(0.001, 0.999, 9981)
    assert np.max(np.abs(t_quantile(p, 1) - np.tan(np.pi * (p - 0.5)))) <= 1e-10 * 320
    q2 = (2 * p - 1) * np.sqrt(2 / (4 * p * (1 - p)))
    assert np.max(np.abs(t_quantile(p, 2) - q2)) <= 1e-10


def test_normal_quantile():
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(0.975) == pytest.approx(NORMAL_Q975, abs=1e-12)
    p = np.linspace(1e-6, 1 - 1e-6, 20001)
    x = normal_quantile(p)
    assert np.max(np.abs(normal_cdf(x) - p)) <= 1e-12
    assert np.all(normal_quantile(p) + normal_quantile(1 - p) == 0) or \
        np.max(np.abs(normal_quantile(p) + normal_quantile(1 - p))) <= 1e-9


def test_normal_limit_of_t_quantile():
    p = np.linspace(0.001, 0.999, 999)
    assert np.max(np.abs(t_quantile(p, 1e6) - normal_quantile(p))) <= 1e-3


@settings(max_examples=200, deadline=None)
@given(p=st.floats(1e-6, 1 - 1e-6), nu=st.sampled_from(NUS + [0.5, 4.5, 1e6]))
def test_quantile_round_trip_and_symmetry(p, nu):
    x = t_quantile(p, nu)
    assert abs(t_cdf(x, nu) - p) <= 1e-9
    assert abs(t_quantile(1 - p, nu) + x) <= 1e-9 * max(1.0, abs(x))


def test_sample_deterministic():
    a = sample_t(10, 5, 1.0, seed=7)
    b = sample_t(10, 5, 1.0, seed=7)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_t(10, 5, 1.0, seed=8))


def test_sample_domain():
    with pytest.raises(ValueError):
        sample_t(0, 5)
    with pytest.raises(ValueError):
        sample_t(10, 5, scale=0.0)


@pytest.mark.slow
def test_sample_moments():
    n = 10**6
    x = sample_t(n, 5, 1.0, seed=11)
    q1, q3 = np.percentile(x, [25, 75])
    assert abs(np.median(x)) <= min(0.01, 3 * (q3 - q1) / math.sqrt(n))
    z = sample_t(n, 1e6, 1.0, seed=12)
    assert abs(np.std(z) - 1.0) <= 0.005
