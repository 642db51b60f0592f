import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from mdcsim.channel import (
    FadingChannel,
    link_weight,
    nakagami_pdf,
    nakagami_sample,
    sample_fading_parameter,
    service_success_probability,
)

# 30-digit evaluation of the closed form with mpmath, frozen here
PDF_HALF_HALF = 0.704130653528598955549360883193


def test_pdf_at_zero_m1():
    assert nakagami_pdf(0.0, 1.0, 1.0) == 0.0


def test_pdf_m1_x1_is_two_over_e():
    assert nakagami_pdf(1.0, 1.0, 1.0) == pytest.approx(2 * math.exp(-1), rel=1e-14)


def test_pdf_half_half_matches_high_precision_oracle():
    assert nakagami_pdf(0.5, 0.5, 1.0) == pytest.approx(PDF_HALF_HALF, rel=1e-13)


def test_pdf_at_zero_edge_cases():
    assert nakagami_pdf(0.0, 0.3) == math.inf
    assert nakagami_pdf(0.0, 0.5) == pytest.approx(2 / math.sqrt(2 * math.pi))


@pytest.mark.parametrize("m", [0.1, 0.5, 1.0])
def test_pdf_integrates_to_one(m):
    omega = 1.0
    upper = 20 * math.sqrt(omega)
    # split near the origin where m < 1/2 has an integrable singularity
    a, _ = integrate.quad(nakagami_pdf, 0, 1e-3, args=(m, omega), limit=200, epsabs=1e-12)
    b, _ = integrate.quad(nakagami_pdf, 1e-3, upper, args=(m, omega), limit=200, epsabs=1e-12)
    assert a + b == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("bad", [dict(x=-1.0, m=1.0), dict(x=1.0, m=0.0), dict(x=1.0, m=1.0, omega=-1.0)])
def test_pdf_rejects_bad_arguments(bad):
    with pytest.raises(ValueError):
        nakagami_pdf(**bad)


def test_sampler_moments_m1():
    rng = np.random.default_rng(7)
    x = nakagami_sample(rng, 1.0, 1.0, size=1_000_000)
    assert np.mean(x**2) == pytest.approx(1.0, abs=0.01)
    assert np.mean(x) == pytest.approx(math.gamma(1.5), abs=0.01)


def test_sampler_scalar_and_broadcast():
    rng = np.random.default_rng(0)
    assert isinstance(nakagami_sample(rng, 0.7), float)
    out = nakagami_sample(rng, np.array([0.1, 0.5, 1.0]), 2.0)
    assert out.shape == (3,) and np.all(out >= 0)


def test_sampler_is_deterministic_for_a_seed():
    a = nakagami_sample(np.random.default_rng(42), 0.3, size=1000)
    b = nakagami_sample(np.random.default_rng(42), 0.3, size=1000)
    assert np.array_equal(a, b)


def test_sampler_rejects_nonpositive_m():
    with pytest.raises(ValueError):
        nakagami_sample(np.random.default_rng(0), 0.0)


def test_fading_parameter_uniform_mean():
    m = sample_fading_parameter(np.random.default_rng(3), 0.1, 1.0, size=1_000_000)
    assert m.mean() == pytest.approx(0.55, abs=0.005)
    assert m.min() >= 0.1 and m.max() <= 1.0


def test_fading_parameter_degenerate_interval():
    assert sample_fading_parameter(np.random.default_rng(0), 0.5, 0.5) == 0.5


@pytest.mark.parametrize("low,high", [(0.0, 1.0), (0.8, 0.2)])
def test_fading_parameter_bad_interval(low, high):
    with pytest.raises(ValueError):
        sample_fading_parameter(np.random.default_rng(0), low, high)


@pytest.mark.parametrize("m,k,w", [(1, 1, 1), (0.5, 1, 0.5), (0.3, 2, 0.6)])
def test_link_weight_examples(m, k, w):
    assert link_weight(m, k) == pytest.approx(w)


@given(
    st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 10),
)
def test_link_weight_strictly_increasing(m1, m2, k):
    if m1 < m2:
        assert link_weight(m1, k) < link_weight(m2, k)
        assert link_weight(k, m1) < link_weight(k, m2)


@pytest.mark.parametrize("gain,p", [(0.0, 0.0), (1.0, 1.0), (0.5, 0.25), (3.0, 1.0)])
def test_success_probability_examples(gain, p):
    assert service_success_probability(gain, 1.0) == pytest.approx(p)


@settings(max_examples=200)
@given(st.floats(0, 100), st.floats(0.01, 100))
def test_success_probability_in_unit_interval(gain, ref):
    assert 0.0 <= service_success_probability(gain, ref) <= 1.0


def test_fading_channel_weight_and_resample():
    ch = FadingChannel(fading_m=0.4, proportionality_k=2.0)
    assert ch.weight == pytest.approx(0.8)
    ch.resample(np.random.default_rng(1), 0.1, 1.0)
    assert 0.1 <= ch.fading_m <= 1.0 and ch.current_gain >= 0
