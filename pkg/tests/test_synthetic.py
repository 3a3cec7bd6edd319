import math

import numpy as np
import pytest
from scipy import integrate

from brdad.synthetic import (
    HuberSpec,
    MixtureSpec,
    mixture_density,
    sample_huber,
    sample_mixture,
    standard_normal,
    two_bump,
    two_bump_1d,
)


def test_standard_normal_peak():
    assert mixture_density(standard_normal(1), [[0.0]])[0] == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_two_bump_1d_at_point_three():
    expected = 0.5 / math.sqrt(2 * math.pi * 0.01) + 0.5 / math.sqrt(2 * math.pi * 0.0025) * math.exp(-0.16 / 0.005)
    assert mixture_density(two_bump_1d(), [[0.3]])[0] == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("spec", [standard_normal(1), two_bump_1d()])
def test_density_integrates_to_one(spec):
    grid = np.linspace(-5, 5, 200_001)
    assert integrate.trapezoid(mixture_density(spec, grid), grid) == pytest.approx(1.0, abs=1e-4)


def test_two_bump_2d_integrates_to_one():
    val, _ = integrate.dblquad(lambda y, x: mixture_density(two_bump(2), [[x, y]])[0], -1, 2, -1, 2)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_density_non_negative(rng):
    assert np.all(mixture_density(two_bump(3), rng.standard_normal((1000, 3)) * 5) >= 0)


def test_component_means_converge():
    spec = MixtureSpec(((1.0, (0.3, -2.0), 0.04),))
    x = sample_mixture(spec, 100_000, seed=3).points
    tol = 3 * 0.2 / math.sqrt(100_000)
    np.testing.assert_allclose(x.mean(axis=0), [0.3, -2.0], atol=tol)


def test_spec_validation():
    with pytest.raises(ValueError):
        MixtureSpec(((0.5, (0.0,), 1.0),))
    with pytest.raises(ValueError):
        MixtureSpec(((1.0, (0.0,), 0.0),))
    with pytest.raises(ValueError):
        HuberSpec(0.0, standard_normal(1))


def test_mixture_deterministic():
    a = sample_mixture(two_bump(2), 50, 7).points
    b = sample_mixture(two_bump(2), 50, 7).points
    assert np.array_equal(a, b)


def test_huber_tiny_contamination():
    ld = sample_huber(HuberSpec(1e-9, two_bump(2)), 100, 0)
    assert ld.labels.sum() == 0


def test_huber_fraction_and_truncation():
    n = 10_000
    ld = sample_huber(HuberSpec(0.5, two_bump(2)), n, 1)
    frac = ld.labels.mean()
    assert abs(frac - 0.5) <= 0.02
    assert abs(frac - 0.5) <= 4 * math.sqrt(0.25 / n)
    pts = ld.data.points
    assert np.all((pts >= 0) & (pts <= 1))


@pytest.mark.parametrize("pi", [0.05, 0.2])
def test_huber_label_frequency(pi):
    n = 20_000
    ld = sample_huber(HuberSpec(pi, two_bump(3)), n, 11)
    assert abs(ld.labels.mean() - pi) <= 4 * math.sqrt(pi * (1 - pi) / n)


def test_huber_deterministic():
    a = sample_huber(HuberSpec(0.1, two_bump(2)), 300, 5)
    b = sample_huber(HuberSpec(0.1, two_bump(2)), 300, 5)
    assert np.array_equal(a.data.points, b.data.points) and np.array_equal(a.labels, b.labels)
