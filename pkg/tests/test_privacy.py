import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpwerm import privacy
from dpwerm.core import ModelParams
from dpwerm.errors import ConfigError, UsageError
from dpwerm.privacy import (
    Conservative,
    EstimatedLargeN,
    Observed,
    PrivacyBudget,
    Rng,
    SensitivitySpec,
    perturb,
    privatize,
    sample_sphere_noise,
    sensitivity,
)

N_DRAWS = 100_000


def noise_draws(p, epsilon, delta, n=N_DRAWS, seed=0):
    gen = Rng(seed).generator()
    return np.array([sample_sphere_noise(p, epsilon, delta, gen) for _ in range(n)])


def within(sample, target, k):
    se = sample.std(ddof=1) / math.sqrt(sample.size)
    return abs(sample.mean() - target) <= k * se


# ------------------------------------------------------------------ sensitivity


@pytest.mark.parametrize(
    "spec,expected",
    [
        (SensitivitySpec(8, 30), 16 / 30),
        (SensitivitySpec(30, 300), 0.2),
        (SensitivitySpec(8, 30, EstimatedLargeN(k=2.5, r=1.0, sigma_d=8)), 1.2),
        (SensitivitySpec(8, 30, EstimatedLargeN(k=2.5, r=1.0)), 1.2),
        (SensitivitySpec(8, 30, Conservative(100)), 27.2),
    ],
)
def test_sensitivity_examples(spec, expected):
    assert sensitivity(spec) == pytest.approx(expected, rel=1e-15)


def test_estimated_mode_uses_r():
    spec = SensitivitySpec(4, 10, EstimatedLargeN(k=2.0, r=0.25, sigma_d=1.0))
    assert spec.C == pytest.approx(4.0)
    assert sensitivity(spec) == pytest.approx(1.2)


modes = st.sampled_from([Observed(), EstimatedLargeN(), EstimatedLargeN(k=1.0, r=0.5, sigma_d=2.0), Conservative(50)])


@given(modes, st.floats(0.1, 100), st.floats(0.1, 1000), st.floats(1.01, 3))
def test_sensitivity_monotone(mode, W, gamma, f):
    base = sensitivity(SensitivitySpec(W, gamma, mode))
    assert sensitivity(SensitivitySpec(W, gamma * f, mode)) < base
    assert sensitivity(SensitivitySpec(W * f, gamma, mode)) > base


def test_spec_validation():
    with pytest.raises(ConfigError):
        SensitivitySpec(0, 1)
    with pytest.raises(ConfigError):
        SensitivitySpec(1, -1)
    with pytest.raises(ConfigError):
        EstimatedLargeN(r=1.5)
    with pytest.raises(ConfigError):
        EstimatedLargeN(r=0.0)
    with pytest.raises(ConfigError):
        EstimatedLargeN(k=-1)
    with pytest.raises(ConfigError):
        EstimatedLargeN(sigma_d=0)
    with pytest.raises(ConfigError):
        Conservative(0)
    with pytest.raises(ConfigError):
        SensitivitySpec(1, 1, mode="observed")


def test_budget():
    assert PrivacyBudget(1.0).is_private
    assert not PrivacyBudget(math.inf).is_private
    for bad in (0.0, -1.0, math.nan):
        with pytest.raises(ConfigError):
            PrivacyBudget(bad)


# ------------------------------------------------------------------ rng


def test_rng_determinism_and_children():
    a = Rng(42).generator().standard_normal(5)
    assert np.array_equal(a, Rng(42, 0).generator().standard_normal(5))
    assert not np.array_equal(a, Rng(42, 1).generator().standard_normal(5))
    assert not np.array_equal(a, Rng(42).child(0).generator().standard_normal(5))
    assert Rng(42).child(1, 2) == Rng(42).child(1).child(2)
    with pytest.raises(ConfigError):
        Rng(-1)
    with pytest.raises(ConfigError):
        privacy.as_generator(42)


# ------------------------------------------------------------------ mechanism


def test_noise_deterministic():
    a = sample_sphere_noise(3, 1.0, 1.0, Rng(42, 0))
    b = sample_sphere_noise(3, 1.0, 1.0, Rng(42, 0))
    assert np.array_equal(a, b)


def test_noise_p1_is_exponential():
    lam = 2.5
    norms = np.abs(noise_draws(1, lam, 1.0, seed=1)[:, 0])
    assert within(norms, 1 / lam, 3)


@pytest.mark.parametrize("p,eps,delta", [(2, 1.0, 0.5), (5, 0.5, 2.0), (10, 3.0, 1.0)])
def test_noise_norm_mean_and_variance(p, eps, delta):
    norms = np.linalg.norm(noise_draws(p, eps, delta, seed=p), axis=1)
    scale = delta / eps
    assert within(norms, p * scale, 3)
    var = norms.var(ddof=1)
    dev = (norms - norms.mean()) ** 2
    se_var = dev.std(ddof=1) / math.sqrt(norms.size)
    assert abs(var - p * scale**2) <= 4 * se_var


def test_noise_direction_uniform():
    e = noise_draws(4, 1.0, 1.0, seed=7)
    u = e / np.linalg.norm(e, axis=1, keepdims=True)
    assert np.linalg.norm(u.mean(axis=0)) < 0.02


def test_independent_streams_uncorrelated():
    theta = ModelParams(np.zeros(3))
    spec = SensitivitySpec(1.0, 1.0)
    a = np.array([privatize(theta, spec, PrivacyBudget(1.0), Rng(5, 0).child(j)).theta for j in range(10_000)])
    b = np.array([privatize(theta, spec, PrivacyBudget(1.0), Rng(5, 1).child(j)).theta for j in range(10_000)])
    for k in range(3):
        assert abs(np.corrcoef(a[:, k], b[:, k])[0, 1]) < 0.05


def test_noise_validation():
    for args in [(0, 1.0, 1.0), (2, 0.0, 1.0), (2, math.inf, 1.0), (2, 1.0, 0.0)]:
        with pytest.raises(ConfigError):
            sample_sphere_noise(*args, Rng(0))


def test_zero_direction_redrawn():
    calls = iter([np.zeros(3), np.array([3.0, 0.0, 4.0])])

    class Fake:
        def standard_normal(self, p):
            return next(calls)

    assert np.allclose(privacy._draw_direction(Fake(), 3), [0.6, 0.0, 0.8])


# ------------------------------------------------------------------ privatize


def test_zero_radius_gives_identity(monkeypatch):
    monkeypatch.setattr(privacy, "_draw_radius", lambda gen, p: 0.0)
    theta = ModelParams([1.0, -2.0])
    out = privatize(theta, SensitivitySpec(1.0, 1.0), PrivacyBudget(1.0), Rng(0))
    assert np.array_equal(out.theta, theta.theta)
    assert out.privatized


def test_epsilon_scaling_exact():
    theta = ModelParams([0.5, 0.5, -1.0])
    spec = SensitivitySpec(2.0, 4.0)
    a = privatize(theta, spec, PrivacyBudget(0.7), Rng(11))
    b = privatize(theta, spec, PrivacyBudget(7.0), Rng(11))
    da = np.linalg.norm(a.theta - theta.theta)
    db = np.linalg.norm(b.theta - theta.theta)
    assert db == pytest.approx(da / 10, rel=1e-12)


def test_mean_displacement():
    theta = ModelParams(np.zeros(5))
    gen = Rng(3).generator()
    d = np.array([np.linalg.norm(perturb(theta, 1.0, 0.2, gen).theta) for _ in range(N_DRAWS)])
    assert within(d, 1.0, 3)


def test_double_privatize_rejected():
    out = privatize(ModelParams([1.0]), SensitivitySpec(1, 1), PrivacyBudget(1.0), Rng(0))
    with pytest.raises(UsageError):
        privatize(out, SensitivitySpec(1, 1), PrivacyBudget(1.0), Rng(1))


def test_infinite_budget_identity():
    theta = ModelParams([1.0, 2.0])
    out = privatize(theta, SensitivitySpec(1, 1), PrivacyBudget(math.inf), Rng(0))
    assert np.array_equal(out.theta, theta.theta)
    assert not out.privatized
