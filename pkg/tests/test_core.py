import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpwerm.core import (
    Dataset,
    LossSpec,
    ModelParams,
    clip_and_normalize,
    huber_curvature,
    huber_grad,
    huber_loss,
    scale_features,
    werm_gradient,
    werm_hessian,
    werm_objective,
)
from dpwerm.errors import ConfigError, DataError, DomainError

from helpers import central_diff, random_dataset

finite = st.floats(-50, 50, allow_nan=False)
h_st = st.floats(0.05, 2.0)


# ------------------------------------------------------------------ huber


@pytest.mark.parametrize("z,expected", [(2.0, 0.0), (-1.0, 2.0), (1.0, 0.125)])
def test_huber_loss_examples(z, expected):
    assert huber_loss(z, 0.5) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("z,expected", [(2.0, 0.0), (-1.0, -1.0), (1.0, -0.5)])
def test_huber_grad_examples(z, expected):
    assert huber_grad(z, 0.5) == pytest.approx(expected, abs=1e-15)


def test_huber_vectorized_matches_scalar():
    z = np.linspace(-3, 3, 61)
    assert np.array_equal(huber_loss(z), np.array([huber_loss(float(v)) for v in z]))
    assert isinstance(huber_loss(0.3), float)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_huber_rejects_non_finite(bad):
    with pytest.raises(DataError):
        huber_loss(bad)
    with pytest.raises(DataError):
        huber_grad(bad)


@pytest.mark.parametrize("h", [0.0, -1.0, math.nan])
def test_huber_rejects_bad_h(h):
    with pytest.raises(ConfigError):
        huber_loss(0.0, h)


@given(finite, finite, st.floats(0.01, 0.99), h_st)
def test_huber_convex(z1, z2, a, h):
    lhs = huber_loss(a * z1 + (1 - a) * z2, h)
    assert lhs <= a * huber_loss(z1, h) + (1 - a) * huber_loss(z2, h) + 1e-12


@given(h_st)
def test_huber_c1_at_branch_points(h):
    for b in (1 - h, 1 + h):
        for f in (huber_loss, huber_grad):
            assert abs(f(b - 1e-13, h) - f(b + 1e-13, h)) < 1e-12


@given(finite, h_st)
def test_huber_grad_bounded(z, h):
    assert -1.0 <= huber_grad(z, h) <= 0.0


@given(st.floats(-5, 5), h_st)
def test_huber_grad_matches_finite_difference(z, h):
    if min(abs(z - (1 - h)), abs(z - (1 + h))) < 1e-4:
        return
    fd = (huber_loss(z + 1e-7, h) - huber_loss(z - 1e-7, h)) / 2e-7
    assert huber_grad(z, h) == pytest.approx(fd, abs=1e-6)


def test_huber_curvature_pieces():
    assert huber_curvature(1.0, 0.5) == 1.0
    assert huber_curvature(2.0, 0.5) == 0.0
    assert huber_curvature(-2.0, 0.5) == 0.0


def test_loss_spec():
    assert LossSpec().h == 0.5
    with pytest.raises(ConfigError):
        LossSpec(kind="hinge")
    with pytest.raises(ConfigError):
        LossSpec(h=0.0)


# ------------------------------------------------------------------ types


def test_dataset_validation():
    Dataset([[0.6, 0.8]], [1], [1.0], 1.0)
    with pytest.raises(DomainError) as exc:
        Dataset([[1.0, 1.0], [0.1, 0.1]], [1, -1], [1.0, 1.0], 2.0)
    assert exc.value.indices == (0,)
    with pytest.raises(DomainError):
        Dataset([[0.1]], [1], [3.0], 2.0)
    with pytest.raises(DomainError):
        Dataset([[0.1]], [1], [0.0], 2.0)
    with pytest.raises(DataError):
        Dataset([[0.1]], [0], [1.0], 2.0)
    with pytest.raises(DataError):
        Dataset([[0.1], [0.2]], [1], [1.0], 2.0)
    with pytest.raises(ConfigError):
        Dataset([[0.1]], [1], [1.0], -1.0)


def test_model_params_read_only_and_finite():
    src = np.array([1.0, 2.0])
    mp = ModelParams(src)
    src[0] = 9.0
    assert mp.theta[0] == 1.0
    with pytest.raises(ValueError):
        mp.theta[0] = 3.0
    with pytest.raises(DataError):
        ModelParams([np.inf])


# ------------------------------------------------------------------ scaling


def test_scale_features_examples():
    out = scale_features([[1, 1, 1, 1]])
    assert np.allclose(out, np.ones(5) / math.sqrt(5))
    assert np.linalg.norm(out) == pytest.approx(1.0)
    out = scale_features([[0, 0]])
    assert np.allclose(out, [[0, 0, 1 / math.sqrt(3)]])
    out = scale_features([[0.5, 0.5]], add_bias=False)
    assert np.linalg.norm(out) == pytest.approx(0.5)


def test_scale_features_rejects_out_of_range():
    with pytest.raises(DomainError) as exc:
        scale_features([[0.5, 1.2], [-0.1, 0.3]])
    assert set(exc.value.indices) == {(0, 1), (1, 0)}


@given(st.integers(1, 20), st.integers(1, 12), st.booleans(), st.integers(0, 2**32 - 1))
def test_scale_features_norm_bound(n, d, bias, seed):
    raw = np.random.default_rng(seed).uniform(size=(n, d))
    raw[0] = 1.0
    out = scale_features(raw, add_bias=bias)
    assert out.shape == (n, d + bias)
    assert np.all(np.linalg.norm(out, axis=1) <= 1 + 1e-12)


def test_clip_and_normalize():
    out = clip_and_normalize([[-5.0, 3.0], [10.0, 7.0]], [0.0, 2.0], [10.0, 6.0])
    assert np.allclose(out, [[0.0, 0.25], [1.0, 1.0]])
    with pytest.raises(ConfigError):
        clip_and_normalize([[1.0]], 1.0, 1.0)


# ------------------------------------------------------------------ objective


def test_objective_zero_theta():
    rng = np.random.default_rng(1)
    data = random_dataset(rng, 7, 3)
    got = werm_objective(np.zeros(3), data, 2.0)
    assert got == pytest.approx(data.weights.sum() * huber_loss(0.0) / 7)


def test_objective_hand_example():
    data = Dataset([[1.0]], [1], [1.0], 1.0)
    assert werm_objective([2.0], data, 1.0) == pytest.approx(4.0)
    # Half-squared penalty: 0 + 1 * 0.5 * 4 / 1.
    assert werm_objective([2.0], data, 1.0, penalty="half_squared") == pytest.approx(2.0)


def test_objective_doubling_weights():
    rng = np.random.default_rng(2)
    data = random_dataset(rng, 9, 2, W=2.0)
    twice = Dataset(data.features, data.labels, 2 * data.weights, 4.0)
    theta = rng.normal(size=2)
    reg = 3.0 / 9 * theta @ theta
    base = werm_objective(theta, data, 3.0) - reg
    assert werm_objective(theta, twice, 3.0) - reg == pytest.approx(2 * base)


def test_objective_dimension_mismatch():
    data = Dataset([[0.1, 0.2]], [1], [1.0], 1.0)
    with pytest.raises(DataError):
        werm_objective([1.0], data, 1.0)
    with pytest.raises(DataError):
        werm_gradient([1.0, 2.0, 3.0], data, 1.0)
    with pytest.raises(ConfigError):
        werm_objective([1.0, 1.0], data, 0.0)
    with pytest.raises(ConfigError):
        werm_objective([1.0, 1.0], data, 1.0, penalty="l1")


def test_gradient_flat_region():
    data = Dataset([[0.5, 0.5], [0.2, -0.4]], [1, -1], [1.0, 2.0], 2.0)
    theta = np.array([10.0, 10.0])
    assert np.all(data.labels * (data.features @ theta) > 1.5)
    assert np.allclose(werm_gradient(theta, data, 3.0), 2 * 3.0 / 2 * theta)


def test_gradient_symmetric_pair_cancels():
    data = Dataset([[0.3, 0.4], [0.3, 0.4]], [1, -1], [2.0, 2.0], 2.0)
    assert np.allclose(werm_gradient(np.zeros(2), data, 1.0), 0.0)


@pytest.mark.parametrize("penalty", ["squared", "half_squared"])
@pytest.mark.parametrize("seed", range(100))
def test_gradient_finite_differences(seed, penalty):
    rng = np.random.default_rng(seed)
    n, p = rng.integers(1, 30), rng.integers(1, 6)
    data = random_dataset(rng, n, p)
    gamma = rng.uniform(0.1, 20)
    theta = rng.normal(scale=2.0, size=p)
    f = lambda t: werm_objective(t, data, gamma, penalty=penalty)
    fd = central_diff(f, theta)
    g = werm_gradient(theta, data, gamma, penalty=penalty)
    assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(fd))


def test_hessian_matches_gradient_differences():
    rng = np.random.default_rng(5)
    data = random_dataset(rng, 20, 3)
    theta = rng.normal(size=3)
    H = werm_hessian(theta, data, 2.0)
    fd = np.column_stack([central_diff(lambda t: werm_gradient(t, data, 2.0)[k], theta) for k in range(3)])
    assert np.allclose(H, fd, atol=1e-5)
    assert np.allclose(H, H.T)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
def test_objective_midpoint_convex(seed, a):
    rng = np.random.default_rng(seed)
    data = random_dataset(rng, 10, 3)
    t1, t2 = rng.normal(scale=3, size=(2, 3))
    mid = werm_objective(a * t1 + (1 - a) * t2, data, 1.0)
    assert mid <= a * werm_objective(t1, data, 1.0) + (1 - a) * werm_objective(t2, data, 1.0) + 1e-12
