import numpy as np

from dpwerm.core import Dataset


def random_dataset(rng, n, p, W=5.0):
    """Random valid dataset: rows of norm <= 1, labels +-1, weights in (0, W]."""
    x = rng.normal(size=(n, p))
    x /= np.maximum(1.0, np.linalg.norm(x, axis=1))[:, None] * rng.uniform(1.0, 2.0, size=(n, 1))
    y = np.where(rng.uniform(size=n) < 0.5, 1.0, -1.0)
    w = rng.uniform(0.01, W, size=n)
    return Dataset(x, y, w, W)


def central_diff(f, theta, step=1e-6):
    out = np.empty_like(theta)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = step
        out[k] = (f(theta + e) - f(theta - e)) / (2 * step)
    return out
