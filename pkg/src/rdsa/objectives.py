"""Benchmark objectives, the state-dependent noise model and the counting oracle.

All three objectives evaluate either a single point of shape ``(N,)`` or a
batch of points of shape ``(k, N)``.
"""

from functools import cached_property

import numpy as np

from ._validation import check_dim, check_rng, check_vector
from .exceptions import DomainError, NumericalError

__all__ = [
    "Objective",
    "Quadratic",
    "FourthOrder",
    "Rastrigin",
    "make_objective",
    "quadratic_matrix",
    "quadratic_optimum",
    "eval_quadratic",
    "eval_fourth_order",
    "eval_rastrigin",
    "NoiseModel",
    "MeasurementOracle",
    "noisy_measure",
]


def quadratic_matrix(N):
    """The matrix A with N*A upper triangular and all ones on and above the diagonal."""
    N = check_dim(N)
    return np.triu(np.ones((N, N))) / N


class Objective:
    """Clean benchmark function with analytic derivatives and known optimum."""

    name = "objective"

    def __init__(self, dim):
        self.dim = check_dim(dim, "dim")

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def hessian(self, x):
        raise NotImplementedError

    @property
    def x_star(self):
        raise NotImplementedError

    @property
    def f_star(self):
        return float(self.value(self.x_star))

    @property
    def x0(self):
        return np.ones(self.dim)

    def __call__(self, x):
        return self.value(x)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class Quadratic(Objective):
    """f(x) = x^T A x + b^T x with b = ones."""

    name = "quadratic"

    def __init__(self, dim):
        super().__init__(dim)
        self.A = quadratic_matrix(self.dim)
        self.A.setflags(write=False)
        self.b = np.ones(self.dim)
        self.b.setflags(write=False)

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.sum((x @ self.A.T) * x, axis=-1) + x @ self.b

    def gradient(self, x):
        return (self.A + self.A.T) @ check_vector(x, self.dim) + self.b

    def hessian(self, x=None):
        return self.A + self.A.T

    @cached_property
    def _optimum(self):
        return quadratic_optimum(self.dim)

    @property
    def x_star(self):
        return self._optimum[0].copy()

    @property
    def f_star(self):
        return self._optimum[1]

    @property
    def strong_convexity(self):
        """Smallest eigenvalue of A + A^T."""
        return float(np.linalg.eigvalsh(self.A + self.A.T)[0])


def quadratic_optimum(N):
    """Minimiser and minimum of the quadratic benchmark by a direct solve."""
    A = quadratic_matrix(N)
    b = np.ones(A.shape[0])
    try:
        x_star = np.linalg.solve(A + A.T, -b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular quadratic system for N={N}") from exc
    return x_star, float(x_star @ A @ x_star + b @ x_star)


class FourthOrder(Objective):
    """f(x) = x^T A^T A x + 0.1 sum (Ax)_j^3 + 0.01 sum (Ax)_j^4."""

    name = "fourth"

    def __init__(self, dim):
        super().__init__(dim)
        self.A = quadratic_matrix(self.dim)
        self.A.setflags(write=False)

    def value(self, x):
        y = np.asarray(x, dtype=np.float64) @ self.A.T
        return np.sum(y**2 + 0.1 * y**3 + 0.01 * y**4, axis=-1)

    def gradient(self, x):
        y = self.A @ check_vector(x, self.dim)
        return self.A.T @ (2 * y + 0.3 * y**2 + 0.04 * y**3)

    def hessian(self, x):
        y = self.A @ check_vector(x, self.dim)
        return self.A.T @ np.diag(2 + 0.6 * y + 0.12 * y**2) @ self.A

    @property
    def x_star(self):
        return np.zeros(self.dim)

    @property
    def f_star(self):
        return 0.0


class Rastrigin(Objective):
    """f(x) = sum(x_i^2 - 10 cos(2 pi x_i)) + 10 N + 1.

    Multimodal; ``x_star`` is the global minimiser at the origin.
    """

    name = "rastrigin"

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.sum(x**2 - 10 * np.cos(2 * np.pi * x), axis=-1) + 10 * self.dim + 1

    def gradient(self, x):
        x = check_vector(x, self.dim)
        return 2 * x + 20 * np.pi * np.sin(2 * np.pi * x)

    def hessian(self, x):
        x = check_vector(x, self.dim)
        return np.diag(2 + 40 * np.pi**2 * np.cos(2 * np.pi * x))

    @property
    def x_star(self):
        return np.zeros(self.dim)

    @property
    def f_star(self):
        return 1.0

    @property
    def x0(self):
        return np.full(self.dim, 2.0)


OBJECTIVES = {cls.name: cls for cls in (Quadratic, FourthOrder, Rastrigin)}


def make_objective(name, dim):
    try:
        return OBJECTIVES[name](dim)
    except KeyError:
        raise DomainError(
            f"unknown objective {name!r}; choose from {sorted(OBJECTIVES)}"
        ) from None


def eval_quadratic(x):
    x = np.asarray(x, dtype=np.float64)
    return float(Quadratic(x.shape[-1]).value(x))


def eval_fourth_order(x):
    x = np.asarray(x, dtype=np.float64)
    return float(FourthOrder(x.shape[-1]).value(x))


def eval_rastrigin(x):
    x = np.asarray(x, dtype=np.float64)
    return float(Rastrigin(x.shape[-1]).value(x))


class NoiseModel:
    """Additive noise [x^T, 1] xi with xi ~ N(0, sigma^2 I_{N+1}).

    Given x this is Gaussian with variance sigma^2 (|x|^2 + 1), which is how
    it is sampled: one standard normal per measurement.
    """

    def __init__(self, sigma=0.0, rng=None):
        sigma = float(sigma)
        if not np.isfinite(sigma) or sigma < 0:
            raise DomainError(f"sigma must be >= 0, got {sigma}")
        self.sigma = sigma
        self.rng = check_rng(rng)
        self.calls = 0

    def sample(self, X):
        X = np.asarray(X, dtype=np.float64)
        self.calls += int(np.prod(X.shape[:-1]))
        if self.sigma == 0.0:
            return np.zeros(X.shape[:-1])
        scale = self.sigma * np.sqrt(np.sum(X * X, axis=-1) + 1.0)
        return scale * self.rng.standard_normal(X.shape[:-1])


class MeasurementOracle:
    """Noisy function measurements with a call counter.

    ``func`` must accept a batch of points of shape (k, N) and return k values
    when ``vectorized`` is true (the benchmark objectives do); otherwise it is
    called once per point.
    """

    def __init__(self, func, noise=None, vectorized=None):
        self.func = func
        self.noise = noise
        self.vectorized = isinstance(func, Objective) if vectorized is None else vectorized
        self.calls = 0

    def _clean(self, X):
        if self.vectorized:
            return np.asarray(self.func(X), dtype=np.float64)
        return np.array([float(self.func(x)) for x in X])

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return float(self.batch(x[None, :])[0])

    def batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        y = self._clean(X)
        if self.noise is not None:
            y = y + self.noise.sample(X)
        self.calls += X.shape[0]
        return y


def noisy_measure(obj, noise, x):
    """A single noisy measurement of ``obj`` at ``x`` (bumps ``noise.calls``)."""
    x = np.asarray(x, dtype=np.float64)
    return float(obj.value(x) + noise.sample(x[None, :])[0])
