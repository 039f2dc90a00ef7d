"""Input validation helpers shared by the public API."""

import numbers

import numpy as np

from .exceptions import DomainError, OutOfRangeError


def check_dim(N, name="N"):
    if isinstance(N, bool) or not isinstance(N, numbers.Integral):
        raise DomainError(f"{name} must be an integer, got {N!r}")
    if N < 1:
        raise DomainError(f"{name} must be >= 1, got {N}")
    return int(N)


def check_index(m, upper, name="m"):
    if isinstance(m, bool) or not isinstance(m, numbers.Integral):
        raise OutOfRangeError(f"{name} must be an integer, got {m!r}")
    if not 0 <= m < upper:
        raise OutOfRangeError(f"{name}={m} outside [0, {upper})")
    return int(m)


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be a finite positive number, got {value}")
    return value


def check_vector(x, dim=None, name="x"):
    """Return ``x`` as a finite 1-d float array, optionally of length ``dim``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise DomainError(f"{name} must have length {dim}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} contains non-finite entries")
    return x


def check_symmetric(H, name="H"):
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError(f"{name} must be a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise DomainError(f"{name} contains non-finite entries")
    return 0.5 * (H + H.T)


def check_rng(seed):
    """Turn ``None``, an int, a SeedSequence or a Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
