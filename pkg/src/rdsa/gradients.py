"""Simultaneous-perturbation gradient estimators.

Deterministic schemes take ``delta_at``, either a constant perturbation size
or a callable mapping the global 1-based inner-step index to delta, plus the
1-based outer iteration ``n``.  Inner step ``m`` of outer iteration ``n`` uses
index ``(n - 1) * P + m + 1`` where ``P`` is the cycle length.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_rng, check_vector
from .exceptions import DomainError
from .perturb import PermSequence, RandomDirectionDist, iter_lex_blocks

__all__ = [
    "GradientEstimate",
    "inner_deltas",
    "grad_lex_dp",
    "grad_perm_dp",
    "grad_kw_dp",
    "grad_spsa",
    "grad_rdsa_random",
]


@dataclass
class GradientEstimate:
    vector: np.ndarray
    measurements_used: int
    delta_used: float


def inner_deltas(delta_at, n, P):
    """Perturbation sizes for the ``P`` inner steps of outer iteration ``n``."""
    if n < 1:
        raise DomainError(f"outer iteration index is 1-based, got n={n}")
    if callable(delta_at):
        k0 = (n - 1) * P + 1
        deltas = np.array([delta_at(k) for k in range(k0, k0 + P)], dtype=np.float64)
    else:
        deltas = np.full(P, float(delta_at))
    if not np.all(np.isfinite(deltas) & (deltas > 0)):
        raise DomainError("perturbation sizes must be finite and positive")
    return deltas


def paired_measurements(oracle, x, D, deltas):
    """Measure at x + delta_m d_m and x - delta_m d_m for every row d_m of ``D``."""
    step = D * deltas[:, None]
    y_plus = oracle.batch(x + step)
    y_minus = oracle.batch(x - step)
    return y_plus, y_minus


def grad_lex_dp(oracle, x, delta_at, n=1):
    """Gradient estimate averaged over one semi-lexicographic cycle (2 * 3**N calls)."""
    x = check_vector(x)
    N = x.shape[0]
    cycle = 3**N
    deltas = inner_deltas(delta_at, n, cycle)
    total = np.zeros(N)
    for start, D in iter_lex_blocks(N):
        d = deltas[start : start + D.shape[0]]
        y_plus, y_minus = paired_measurements(oracle, x, D, d)
        total += D.T @ ((y_plus - y_minus) / (2 * d))
    return GradientEstimate(total / (2 * cycle), 2 * cycle, float(deltas[0]))


def grad_perm_dp(oracle, x, delta_at, n=1, seq=None):
    """Gradient estimate summed over one permutation cycle (2N calls).

    No normalisation is needed since the permutation rows have Gram matrix I.
    """
    x = check_vector(x)
    N = x.shape[0]
    seq = PermSequence(N) if seq is None else seq
    if seq.dim != N:
        raise DomainError(f"sequence dimension {seq.dim} does not match x ({N})")
    deltas = inner_deltas(delta_at, n, N)
    D = seq.matrix().astype(np.float64)
    y_plus, y_minus = paired_measurements(oracle, x, D, deltas)
    return GradientEstimate(D.T @ ((y_plus - y_minus) / (2 * deltas)), 2 * N, float(deltas[0]))


def grad_kw_dp(oracle, x, delta_at, n=1):
    """Kiefer-Wolfowitz central differences along each coordinate (2N calls)."""
    x = check_vector(x)
    N = x.shape[0]
    deltas = inner_deltas(delta_at, n, N)
    E = np.eye(N)
    y_plus, y_minus = paired_measurements(oracle, x, E, deltas)
    return GradientEstimate((y_plus - y_minus) / (2 * deltas), 2 * N, float(deltas[0]))


def grad_spsa(oracle, x, delta, rng):
    """Classic SPSA with a Rademacher direction (2 calls)."""
    x = check_vector(x)
    delta = float(inner_deltas(delta, 1, 1)[0])
    d = RandomDirectionDist.rademacher().sample(x.shape[0], check_rng(rng))
    y_plus, y_minus = oracle.batch(np.stack([x + delta * d, x - delta * d]))
    return GradientEstimate((y_plus - y_minus) / (2 * delta * d), 2, delta)


def rdsa_gradient(d, y_plus, y_minus, delta, dist):
    return d * ((y_plus - y_minus) / (2 * delta * dist.second_moment))


def grad_rdsa_random(oracle, x, delta, dist, rng):
    """Random-directions gradient estimate (2 calls).

    ``d (y+ - y-) / (2 delta)`` scaled by 1 / E[d_i^2]: 1/(1+epsilon) for the
    asymmetric Bernoulli and 3/eta^2 for U[-eta, eta].
    """
    if dist.kind == "rademacher":
        raise DomainError("random-directions estimator expects asymber or uniform")
    x = check_vector(x)
    delta = float(inner_deltas(delta, 1, 1)[0])
    d = dist.sample(x.shape[0], check_rng(rng))
    y_plus, y_minus = oracle.batch(np.stack([x + delta * d, x - delta * d]))
    return GradientEstimate(rdsa_gradient(d, y_plus, y_minus, delta, dist), 2, delta)
