"""Hessian estimators for the second-order schemes.

Each ``*_estimates`` function performs one iteration's worth of measurements
and returns ``(GradientEstimate, HessianEstimate)`` from the same data, which
is what the Newton recursion consumes.  The ``hess_*`` wrappers return only
the Hessian.

Centre measurements
    ``center="fresh"`` takes a new measurement at x for every inner step
    (3 calls per step), ``center="shared"`` takes a single one per iteration.

Lexicographic weighting
    ``weighting="unbiased"`` (default) weights the second difference s_m of
    row d_m with diagonal entries (d_i^2 - 2) and off-diagonal entries
    d_i d_j / 4, normalised by 1 / (2 * 3**N).  This makes the estimate exact
    on quadratics: over one cycle sum (d^i)^2 (d^j)^2 = 4 * 3**N for i != j.
    ``weighting="kappa"`` uses the correction matrix from :func:`mm_matrix`
    with the 1 / (2 * 3**N)**2 normalisation; for N >= 2 it carries a
    non-vanishing bias and is kept for comparison only.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_dim, check_rng, check_vector
from .exceptions import DomainError
from .gradients import (
    GradientEstimate,
    inner_deltas,
    paired_measurements,
    rdsa_gradient,
)
from .perturb import PermSequence, RandomDirectionDist, iter_lex_blocks

__all__ = [
    "HessianEstimate",
    "kappa",
    "mm_matrix",
    "moment_weights",
    "lex_dp_estimates",
    "perm_dp_estimates",
    "baseline_estimates",
    "hess_lex_dp",
    "hess_perm_dp",
    "hess_perm_two_dp",
    "hess_baseline",
    "BASELINE_KINDS",
]


@dataclass
class HessianEstimate:
    matrix: np.ndarray
    measurements_used: int
    structure: str = "full"
    pair_values: list = field(default=None, repr=False)


def kappa(N):
    N = check_dim(N)
    return 1.0 / (1.0 / (2 * 3 ** (N - 1)) - 1.0)


def mm_matrix(d, N=None):
    """Correction matrix M_m for a lexicographic row ``d``.

    Off-diagonal (i, j): d_i d_j.  Diagonal (i, i): kappa * (d_i^2 - 2 * 3**N).
    """
    d = np.asarray(d)
    N = d.shape[0] if N is None else check_dim(N)
    if d.shape != (N,):
        raise DomainError(f"row has shape {d.shape}, expected ({N},)")
    if not np.all((d == -1) | (d == 2)):
        raise DomainError("lexicographic rows take values in {-1, 2}")
    d = d.astype(np.float64)
    M = np.outer(d, d)
    np.fill_diagonal(M, kappa(N) * (d * d - 2 * 3**N))
    return M


def moment_weights(d, m2, m4):
    """Weight matrix turning d^T H d into an unbiased estimate of H.

    For i.i.d. zero-mean coordinates with E d^2 = m2 and E d^4 = m4: diagonal
    (d_i^2 - m2) / (m4 - m2^2), off-diagonal d_i d_j / (2 m2^2).
    """
    d = np.asarray(d, dtype=np.float64)
    W = np.outer(d, d) / (2 * m2 * m2)
    np.fill_diagonal(W, (d * d - m2) / (m4 - m2 * m2))
    return W


def _center_measurements(oracle, x, count, center):
    if center == "fresh":
        return oracle.batch(np.broadcast_to(x, (count, x.shape[0])))
    if center == "shared":
        return np.full(count, oracle(x))
    raise DomainError(f"center must be 'fresh' or 'shared', got {center!r}")


def _center_calls(count, center):
    return count if center == "fresh" else 1


def lex_dp_estimates(oracle, x, delta_at, n=1, center="fresh", weighting="unbiased"):
    """Gradient and full Hessian from one lexicographic cycle."""
    if weighting not in ("unbiased", "kappa"):
        raise DomainError(f"unknown weighting {weighting!r}")
    x = check_vector(x)
    N = x.shape[0]
    cycle = 3**N
    deltas = inner_deltas(delta_at, n, cycle)
    y_shared = None if center == "fresh" else _center_measurements(oracle, x, 1, center)[0]

    grad = np.zeros(N)
    S = np.zeros((N, N))  # sum_m s_m d_m d_m^T
    s_total = 0.0
    for start, D in iter_lex_blocks(N):
        k = D.shape[0]
        d = deltas[start : start + k]
        y_plus, y_minus = paired_measurements(oracle, x, D, d)
        y_c = oracle.batch(np.broadcast_to(x, (k, N))) if y_shared is None else y_shared
        grad += D.T @ ((y_plus - y_minus) / (2 * d))
        s = (y_plus + y_minus - 2 * y_c) / d**2
        S += (D * s[:, None]).T @ D
        s_total += s.sum()

    if weighting == "unbiased":
        H = S / 4.0
        np.fill_diagonal(H, np.diag(S) - 2.0 * s_total)
        H /= 2 * cycle
    else:
        H = S.copy()
        np.fill_diagonal(H, kappa(N) * (np.diag(S) - 2 * cycle * s_total))
        H /= (2 * cycle) ** 2
    H = 0.5 * (H + H.T)

    calls = 2 * cycle + _center_calls(cycle, center)
    return (
        GradientEstimate(grad / (2 * cycle), 2 * cycle, float(deltas[0])),
        HessianEstimate(H, calls, "full"),
    )


def perm_dp_estimates(oracle, x, delta_at, n=1, seq=None, center="fresh"):
    """Gradient and diagonal Hessian from one permutation cycle.

    The second difference along e_sigma(m) is assigned to diagonal slot
    sigma(m); off-diagonal entries are zero.
    """
    x = check_vector(x)
    N = x.shape[0]
    seq = PermSequence(N) if seq is None else seq
    if seq.dim != N:
        raise DomainError(f"sequence dimension {seq.dim} does not match x ({N})")
    deltas = inner_deltas(delta_at, n, N)
    D = seq.matrix().astype(np.float64)
    y_plus, y_minus = paired_measurements(oracle, x, D, deltas)
    y_c = _center_measurements(oracle, x, N, center)
    grad = D.T @ ((y_plus - y_minus) / (2 * deltas))
    diag = D.T @ ((y_plus + y_minus - 2 * y_c) / deltas**2)
    return (
        GradientEstimate(grad, 2 * N, float(deltas[0])),
        HessianEstimate(np.diag(diag), 2 * N + _center_calls(N, center), "diagonal"),
    )


def hess_lex_dp(oracle, x, delta_at, n=1, center="fresh", weighting="unbiased"):
    return lex_dp_estimates(oracle, x, delta_at, n, center, weighting)[1]


def hess_perm_dp(oracle, x, delta_at, n=1, seq=None, center="fresh"):
    return perm_dp_estimates(oracle, x, delta_at, n, seq, center)[1]


def hess_perm_two_dp(oracle, x, delta_at, n=1, second=None, first=None, center="fresh"):
    """Diagonal estimate from measurements along d_m + d_hat_m.

    ``first`` defaults to the identity order and ``second`` to its cyclic
    shift.  Slot first.order[m] receives the m-th second difference, and
    ``pair_values`` records ((first.order[m], second.order[m]), value) for
    every m.
    """
    x = check_vector(x)
    N = x.shape[0]
    first = PermSequence(N) if first is None else first
    second = PermSequence.cyclic(N) if second is None else second
    if first.dim != N or second.dim != N:
        raise DomainError("permutation dimensions do not match x")
    if any(a == b for a, b in zip(first.order, second.order)):
        raise DomainError("the two permutations must differ at every inner step")
    deltas = inner_deltas(delta_at, n, N)
    D = (first.matrix() + second.matrix()).astype(np.float64)
    y_plus, y_minus = paired_measurements(oracle, x, D, deltas)
    y_c = _center_measurements(oracle, x, N, center)
    s = (y_plus + y_minus - 2 * y_c) / deltas**2
    diag = np.zeros(N)
    diag[list(first.order)] = s
    pairs = [((a, b), float(v)) for a, b, v in zip(first.order, second.order, s)]
    return HessianEstimate(np.diag(diag), 2 * N + _center_calls(N, center), "diagonal", pairs)


BASELINE_KINDS = {
    "2SPSA": RandomDirectionDist.rademacher(),
    "2RDSA-Unif": RandomDirectionDist.uniform(1.0),
    "2RDSA-AsymBer": RandomDirectionDist.asym_bernoulli(1.0),
}


def baseline_estimates(oracle, x, delta, kind, rng, dist=None):
    """Random-perturbation second-order estimates.

    2RDSA variants take three measurements (x +- delta d and x).  2SPSA takes
    four: x +- delta d and the same two points shifted by delta d_tilde, with d
    and d_tilde independent Rademacher vectors; its Hessian is the symmetrised
    outer-product estimate.
    """
    if kind not in BASELINE_KINDS:
        raise DomainError(f"unknown baseline {kind!r}; choose from {sorted(BASELINE_KINDS)}")
    x = check_vector(x)
    N = x.shape[0]
    delta = float(inner_deltas(delta, 1, 1)[0])
    rng = check_rng(rng)
    dist = BASELINE_KINDS[kind] if dist is None else dist

    if kind == "2SPSA":
        d = dist.sample(N, rng)
        d_tilde = dist.sample(N, rng)
        xp, xm = x + delta * d, x - delta * d
        y = oracle.batch(np.stack([xp, xm, xp + delta * d_tilde, xm + delta * d_tilde]))
        grad = (y[0] - y[1]) / (2 * delta * d)
        dG = ((y[2] - y[0]) - (y[3] - y[1])) / (delta * d_tilde)
        half = np.outer(dG / (2 * delta), 1.0 / d)
        H = 0.5 * (half + half.T)
        return GradientEstimate(grad, 4, delta), HessianEstimate(H, 4, "full")

    d = dist.sample(N, rng)
    y = oracle.batch(np.stack([x + delta * d, x - delta * d, x]))
    grad = rdsa_gradient(d, y[0], y[1], delta, dist)
    s = (y[0] + y[1] - 2 * y[2]) / delta**2
    H = moment_weights(d, dist.second_moment, dist.fourth_moment) * s
    return GradientEstimate(grad, 2, delta), HessianEstimate(H, 3, "full")


def hess_baseline(oracle, x, delta, kind, rng, dist=None):
    return baseline_estimates(oracle, x, delta, kind, rng, dist)[1]
