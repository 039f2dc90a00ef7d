"""Perturbation direction sources.

Deterministic sources cycle through a fixed set of rows whose outer products
sum to a multiple of the identity over one cycle:

* the semi-lexicographic sequence over the alphabet {-1, -1, 2}, cycle length
  3**N, Gram matrix 2 * 3**N * I;
* permutation rows e_sigma(0), ..., e_sigma(N-1), cycle length N, Gram matrix I.

Random sources (asymmetric Bernoulli, uniform, Rademacher) are used by the
baseline estimators.

Row ``m`` of the lexicographic sequence is read off the base-3 digits of ``m``
(most significant first): digit 2 maps to 2, digits 0 and 1 map to -1.  Rows
are generated on demand, in blocks when vectorisation pays off, and the full
3**N x N matrix is never stored.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_dim, check_index, check_positive, check_rng
from .exceptions import AccumulationOverflowError, DomainError

#: Largest dimension for which full-cycle enumeration is attempted.
MAX_ENUMERATION_DIM = 12

_INT64_MAX = np.iinfo(np.int64).max


def lex_cycle_len(N):
    return 3 ** check_dim(N)


def lex_row(N, m):
    """Row ``m`` of the semi-lexicographic sequence in dimension ``N``.

    >>> lex_row(2, 2)
    array([-1,  2])
    >>> lex_row(3, 18)
    array([ 2, -1, -1])
    """
    N = check_dim(N)
    m = check_index(m, 3**N)
    row = np.empty(N, dtype=np.int64)
    for i in range(N - 1, -1, -1):
        m, digit = divmod(m, 3)
        row[i] = 2 if digit == 2 else -1
    return row


def lex_block(N, start, stop):
    """Rows ``start`` to ``stop - 1`` as an integer array of shape (stop-start, N)."""
    N = check_dim(N)
    cycle = 3**N
    if not 0 <= start <= stop <= cycle:
        raise DomainError(f"block [{start}, {stop}) outside [0, {cycle}]")
    m = np.arange(start, stop, dtype=np.int64)
    powers = 3 ** np.arange(N - 1, -1, -1, dtype=np.int64)
    digits = (m[:, None] // powers[None, :]) % 3
    return np.where(digits == 2, 2, -1).astype(np.int64)


def iter_lex_blocks(N, block_size=8192):
    """Yield ``(start, rows)`` covering one full cycle in bounded-size blocks."""
    cycle = lex_cycle_len(N)
    for start in range(0, cycle, block_size):
        stop = min(start + block_size, cycle)
        yield start, lex_block(N, start, stop)


@dataclass(frozen=True)
class LexSequence:
    dim: int

    def __post_init__(self):
        check_dim(self.dim, "dim")

    @property
    def cycle_len(self):
        return 3**self.dim

    def __len__(self):
        return self.cycle_len

    def row(self, m):
        return lex_row(self.dim, m)

    def block(self, start, stop):
        return lex_block(self.dim, start, stop)

    def __iter__(self):
        for _, rows in iter_lex_blocks(self.dim):
            yield from rows


def _check_order(order, N):
    order = tuple(int(o) for o in order)
    if sorted(order) != list(range(N)):
        raise DomainError(f"order {order} is not a permutation of 0..{N - 1}")
    return order


@dataclass(frozen=True)
class PermSequence:
    """Rows of a permutation matrix: row ``m`` is the basis vector e_order[m].

    ``order`` is zero-based; the default is the identity.
    """

    dim: int
    order: tuple = field(default=None)

    def __post_init__(self):
        check_dim(self.dim, "dim")
        order = tuple(range(self.dim)) if self.order is None else self.order
        object.__setattr__(self, "order", _check_order(order, self.dim))

    @classmethod
    def cyclic(cls, dim, shift=1):
        """Order (shift, shift+1, ..., shift-1) mod dim."""
        return cls(dim, tuple((i + shift) % dim for i in range(dim)))

    @property
    def cycle_len(self):
        return self.dim

    def __len__(self):
        return self.dim

    def row(self, m):
        return perm_row(self, m)

    def matrix(self):
        D = np.zeros((self.dim, self.dim), dtype=np.int64)
        D[np.arange(self.dim), self.order] = 1
        return D

    def __iter__(self):
        yield from self.matrix()


def perm_row(seq, m):
    m = check_index(m, seq.dim)
    row = np.zeros(seq.dim, dtype=np.int64)
    row[seq.order[m]] = 1
    return row


# --------------------------------------------------------------------------
# random directions


@dataclass(frozen=True)
class RandomDirectionDist:
    """Distribution of i.i.d. perturbation coordinates.

    ``kind`` is one of ``"asymber"`` (asymmetric Bernoulli with parameter
    ``param = epsilon``), ``"uniform"`` (U[-eta, eta], ``param = eta``) or
    ``"rademacher"`` (``param`` ignored).
    """

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in ("asymber", "uniform", "rademacher"):
            raise DomainError(f"unknown direction distribution {self.kind!r}")
        if self.kind != "rademacher":
            name = "epsilon" if self.kind == "asymber" else "eta"
            object.__setattr__(self, "param", check_positive(self.param, name))

    @classmethod
    def asym_bernoulli(cls, epsilon):
        return cls("asymber", epsilon)

    @classmethod
    def uniform(cls, eta):
        return cls("uniform", eta)

    @classmethod
    def rademacher(cls):
        return cls("rademacher", 1.0)

    @property
    def second_moment(self):
        if self.kind == "asymber":
            return 1.0 + self.param
        if self.kind == "uniform":
            return self.param**2 / 3.0
        return 1.0

    @property
    def fourth_moment(self):
        if self.kind == "asymber":
            e = self.param
            return (1.0 + e) * (1.0 + (1.0 + e) ** 3) / (2.0 + e)
        if self.kind == "uniform":
            return self.param**4 / 5.0
        return 1.0

    def sample(self, N, rng):
        return sample_direction(self, N, rng)


def sample_direction(dist, N, rng):
    N = check_dim(N)
    rng = check_rng(rng)
    if dist.kind == "asymber":
        e = dist.param
        up = rng.random(N) < 1.0 / (2.0 + e)
        return np.where(up, 1.0 + e, -1.0)
    if dist.kind == "uniform":
        return rng.uniform(-dist.param, dist.param, N)
    return np.where(rng.random(N) < 0.5, -1.0, 1.0)


# --------------------------------------------------------------------------
# exact cycle identities


def _check_enumerable(N, bound):
    N = check_dim(N)
    if N > MAX_ENUMERATION_DIM:
        raise DomainError(
            f"full-cycle enumeration is capped at N <= {MAX_ENUMERATION_DIM}, got {N}"
        )
    if bound(N) > _INT64_MAX:
        raise AccumulationOverflowError(f"int64 accumulation could overflow for N={N}")
    return N


def lex_gram(N):
    """Sum of d_m d_m^T over one lexicographic cycle, in exact integers."""
    N = _check_enumerable(N, lambda n: 4 * 3**n)
    G = np.zeros((N, N), dtype=np.int64)
    for _, rows in iter_lex_blocks(N):
        G += rows.T @ rows
    return G


def lex_moment(N, powers):
    """Exact integer sum over one cycle of prod_i (d_m^i) ** powers[i].

    ``powers`` maps coordinate index to exponent, e.g. ``{0: 2, 1: 2}`` gives
    sum_m (d_m^0)^2 (d_m^1)^2.
    """
    total_power = sum(powers.values())
    N = _check_enumerable(N, lambda n: 2 ** max(total_power, 1) * 3**n)
    for i in powers:
        if not 0 <= i < N:
            raise DomainError(f"coordinate {i} outside [0, {N})")
    total = 0
    for _, rows in iter_lex_blocks(N):
        prod = np.ones(rows.shape[0], dtype=np.int64)
        for i, p in powers.items():
            prod *= rows[:, i] ** p
        total += int(prod.sum())
    return total


def perm_gram(seq):
    D = seq.matrix()
    return D.T @ D
