"""First- and second-order stochastic approximation drivers.

``run_first_order`` repeats gradient estimation and a projected step until the
next iteration would exceed the measurement budget.  ``run_second_order``
spends ``init_fraction`` of the budget on the matching first-order scheme and
then iterates

    H_bar_n = (1 - b_n) H_bar_{n-1} + b_n H_hat_n
    x_{n+1} = proj(x_n - a_n Upsilon(H_bar_n)^{-1} grad_hat_n)

starting from H_bar_0 = I, with the schedule index restarted at 1.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_symmetric, check_vector
from .exceptions import DomainError, NumericalError
from .gradients import (
    grad_kw_dp,
    grad_lex_dp,
    grad_perm_dp,
    grad_rdsa_random,
    grad_spsa,
)
from .hessians import baseline_estimates, lex_dp_estimates, perm_dp_estimates
from .objectives import MeasurementOracle, NoiseModel, Objective
from .perturb import RandomDirectionDist

__all__ = [
    "Schedules",
    "BoxProjection",
    "UpsilonParams",
    "OptimizationResult",
    "FIRST_ORDER",
    "SECOND_ORDER",
    "ALGORITHMS",
    "measurements_per_iteration",
    "schedule_eval",
    "default_schedules",
    "project_box",
    "upsilon_project",
    "newton_direction",
    "run_first_order",
    "run_second_order",
    "run_algorithm",
]


@dataclass(frozen=True)
class Schedules:
    """a_n = a0 / (n + a_offset)**a_exp, delta_n = delta0 / n**delta_exp, b_n = b0 / n**b_exp.

    Indices are 1-based.  The defaults are the first-order settings; see
    :meth:`second_order` for the Newton-phase ones.
    """

    a0: float = 1.0
    a_offset: float = 50.0
    a_exp: float = 1.0
    delta0: float = 1.9
    delta_exp: float = 0.101
    b0: float = 1.0
    b_exp: float = 0.6

    def __post_init__(self):
        if not (self.a0 > 0 and self.delta0 > 0):
            raise DomainError("a0 and delta0 must be positive")
        if not 0 < self.b0 <= 1:
            raise DomainError(f"b0 must lie in (0, 1], got {self.b0}")
        if self.a_offset <= -1:
            raise DomainError("a_offset must exceed -1 so that n + a_offset > 0")
        if min(self.a_exp, self.delta_exp, self.b_exp) < 0:
            raise DomainError("schedule exponents must be non-negative")

    @classmethod
    def first_order(cls, **overrides):
        return cls(**overrides)

    @classmethod
    def second_order(cls, **overrides):
        params = dict(a0=1.0, a_offset=0.0, a_exp=0.6, delta0=3.8, delta_exp=0.101)
        params.update(overrides)
        return cls(**params)

    def a(self, n):
        _check_step(n)
        return self.a0 / (n + self.a_offset) ** self.a_exp

    def delta(self, n):
        _check_step(n)
        return self.delta0 / n**self.delta_exp

    def b(self, n):
        _check_step(n)
        return self.b0 / n**self.b_exp


def _check_step(n):
    if n < 1:
        raise DomainError(f"schedules are 1-indexed, got n={n}")


def schedule_eval(schedules, n):
    return schedules.a(n), schedules.delta(n), schedules.b(n)


@dataclass(frozen=True)
class BoxProjection:
    lo: float = -2.048
    hi: float = 2.047

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"empty box [{self.lo}, {self.hi}]")


def project_box(x, box=None):
    box = BoxProjection() if box is None else box
    return np.clip(x, box.lo, box.hi)


@dataclass(frozen=True)
class UpsilonParams:
    eig_floor: float = 1e-4

    def __post_init__(self):
        if not self.eig_floor > 0:
            raise DomainError(f"eig_floor must be positive, got {self.eig_floor}")


def _floored_eigh(H, params):
    try:
        lam, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("eigendecomposition failed") from exc
    return np.maximum(lam, params.eig_floor), V


def upsilon_project(H, params=None):
    """Replace eigenvalues below ``eig_floor`` by the floor, keeping eigenvectors."""
    params = UpsilonParams() if params is None else params
    lam, V = _floored_eigh(check_symmetric(H), params)
    return (V * lam) @ V.T


def newton_direction(H, g, params=None):
    """Upsilon(H)^{-1} g using the same eigendecomposition (no explicit inverse)."""
    params = UpsilonParams() if params is None else params
    lam, V = _floored_eigh(0.5 * (H + H.T), params)
    return V @ ((V.T @ g) / lam)


# --------------------------------------------------------------------------
# algorithm table


FIRST_ORDER = {
    "1RDSA-Lex-DP": "lex",
    "1RDSA-Perm-DP": "perm",
    "1RDSA-KW-DP": "kw",
    "1SPSA": "spsa",
    "1RDSA-AsymBer": "asymber",
    "1RDSA-Unif": "unif",
}

# second-order id -> (first-order initialiser, estimate kind)
SECOND_ORDER = {
    "2RDSA-Lex-DP": ("1RDSA-Lex-DP", "lex"),
    "2RDSA-Perm-DP": ("1RDSA-Perm-DP", "perm"),
    "2RDSA-AsymBer": ("1RDSA-AsymBer", "2RDSA-AsymBer"),
    "2RDSA-Unif": ("1RDSA-Unif", "2RDSA-Unif"),
    "2SPSA": ("1SPSA", "2SPSA"),
}

ALGORITHMS = tuple(FIRST_ORDER) + tuple(SECOND_ORDER)

FIRST_ORDER_DISTS = {
    "asymber": RandomDirectionDist.asym_bernoulli(1e-4),
    "unif": RandomDirectionDist.uniform(1.0),
}


def default_schedules(algorithm):
    """Newton-phase schedules used when none are given.

    The deterministic schemes use b_n = 1 / n**0.6.  The random baselines
    average their (high-variance) Hessian estimates with the running mean
    b_n = 1 / n; with the slower-decaying weights they do not settle.
    """
    if algorithm not in SECOND_ORDER:
        raise DomainError(f"unknown second-order algorithm {algorithm!r}")
    if SECOND_ORDER[algorithm][1] in ("lex", "perm"):
        return Schedules.second_order()
    return Schedules.second_order(b_exp=1.0)


def measurements_per_iteration(algorithm, N, center="fresh"):
    if algorithm in FIRST_ORDER:
        kind = FIRST_ORDER[algorithm]
        return {"lex": 2 * 3**N, "perm": 2 * N, "kw": 2 * N}.get(kind, 2)
    if algorithm in SECOND_ORDER:
        kind = SECOND_ORDER[algorithm][1]
        if kind == "lex":
            return 3 * 3**N if center == "fresh" else 2 * 3**N + 1
        if kind == "perm":
            return 3 * N if center == "fresh" else 2 * N + 1
        return 4 if kind == "2SPSA" else 3
    raise DomainError(f"unknown algorithm {algorithm!r}; choose from {list(ALGORITHMS)}")


@dataclass
class OptimizationResult:
    """Outcome of one run.

    ``tau`` counts parameter updates of the algorithm itself; for second-order
    runs the warm-start updates are reported separately in ``tau_init``.
    ``trajectory`` holds ``(measurements_spent, x)`` after every update.
    """

    algorithm: str
    x: np.ndarray
    tau: int
    measurements: int
    trajectory: list = field(default_factory=list, repr=False)
    tau_init: int = 0
    h_bar: np.ndarray = None
    hessian_history: list = field(default=None, repr=False)

    @property
    def no_update(self):
        return self.tau == 0


def _delta_at(schedules, n, delta_mode):
    if delta_mode == "per_step":
        return schedules.delta
    if delta_mode == "per_iteration":
        return schedules.delta(n)
    raise DomainError(f"delta_mode must be 'per_step' or 'per_iteration', got {delta_mode!r}")


def _first_order_gradient(kind, oracle, x, n, schedules, rng, delta_mode, perm):
    if kind == "lex":
        return grad_lex_dp(oracle, x, _delta_at(schedules, n, delta_mode), n)
    if kind == "perm":
        return grad_perm_dp(oracle, x, _delta_at(schedules, n, delta_mode), n, perm)
    if kind == "kw":
        return grad_kw_dp(oracle, x, _delta_at(schedules, n, delta_mode), n)
    if kind == "spsa":
        return grad_spsa(oracle, x, schedules.delta(n), rng)
    return grad_rdsa_random(oracle, x, schedules.delta(n), FIRST_ORDER_DISTS[kind], rng)


def _second_order_estimates(kind, oracle, x, n, schedules, rng, delta_mode, perm, center):
    if kind == "lex":
        return lex_dp_estimates(oracle, x, _delta_at(schedules, n, delta_mode), n, center)
    if kind == "perm":
        return perm_dp_estimates(oracle, x, _delta_at(schedules, n, delta_mode), n, perm, center)
    return baseline_estimates(oracle, x, schedules.delta(n), kind, rng)


def _setup(objective, sigma, seed, x0, oracle):
    """Resolve the oracle, starting point and perturbation RNG for one run."""
    noise_seq, pert_seq = np.random.SeedSequence(seed).spawn(2)
    if oracle is None:
        oracle = MeasurementOracle(objective, NoiseModel(sigma, np.random.default_rng(noise_seq)))
    if x0 is None:
        if not isinstance(objective, Objective):
            raise DomainError("x0 is required when the objective is a plain callable")
        x0 = objective.x0
    return oracle, check_vector(x0).copy(), np.random.default_rng(pert_seq)


def _first_order_loop(kind, oracle, x, budget, schedules, box, rng, delta_mode, perm, trajectory, offset):
    N = x.shape[0]
    per_iter = {"lex": 2 * 3**N, "perm": 2 * N, "kw": 2 * N}.get(kind, 2)
    tau = 0
    spent = 0
    while spent + per_iter <= budget:
        n = tau + 1
        g = _first_order_gradient(kind, oracle, x, n, schedules, rng, delta_mode, perm)
        spent += g.measurements_used
        x = project_box(x - schedules.a(n) * g.vector, box)
        tau = n
        trajectory.append((offset + spent, x.copy()))
    return x, tau, spent


def run_first_order(
    objective,
    algorithm,
    budget,
    seed=None,
    sigma=0.0,
    schedules=None,
    box=None,
    x0=None,
    delta_mode="per_step",
    perm=None,
    oracle=None,
):
    """Run a first-order scheme until the budget no longer covers an iteration.

    A budget smaller than one iteration yields a result with ``tau == 0`` and
    ``x`` equal to the starting point.
    """
    if algorithm not in FIRST_ORDER:
        raise DomainError(f"unknown first-order algorithm {algorithm!r}")
    if budget < 0:
        raise DomainError(f"budget must be non-negative, got {budget}")
    schedules = Schedules.first_order() if schedules is None else schedules
    box = BoxProjection() if box is None else box
    oracle, x, rng = _setup(objective, sigma, seed, x0, oracle)
    x = project_box(x, box)
    trajectory = []
    x, tau, spent = _first_order_loop(
        FIRST_ORDER[algorithm], oracle, x, budget, schedules, box, rng, delta_mode, perm, trajectory, 0
    )
    return OptimizationResult(algorithm, x, tau, spent, trajectory)


def run_second_order(
    objective,
    algorithm,
    budget,
    seed=None,
    sigma=0.0,
    schedules=None,
    init_schedules=None,
    box=None,
    upsilon=None,
    init_fraction=0.2,
    x0=None,
    delta_mode="per_step",
    center="fresh",
    perm=None,
    h_bar0=None,
    record_hessian=False,
    oracle=None,
):
    """Run a second-order scheme with a first-order warm start.

    The warm start is allotted ``floor(init_fraction * budget)`` measurements
    and the Newton phase the rest of the budget.
    """
    if algorithm not in SECOND_ORDER:
        raise DomainError(f"unknown second-order algorithm {algorithm!r}")
    if not 0 <= init_fraction < 1:
        raise DomainError(f"init_fraction must lie in [0, 1), got {init_fraction}")
    if budget < 0:
        raise DomainError(f"budget must be non-negative, got {budget}")
    schedules = default_schedules(algorithm) if schedules is None else schedules
    init_schedules = Schedules.first_order() if init_schedules is None else init_schedules
    box = BoxProjection() if box is None else box
    upsilon = UpsilonParams() if upsilon is None else upsilon
    init_algo, kind = SECOND_ORDER[algorithm]

    oracle, x, rng = _setup(objective, sigma, seed, x0, oracle)
    x = project_box(x, box)
    N = x.shape[0]
    init_budget = math.floor(init_fraction * budget + 1e-9)
    trajectory = []
    x, tau_init, init_spent = _first_order_loop(
        FIRST_ORDER[init_algo], oracle, x, init_budget, init_schedules, box, rng, delta_mode, perm, trajectory, 0
    )

    offset = init_spent
    remaining = budget - init_budget
    per_iter = measurements_per_iteration(algorithm, N, center)
    h_bar = np.eye(N) if h_bar0 is None else check_symmetric(h_bar0).copy()
    history = [h_bar.copy()] if record_hessian else None
    tau = 0
    spent = 0
    while spent + per_iter <= remaining:
        n = tau + 1
        g, H = _second_order_estimates(kind, oracle, x, n, schedules, rng, delta_mode, perm, center)
        spent += H.measurements_used
        b = schedules.b(n)
        h_bar = (1 - b) * h_bar + b * H.matrix
        x = project_box(x - schedules.a(n) * newton_direction(h_bar, g.vector, upsilon), box)
        tau = n
        trajectory.append((offset + spent, x.copy()))
        if record_hessian:
            history.append(h_bar.copy())

    return OptimizationResult(algorithm, x, tau, offset + spent, trajectory, tau_init, h_bar, history)


def run_algorithm(objective, algorithm, budget, **kwargs):
    """Dispatch to :func:`run_first_order` or :func:`run_second_order` by id."""
    if algorithm in FIRST_ORDER:
        for key in ("init_schedules", "upsilon", "init_fraction", "center", "h_bar0", "record_hessian"):
            kwargs.pop(key, None)
        return run_first_order(objective, algorithm, budget, **kwargs)
    return run_second_order(objective, algorithm, budget, **kwargs)
