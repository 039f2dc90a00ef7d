"""Estimator-style wrappers around the optimisation drivers.

The optimisers follow the scikit-learn conventions: constructor arguments are
stored verbatim (so ``get_params``/``set_params``/``clone`` work), ``fit``
takes the objective instead of a data matrix, and learned state is exposed
through trailing-underscore attributes.

>>> from rdsa import Quadratic
>>> opt = RDSAOptimizer("1RDSA-Perm-DP", budget=2000, random_state=0).fit(Quadratic(3))
>>> opt.n_updates_
333
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import DomainError
from .harness import parameter_error
from .objectives import Objective
from .optimize import FIRST_ORDER, SECOND_ORDER, run_first_order, run_second_order

__all__ = ["RDSAOptimizer", "RDSANewtonOptimizer"]


class _OptimizerBase(BaseEstimator):
    _family = {}

    def _check_algorithm(self):
        if self.algorithm not in self._family:
            raise DomainError(
                f"{type(self).__name__} supports {sorted(self._family)}, got {self.algorithm!r}"
            )

    def _store(self, result):
        self.result_ = result
        self.x_ = result.x
        self.n_updates_ = result.tau
        self.measurements_ = result.measurements
        self.trajectory_ = result.trajectory
        return self

    def score(self, objective, x0=None):
        """Negative parameter error of the fitted point (higher is better)."""
        check_is_fitted(self, "x_")
        x0 = objective.x0 if x0 is None else x0
        return -parameter_error(self.x_, x0, objective.x_star)

    def transform(self, X=None):
        check_is_fitted(self, "x_")
        return np.array(self.x_, copy=True)


class RDSAOptimizer(_OptimizerBase):
    """First-order simultaneous-perturbation optimiser."""

    _family = FIRST_ORDER

    def __init__(self, algorithm="1RDSA-Perm-DP", budget=50000, sigma=0.0, schedules=None,
                 box=None, delta_mode="per_step", perm=None, random_state=None):
        self.algorithm = algorithm
        self.budget = budget
        self.sigma = sigma
        self.schedules = schedules
        self.box = box
        self.delta_mode = delta_mode
        self.perm = perm
        self.random_state = random_state

    def fit(self, objective, x0=None):
        self._check_algorithm()
        if x0 is None and not isinstance(objective, Objective):
            raise DomainError("x0 is required when the objective is a plain callable")
        result = run_first_order(
            objective, self.algorithm, self.budget, seed=self.random_state, sigma=self.sigma,
            schedules=self.schedules, box=self.box, x0=x0, delta_mode=self.delta_mode,
            perm=self.perm,
        )
        return self._store(result)


class RDSANewtonOptimizer(_OptimizerBase):
    """Second-order optimiser with a first-order warm start."""

    _family = SECOND_ORDER

    def __init__(self, algorithm="2RDSA-Lex-DP", budget=50000, sigma=0.0, schedules=None,
                 init_schedules=None, init_fraction=0.2, box=None, upsilon=None,
                 delta_mode="per_step", center="fresh", perm=None, random_state=None):
        self.algorithm = algorithm
        self.budget = budget
        self.sigma = sigma
        self.schedules = schedules
        self.init_schedules = init_schedules
        self.init_fraction = init_fraction
        self.box = box
        self.upsilon = upsilon
        self.delta_mode = delta_mode
        self.center = center
        self.perm = perm
        self.random_state = random_state

    def fit(self, objective, x0=None):
        self._check_algorithm()
        result = run_second_order(
            objective, self.algorithm, self.budget, seed=self.random_state, sigma=self.sigma,
            schedules=self.schedules, init_schedules=self.init_schedules, box=self.box,
            upsilon=self.upsilon, init_fraction=self.init_fraction, x0=x0,
            delta_mode=self.delta_mode, center=self.center, perm=self.perm,
        )
        self._store(result)
        self.hessian_ = result.h_bar
        self.n_init_updates_ = result.tau_init
        return self
