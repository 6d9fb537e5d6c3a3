"""scikit-learn compatible linear soft-margin classifier trained with randomized feasibility."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_is_fitted, validate_data

from .baselines import PrimalDualConfig, solve_primal_dual
from .core import Purpose, RandomSource, stream_id
from .exceptions import ParameterError
from .feasibility import FeasibilityConfig
from .problems import build_svm
from .schedules import Constant
from .solvers import DowsSolverConfig, solve_dows_family

__all__ = ["RandomizedFeasibilitySVC"]

METHODS = ("dows", "tdows", "arrow-hurwicz", "alt-gda")


class RandomizedFeasibilitySVC(ClassifierMixin, BaseEstimator):
    """Binary linear SVM with one hinge constraint per training sample.

    Parameters
    ----------
    method : {"dows", "tdows", "arrow-hurwicz", "alt-gda"}
        ``dows``/``tdows`` sample ``n_samples_per_step`` constraints per
        iteration; the primal-dual baselines touch all of them.
    C : float
        Slack penalty of ``1/2 ||w||^2 + C sum xi``.
    max_iter : int
        Outer iterations ``T``.
    n_samples_per_step : int
        Constant feasibility sample size ``N_k``.
    r : float
        Initial distance estimate for the DoWS family.
    beta : float
        Polyak relaxation in ``(0, 2)``.
    eta_primal, eta_dual : float or None
        Baseline stepsizes; ``None`` means ``1/sqrt(max_iter)``.
    random_state : int
        Seed of the sampling streams.
    """

    def __init__(
        self,
        method="dows",
        C=1e-6,
        max_iter=500,
        n_samples_per_step=50,
        r=0.1,
        beta=1.0,
        eta_primal=None,
        eta_dual=None,
        random_state=0,
    ):
        self.method = method
        self.C = C
        self.max_iter = max_iter
        self.n_samples_per_step = n_samples_per_step
        self.r = r
        self.beta = beta
        self.eta_primal = eta_primal
        self.eta_dual = eta_dual
        self.random_state = random_state

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.classifier_tags.multi_class = False
        return tags

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        if self.method not in METHODS:
            raise ParameterError(f"method must be one of {METHODS}, got {self.method!r}")
        self.classes_ = unique_labels(y)
        if len(self.classes_) == 1:
            raise ValueError("training data contains only one class")
        if len(self.classes_) != 2:
            raise ValueError(f"Only binary classification is supported; got {len(self.classes_)} classes")
        signs = np.where(y == self.classes_[1], 1.0, -1.0)
        problem = build_svm(X, signs, self.C)
        seed = int(self.random_state or 0)

        if self.method in ("dows", "tdows"):
            cfg = DowsSolverConfig(
                r=self.r, T=self.max_iter, schedule=Constant(self.n_samples_per_step),
                tamed=self.method == "tdows", feas=FeasibilityConfig(beta=self.beta), log_every=0,
            )
            out = solve_dows_family(
                problem, cfg, RandomSource(seed, stream_id(0, Purpose.SAMPLING)),
                schedule_rng=RandomSource(seed, stream_id(0, Purpose.SCHEDULE)),
            )
        else:
            default = 1.0 / math.sqrt(self.max_iter)
            cfg = PrimalDualConfig(
                self.method,
                default if self.eta_primal is None else self.eta_primal,
                default if self.eta_dual is None else self.eta_dual,
                self.max_iter, log_every=0,
            )
            out = solve_primal_dual(problem, cfg)

        w, b, xi = problem.meta["instance"].unpack(out.final_average)
        self.coef_ = w.reshape(1, -1).copy()
        self.intercept_ = np.array([b])
        self.slack_ = xi.copy()
        self.n_iter_ = self.max_iter
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return X @ self.coef_[0] + self.intercept_[0]

    def predict(self, X):
        # a zero score goes to the positive class
        scores = self.decision_function(X)
        return self.classes_[(scores >= 0.0).astype(int)]
