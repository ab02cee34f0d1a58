"""scikit-learn estimators wrapping :func:`sturm.solver.fit_sturm`.

Inputs are stacks of third-order tensors, ``X.shape == (M, I1, I2, I3)``.
"""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .solver import SturmConfig, decision_values, fit_sturm


def _check_tensor_stack(X):
    X = check_array(X, allow_nd=True, dtype=np.float64)
    if X.ndim != 4:
        raise ValueError(
            f"expected a stack of third-order tensors (M, I1, I2, I3), got {X.shape}"
        )
    return X


class _SturmBase(BaseEstimator):
    def __init__(self, tau=0.1, gamma=0.1, rho=1.0, alpha=None,
                 max_iters=200, primal_tol=1e-4, record_trace=False):
        self.tau = tau
        self.gamma = gamma
        self.rho = rho
        self.alpha = alpha
        self.max_iters = max_iters
        self.primal_tol = primal_tol
        self.record_trace = record_trace

    def _config(self):
        return SturmConfig(
            tau=self.tau, gamma=self.gamma, rho=self.rho, alpha=self.alpha,
            max_iters=self.max_iters, primal_tol=self.primal_tol,
            record_trace=self.record_trace,
        )

    def _fit_responses(self, X, y):
        result = fit_sturm(X, y, self._config())
        self.coef_ = result.W
        self.n_iter_ = result.iterations_run
        self.converged_ = result.converged
        self.fit_result_ = result
        self.n_features_in_ = int(np.prod(X.shape[1:]))
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = _check_tensor_stack(X)
        return decision_values(self.coef_, X)

    @property
    def sparsity_(self):
        check_is_fitted(self, "coef_")
        return float(np.mean(self.coef_ == 0))


class SturmClassifier(ClassifierMixin, _SturmBase):
    """Binary classifier: regress the labels encoded as -1/+1, predict by sign.

    ``classes_[0]`` is encoded as -1 and ``classes_[1]`` as +1.  A decision
    value of exactly zero predicts ``classes_[1]``.

    Parameters
    ----------
    tau : float
        Weight of the tubal nuclear norm.
    gamma : float
        Weight of the l1 norm.
    rho : float
        Augmented Lagrangian constant.
    alpha : float or None
        Loss weight; ``None`` uses ``sqrt(max(I1, I2) * I3)``.
    max_iters, primal_tol : int, float
        ADMM budget and stopping tolerance on the normalized primal residuals.
    record_trace : bool
        Keep the per-iteration objective in ``fit_result_``.
    """

    def fit(self, X, y):
        X = _check_tensor_stack(X)
        X, y = check_X_y(X, y, allow_nd=True, dtype=np.float64, y_numeric=False)
        self.classes_ = unique_labels(y)
        if self.classes_.size != 2:
            raise ValueError(
                f"SturmClassifier needs exactly two classes, got {self.classes_.size}"
            )
        signed = np.where(y == self.classes_[1], 1.0, -1.0)
        return self._fit_responses(X, signed)

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[(scores >= 0).astype(int)]


class SturmRegressor(RegressorMixin, _SturmBase):
    """Real-valued responses; ``predict`` returns ``<X_m, W>``."""

    def fit(self, X, y):
        X = _check_tensor_stack(X)
        X, y = check_X_y(X, y, allow_nd=True, dtype=np.float64, y_numeric=True)
        return self._fit_responses(X, y)

    def predict(self, X):
        return self.decision_function(X)
