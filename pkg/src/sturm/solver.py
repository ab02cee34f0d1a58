"""ADMM solver for sparse tubal-regularized multilinear regression.

Minimizes

    (alpha / 2) * sum_m (y_m - <X_m, W>)^2 + tau * ||W||_TNN + gamma * ||W||_1

by splitting ``W`` into ``A`` (least-squares block) and ``B`` (TNN block)
with scaled dual variables ``P' = P / rho`` and ``Q' = Q / rho``.  The loss
weight ``alpha`` is realised by multiplying the design matrix and responses
by ``sqrt(alpha)`` before the A-update; :func:`objective_value` applies the
same weight, so the tau/gamma grid is comparable across tensor sizes.
"""
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .prox import prox_l1, prox_tnn
from .tensor_core import LabeledDataset, as_tensor3, fro_norm, inner_product, l1_norm
from .tsvd import tnn

logger = logging.getLogger(__name__)

#: Largest number of features for which the ``I x I`` Cholesky route is used.
DENSE_ROUTE_MAX_FEATURES = 4096


def default_alpha(dims):
    i1, i2, i3 = dims
    return float(np.sqrt(max(i1, i2) * i3))


@dataclass(frozen=True)
class SturmConfig:
    tau: float = 0.0
    gamma: float = 0.0
    rho: float = 1.0
    alpha: float = None  # None -> sqrt(max(I1, I2) * I3)
    max_iters: int = 200
    primal_tol: float = 1e-4
    record_trace: bool = True

    def __post_init__(self):
        if self.tau < 0 or self.gamma < 0:
            raise ValueError(
                f"tau and gamma must be non-negative, got {self.tau}, {self.gamma}"
            )
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.primal_tol < 0:
            raise ValueError(f"primal_tol must be >= 0, got {self.primal_tol}")

    def resolve(self, dims):
        """Copy with ``alpha`` filled in for tensors of shape ``dims``."""
        if self.alpha is not None:
            return self
        return replace(self, alpha=default_alpha(dims))


@dataclass
class SolverState:
    A: np.ndarray
    B: np.ndarray
    W: np.ndarray
    P: np.ndarray  # scaled dual P' for A = W
    Q: np.ndarray  # scaled dual Q' for B = W
    iteration: int = 0

    @classmethod
    def zeros(cls, dims):
        return cls(*(np.zeros(dims) for _ in range(5)))


@dataclass
class FitResult:
    W: np.ndarray
    objective_trace: list = field(default_factory=list)
    primal_residuals: list = field(default_factory=list)
    iteration_times: list = field(default_factory=list)
    converged: bool = False
    iterations_run: int = 0
    wall_time: float = 0.0


def _design(X):
    if isinstance(X, LabeledDataset):
        return X.design_matrix()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 4:
        return X.reshape(X.shape[0], -1)
    if X.ndim != 2:
        raise ValueError(f"expected samples (M, I1, I2, I3) or (M, I), got {X.shape}")
    return X


class DataSolveHandle:
    """Solves ``(X^T X + rho I) v = r`` with one factorization reused.

    With fewer samples than features the ``M x M`` matrix ``rho I + X X^T``
    is factored and the matrix inversion lemma gives
    ``v = (r - X^T (rho I + X X^T)^{-1} X r) / rho``; memory stays
    ``O(IM + M^2)``.  Otherwise the ``I x I`` system is factored directly.
    """

    def __init__(self, X, rho, route="auto"):
        X = np.ascontiguousarray(_design(X))
        if not rho > 0:
            raise ValueError(f"rho must be positive, got {rho}")
        m, n = X.shape
        if route == "auto":
            dense = m >= n and n <= DENSE_ROUTE_MAX_FEATURES
            route = "dense" if dense else "woodbury"
        if route not in ("dense", "woodbury"):
            raise ValueError(f"unknown route {route!r}")
        self.X = X
        self.rho = float(rho)
        self.route = route
        gram = X.T @ X if route == "dense" else X @ X.T
        gram[np.diag_indices_from(gram)] += self.rho
        try:
            self._factor = cho_factor(gram, lower=True, check_finite=True)
        except (LinAlgError, ValueError) as exc:
            raise LinAlgError(f"Cholesky factorization failed: {exc}") from exc

    @property
    def n_features(self):
        return self.X.shape[1]

    def solve(self, r):
        r = np.asarray(r, dtype=np.float64)
        if r.shape != (self.n_features,):
            raise ValueError(
                f"right-hand side must have length {self.n_features}, got {r.shape}"
            )
        if self.route == "dense":
            return cho_solve(self._factor, r)
        inner = cho_solve(self._factor, self.X @ r)
        return (r - self.X.T @ inner) / self.rho


def precompute_data_solve(X, rho, scale=1.0):
    """Factor the A-update system for samples ``X`` multiplied by ``scale``."""
    return DataSolveHandle(scale * _design(X), rho)


def update_A(state, handle, xty, rho):
    """Exact minimizer of the A-subproblem.

    ``xty`` is ``X^T y`` for the loss-weighted design matrix and responses.
    """
    rhs = xty + rho * (state.W - state.P).ravel()
    return handle.solve(rhs).reshape(state.W.shape)


def _check_inputs(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 4:
        raise ValueError(f"samples must be an (M, I1, I2, I3) array, got {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValueError(f"expected {X.shape[0]} responses, got shape {y.shape}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("samples or responses contain NaN or Inf")
    return X, y


def fit_sturm(X, y, config, callback=None):
    """Run the ADMM iterations.

    ``X`` is an ``(M, I1, I2, I3)`` array (or a :class:`LabeledDataset`, in
    which case ``y`` may be ``None``) and ``y`` holds real responses.
    Stops once both ``||A - W||_F`` and ``||B - W||_F``, divided by
    ``max(1, ||W||_F)``, drop below ``config.primal_tol``, or after
    ``config.max_iters`` iterations; ``primal_tol=0`` runs the full budget.

    ``callback(state, handle, xty)`` is invoked after every iteration.
    """
    if isinstance(X, LabeledDataset):
        X, y = X.samples, X.labels if y is None else y
    X, y = _check_inputs(X, y)
    dims = X.shape[1:]
    config = config.resolve(dims)
    rho = config.rho
    root_alpha = np.sqrt(config.alpha)

    start = time.perf_counter()
    design = root_alpha * X.reshape(X.shape[0], -1)
    handle = DataSolveHandle(design, rho)
    xty = design.T @ (root_alpha * y)
    mu_tnn = config.tau / rho
    mu_l1 = config.gamma / (2.0 * rho)

    state = SolverState.zeros(dims)
    result = FitResult(W=state.W)
    for k in range(1, config.max_iters + 1):
        tick = time.perf_counter()
        A = update_A(state, handle, xty, rho)
        B = prox_tnn(state.W - state.Q, mu_tnn)
        W = prox_l1((A + state.P + B + state.Q) / 2.0, mu_l1)
        P = state.P + A - W
        Q = state.Q + B - W
        if not (np.isfinite(W).all() and np.isfinite(P).all() and np.isfinite(Q).all()):
            raise FloatingPointError(f"non-finite values at iteration {k}")
        state = SolverState(A, B, W, P, Q, iteration=k)

        res_a = fro_norm(A - W)
        res_b = fro_norm(B - W)
        result.iteration_times.append(time.perf_counter() - tick)
        result.primal_residuals.append((res_a, res_b))
        if config.record_trace:
            result.objective_trace.append(objective_value(W, X, y, config))
        if callback is not None:
            callback(state, handle, xty)

        scale = max(1.0, fro_norm(W))
        if max(res_a, res_b) / scale < config.primal_tol:
            result.converged = True
            break

    result.W = state.W
    result.iterations_run = state.iteration
    result.wall_time = time.perf_counter() - start
    logger.debug(
        "fit_sturm: %d iterations, converged=%s, %.3fs",
        result.iterations_run, result.converged, result.wall_time,
    )
    return result


def objective_value(W, X, y, config):
    """Loss-weighted least squares plus the TNN and l1 penalties."""
    if isinstance(X, LabeledDataset):
        X, y = X.samples, X.labels if y is None else y
    X, y = _check_inputs(X, y)
    config = config.resolve(X.shape[1:])
    resid = y - X.reshape(X.shape[0], -1) @ np.ravel(W)
    value = 0.5 * config.alpha * float(resid @ resid)
    if config.tau:
        value += config.tau * tnn(W)
    if config.gamma:
        value += config.gamma * l1_norm(W)
    return value


def decision_values(W, X):
    X = np.asarray(X, dtype=np.float64)
    W = as_tensor3(W, "W")
    if X.shape[-3:] != W.shape:
        raise ValueError(f"sample shape {X.shape[-3:]} does not match W {W.shape}")
    return X.reshape(-1, W.size) @ W.ravel()


def predict(W, x):
    """Sign rule on ``<x, W>``; an exact zero maps to +1."""
    return 1 if inner_product(x, W) >= 0 else -1
