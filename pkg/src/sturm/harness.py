"""Evaluation protocol: synthetic data, resizing, feature selection, nested CV."""
import itertools
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.model_selection import StratifiedKFold

from .solver import SturmConfig, decision_values, fit_sturm
from .tensor_core import LabeledDataset, as_tensor3
from .tsvd import t_product

logger = logging.getLogger(__name__)

#: tau/gamma values searched by default (13 points, 1e-3 .. 1e3).
DEFAULT_GRID = (1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 1.0, 5.0, 1e1, 5e1, 1e2, 5e2, 1e3)
DEFAULT_BETAS = (0.3, 0.5, 0.7)
DEFAULT_ETAS = (1.0, 5.0, 10.0, 50.0, 100.0)


class FoldError(ValueError):
    """Cross-validation folds cannot be formed for the requested plan."""


def _ceil_fraction(fraction, n):
    # rounding first keeps e.g. 0.3 * 10 from becoming 4
    return int(math.ceil(round(fraction * n, 9)))


@dataclass(frozen=True)
class SynthSpec:
    dims: tuple
    n_samples: int
    true_tubal_rank: int
    density: float = 1.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError(f"dims must be three positive sizes, got {self.dims}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if not 1 <= self.true_tubal_rank <= min(dims[:2]):
            raise ValueError(
                f"true_tubal_rank must lie in [1, {min(dims[:2])}], "
                f"got {self.true_tubal_rank}"
            )
        if not 0 < self.density <= 1:
            raise ValueError(f"density must lie in (0, 1], got {self.density}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


def generate_synthetic(spec):
    """Draw ``(dataset, W_true)``.

    ``W_true`` is the t-product of Gaussian ``I1 x r x I3`` and ``r x I2 x I3``
    factors with all but ``ceil(density * I)`` randomly chosen entries zeroed,
    rescaled to unit Frobenius norm.  Samples have i.i.d. standard normal
    entries and ``y_m = sign(<X_m, W_true> + eps_m)`` with ``sign(0) = +1``.
    """
    rng = np.random.default_rng(spec.seed)
    i1, i2, i3 = spec.dims
    r = spec.true_tubal_rank
    w = t_product(rng.standard_normal((i1, r, i3)), rng.standard_normal((r, i2, i3)))
    size = w.size
    keep = rng.permutation(size)[: _ceil_fraction(spec.density, size)]
    mask = np.zeros(size, dtype=bool)
    mask[keep] = True
    w = np.where(mask.reshape(w.shape), w, 0.0)
    norm = np.linalg.norm(w)
    if norm > 0:
        w /= norm
    X = rng.standard_normal((spec.n_samples,) + spec.dims)
    noise = spec.noise_sigma * rng.standard_normal(spec.n_samples)
    score = X.reshape(spec.n_samples, -1) @ w.ravel() + noise
    y = np.where(score >= 0, 1, -1)
    return LabeledDataset(X, y), w


def _linear_resample(a, axis, out_len):
    n = a.shape[axis]
    if out_len == n:
        return a
    # pixel-centre alignment, source coordinates clamped to the edge samples
    x = (np.arange(out_len) + 0.5) * (n / out_len) - 0.5
    x = np.clip(x, 0.0, n - 1)
    lo = np.floor(x).astype(np.int64)
    hi = np.minimum(lo + 1, n - 1)
    frac = x - lo
    shape = [1] * a.ndim
    shape[axis] = out_len
    frac = frac.reshape(shape)
    return np.take(a, lo, axis=axis) * (1 - frac) + np.take(a, hi, axis=axis) * frac


def resize_tensor(a, beta):
    """Trilinear resize to ``ceil(beta * I_n)`` per mode."""
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    a = as_tensor3(a)
    if beta == 1:
        return a.copy()
    out = a
    for axis, n in enumerate(a.shape):
        out = _linear_resample(out, axis, max(1, _ceil_fraction(beta, n)))
    return np.ascontiguousarray(out)


def resize_samples(samples, beta):
    if beta == 1:
        return np.asarray(samples, dtype=np.float64)
    return np.stack([resize_tensor(x, beta) for x in samples])


def select_top_features(W, eta_percent):
    """0/1 mask of the ``ceil(eta% * I)`` largest-magnitude entries of ``W``.

    Ties go to the entry earlier in the tube-contiguous linearization.
    """
    if not 0 < eta_percent <= 100:
        raise ValueError(f"eta_percent must lie in (0, 100], got {eta_percent}")
    W = np.asarray(W, dtype=np.float64)
    flat = np.abs(W).ravel()
    count = _ceil_fraction(eta_percent / 100.0, flat.size)
    order = np.argsort(-flat, kind="stable")
    mask = np.zeros(flat.size)
    mask[order[:count]] = 1.0
    return mask.reshape(W.shape)


def sparsity(W, tol=0.0):
    """Fraction of entries with ``|w| <= tol``."""
    if tol < 0:
        raise ValueError(f"tol must be non-negative, got {tol}")
    return float(np.mean(np.abs(W) <= tol))


def accuracy(W, samples, labels):
    pred = np.where(decision_values(W, samples) >= 0, 1, -1)
    return float(np.mean(pred == np.asarray(labels)))


def stratified_folds(labels, n_folds, seed):
    """Test-index arrays of ``n_folds`` shuffled stratified folds.

    Raises :class:`FoldError` when some class has fewer members than folds,
    since that class would then be missing from at least one fold.
    """
    labels = np.asarray(labels)
    if n_folds < 2:
        raise FoldError(f"need at least 2 folds, got {n_folds}")
    classes, counts = np.unique(labels, return_counts=True)
    if counts.min() < n_folds:
        cls = classes[np.argmin(counts)]
        raise FoldError(
            f"class {cls} has {counts.min()} samples, fewer than {n_folds} folds; "
            "use fewer folds"
        )
    splitter = StratifiedKFold(n_splits=n_folds, shuffle=True, random_state=seed)
    placeholder = np.zeros(labels.size)
    return [test for _, test in splitter.split(placeholder, labels)]


@dataclass
class CvPlan:
    outer_folds: int = 10
    inner_folds: int = 9
    tau_grid: tuple = DEFAULT_GRID
    gamma_grid: tuple = DEFAULT_GRID
    beta_grid: tuple = DEFAULT_BETAS
    eta_grid: tuple = DEFAULT_ETAS
    rho: float = 1.0
    max_iters: int = 200
    primal_tol: float = 1e-4

    def __post_init__(self):
        for name in ("tau_grid", "gamma_grid", "beta_grid", "eta_grid"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ValueError(f"{name} must not be empty")
            setattr(self, name, values)
        if self.outer_folds < 2 or self.inner_folds < 2:
            raise ValueError("outer_folds and inner_folds must be >= 2")

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown plan keys: {sorted(unknown)}")
        return cls(**data)

    def candidates(self):
        """All (beta, tau, gamma, eta) combinations."""
        return list(itertools.product(
            self.beta_grid, self.tau_grid, self.gamma_grid, self.eta_grid))

    def solver_config(self, tau, gamma):
        return SturmConfig(
            tau=tau, gamma=gamma, rho=self.rho, max_iters=self.max_iters,
            primal_tol=self.primal_tol, record_trace=False,
        )


@dataclass
class FoldRecord:
    fold: int
    tau: float
    gamma: float
    beta: float
    eta: float
    accuracy: float
    sparsity: float
    iterations: int


@dataclass
class CvReport:
    """Outer-fold results of a nested cross-validation.

    Predictions use the refit coefficient tensor with every entry outside the
    top-eta% mask zeroed (masked Sturm, not the +SVM variant), and the
    reported sparsity is that of the masked tensor.
    """

    folds: list
    audit: list = field(default_factory=list, repr=False)

    def _stat(self, key):
        values = np.array([getattr(f, key) for f in self.folds])
        return float(values.mean()), float(values.std())

    @property
    def mean_accuracy(self):
        return self._stat("accuracy")[0]

    @property
    def std_accuracy(self):
        return self._stat("accuracy")[1]

    def summary(self):
        acc_mean, acc_std = self._stat("accuracy")
        sp_mean, sp_std = self._stat("sparsity")
        return {
            "accuracy_mean": acc_mean,
            "accuracy_std": acc_std,
            "sparsity_mean": sp_mean,
            "sparsity_std": sp_std,
            "accuracy_percent": f"{100 * acc_mean:.2f} +- {100 * acc_std:.2f}",
        }

    def to_dict(self):
        return {
            "folds": [asdict(f) for f in self.folds],
            "summary": self.summary(),
            "prediction": "masked-sturm",
        }


def _fit_and_score(samples, labels, train, evals, config, etas):
    result = fit_sturm(samples[train], labels[train].astype(np.float64), config)
    scores = []
    for eta in etas:
        w = result.W * select_top_features(result.W, eta)
        scores.append((accuracy(w, samples[evals], labels[evals]), sparsity(w)))
    return scores


def _selection_key(item):
    (beta, tau, gamma, eta), (acc, sp) = item
    # best accuracy, then sparser, smaller tau, smaller gamma, larger beta, larger eta
    return (-acc, -sp, tau, gamma, -beta, -eta)


def run_nested_cv(dataset, plan, seed=0, n_jobs=1):
    """Nested stratified cross-validation of masked Sturm.

    For every outer fold, (beta, tau, gamma, eta) is chosen by mean inner-CV
    accuracy on the outer-training samples only (ties: higher sparsity,
    smaller tau, smaller gamma, larger beta, larger eta), the model is refit
    on the whole outer-training set and scored on the outer test fold.  With
    a single candidate the inner search is skipped.

    ``CvReport.audit`` lists, for every fit, the global indices it was
    trained on and evaluated on.
    """
    if dataset.n_samples < plan.outer_folds:
        raise FoldError(
            f"{dataset.n_samples} samples cannot fill {plan.outer_folds} outer folds"
        )
    labels = dataset.labels
    outer = stratified_folds(labels, plan.outer_folds, seed)
    all_idx = np.arange(dataset.n_samples)
    candidates = plan.candidates()
    resized = {beta: resize_samples(dataset.samples, beta) for beta in plan.beta_grid}

    folds, audit = [], []
    for f, test in enumerate(outer):
        train = np.setdiff1d(all_idx, test)
        if len(candidates) == 1:
            best = candidates[0]
        else:
            inner = stratified_folds(labels[train], plan.inner_folds, seed + 1 + f)
            splits = [(np.setdiff1d(train, train[v]), train[v]) for v in inner]
            jobs = [
                (beta, tau, gamma, i)
                for beta in plan.beta_grid
                for tau in plan.tau_grid
                for gamma in plan.gamma_grid
                for i in range(len(splits))
            ]
            results = Parallel(n_jobs=n_jobs)(
                delayed(_fit_and_score)(
                    resized[beta], labels, splits[i][0], splits[i][1],
                    plan.solver_config(tau, gamma), plan.eta_grid,
                )
                for beta, tau, gamma, i in jobs
            )
            totals = {}
            for (beta, tau, gamma, i), scores in zip(jobs, results):
                audit.append({
                    "outer_fold": f, "stage": "inner",
                    "train": splits[i][0].tolist(), "eval": splits[i][1].tolist(),
                })
                for eta, (acc, sp) in zip(plan.eta_grid, scores):
                    tot = totals.setdefault((beta, tau, gamma, eta), [0.0, 0.0])
                    tot[0] += acc / len(splits)
                    tot[1] += sp / len(splits)
            best = min(totals.items(), key=_selection_key)[0]

        beta, tau, gamma, eta = best
        samples = resized[beta]
        result = fit_sturm(
            samples[train], labels[train].astype(np.float64),
            plan.solver_config(tau, gamma),
        )
        w = result.W * select_top_features(result.W, eta)
        audit.append({
            "outer_fold": f, "stage": "refit",
            "train": train.tolist(), "eval": test.tolist(),
        })
        folds.append(FoldRecord(
            fold=f, tau=tau, gamma=gamma, beta=beta, eta=eta,
            accuracy=accuracy(w, samples[test], labels[test]),
            sparsity=sparsity(w), iterations=result.iterations_run,
        ))
        logger.info("outer fold %d: %s", f, folds[-1])
    return CvReport(folds=folds, audit=audit)


def benchmark_iterations(dims, n_samples, iters, seed=0, tau=0.01, gamma=0.01):
    """Per-iteration wall times of a fixed-budget fit on random data."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_samples,) + tuple(dims))
    y = np.where(rng.standard_normal(n_samples) >= 0, 1.0, -1.0)
    config = SturmConfig(tau=tau, gamma=gamma, max_iters=iters, primal_tol=0.0,
                         record_trace=False)
    return fit_sturm(X, y, config).iteration_times
