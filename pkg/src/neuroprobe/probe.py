"""Linear probes on frozen embeddings.

Logistic regression minimizes

    (1 / reg_C) * 0.5 * ||W||^2  +  sum_i w[y_i] * CE_i

with the bias left unpenalized, using :func:`neuroprobe.optim.lbfgs` from a
zero start. Binary problems use one sigmoid row, multiclass a softmax.
Ridge and OLS center X and y to absorb the intercept.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.special import expit, log_expit, logsumexp, softmax

from . import metrics
from .optim import lbfgs

C_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 1e2)
ALPHA_GRID = tuple(float(a) for a in np.logspace(-3, 2, 11))


@dataclass(frozen=True)
class ProbeConfig:
    c_grid: tuple[float, ...] = C_GRID
    alpha_grid: tuple[float, ...] = ALPHA_GRID
    selection_metric: str = "auprc"  # auprc | macro_f1 | val_mae
    balanced: bool = True
    max_iter: int = 1000
    tol: float = 1e-6
    inner_k: int = 5

    def __post_init__(self):
        if not self.c_grid or not self.alpha_grid:
            raise ValueError("hyperparameter grids must be non-empty")
        if min(self.c_grid) <= 0 or min(self.alpha_grid) <= 0:
            raise ValueError("grid values must be positive")
        if self.selection_metric not in ("auprc", "macro_f1", "val_mae"):
            raise ValueError(f"unknown selection metric {self.selection_metric!r}")


# ---------------------------------------------------------------- standardization


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


def fit_standardizer(X) -> Standardizer:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty 2-D training matrix")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    const = np.ptp(X, axis=0) == 0
    # constant columns map exactly to zero
    mean[const] = X[0, const]
    scale[const] = 1.0
    return Standardizer(mean, scale)


def apply(standardizer: Standardizer, X) -> np.ndarray:
    return standardizer.apply(X)


# ---------------------------------------------------------------- logistic


@dataclass(frozen=True)
class LogisticProbe:
    weights: np.ndarray  # (rows, d); one row when binary
    bias: np.ndarray
    classes: np.ndarray
    reg_C: float
    class_weights: np.ndarray
    max_iter: int
    n_iter: int = 0
    converged: bool = True
    loss: float = float("nan")

    @property
    def binary(self) -> bool:
        return len(self.classes) == 2

    def decision_function(self, X) -> np.ndarray:
        z = np.asarray(X, dtype=float) @ self.weights.T + self.bias
        return z[:, 0] if self.binary else z

    def predict_proba(self, X) -> np.ndarray:
        z = self.decision_function(X)
        if self.binary:
            p = expit(z)
            return np.column_stack([1 - p, p])
        return softmax(z, axis=1)

    def predict(self, X) -> np.ndarray:
        return self.classes[np.argmax(self.predict_proba(X), axis=1)]

    def to_json(self) -> dict:
        return {
            "kind": "logistic",
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "classes": self.classes.tolist(),
            "reg_C": self.reg_C,
            "class_weights": self.class_weights.tolist(),
            "max_iter": self.max_iter,
            "n_iter": self.n_iter,
            "converged": self.converged,
        }


def balanced_class_weights(y_idx: np.ndarray, n_classes: int) -> np.ndarray:
    counts = np.bincount(y_idx, minlength=n_classes).astype(float)
    return len(y_idx) / (n_classes * counts)


def logistic_objective(params, X, y_idx, sample_w, reg_C, n_classes):
    """Penalized weighted cross-entropy and its gradient w.r.t. flat params."""
    n, d = X.shape
    rows = 1 if n_classes == 2 else n_classes
    W = params[: rows * d].reshape(rows, d)
    b = params[rows * d :]
    z = X @ W.T + b
    if rows == 1:
        z = z[:, 0]
        # -log p(y) = log(1 + e^z) - y z
        ce = -log_expit(z) + (1 - y_idx) * z
        resid = (expit(z) - y_idx) * sample_w
        gW = resid[None, :] @ X
        gb = np.array([resid.sum()])
    else:
        lse = logsumexp(z, axis=1)
        ce = lse - z[np.arange(n), y_idx]
        P = np.exp(z - lse[:, None])
        P[np.arange(n), y_idx] -= 1.0
        P *= sample_w[:, None]
        gW = P.T @ X
        gb = P.sum(axis=0)
    loss = 0.5 / reg_C * float(np.sum(W * W)) + float(sample_w @ ce)
    grad = np.concatenate([(gW + W / reg_C).ravel(), gb])
    return loss, grad


def _encode(y) -> tuple[np.ndarray, np.ndarray]:
    classes, y_idx = np.unique(np.asarray(y), return_inverse=True)
    return classes, y_idx.astype(np.int64)


def fit_logistic(X, y, reg_C: float = 1.0, balanced: bool = True, max_iter: int = 1000,
                 tol: float = 1e-6, init=None) -> LogisticProbe:
    X = np.asarray(X, dtype=float)
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite values")
    if reg_C <= 0:
        raise ValueError("reg_C must be positive")
    classes, y_idx = _encode(y)
    if len(classes) < 2:
        raise ValueError("y contains a single class")
    K = len(classes)
    cw = balanced_class_weights(y_idx, K) if balanced else np.ones(K)
    sw = cw[y_idx]
    rows = 1 if K == 2 else K
    d = X.shape[1]
    x0 = np.zeros(rows * (d + 1)) if init is None else np.asarray(init, dtype=float)
    res = lbfgs(lambda p: logistic_objective(p, X, y_idx, sw, reg_C, K), x0, memory=10, tol=tol, max_iter=max_iter)
    W = res.x[: rows * d].reshape(rows, d)
    b = res.x[rows * d :]
    return LogisticProbe(W, b, classes, float(reg_C), cw, max_iter, res.n_iter, res.converged, res.fun)


def _selection_score(probe: LogisticProbe, X, y, metric: str) -> float:
    y = np.asarray(y)
    if metric == "auprc":
        pos = probe.classes[-1]
        return metrics.auprc(probe.predict_proba(X)[:, -1], (y == pos).astype(int))
    if metric == "macro_f1":
        classes = probe.classes
        lookup = {c: i for i, c in enumerate(classes.tolist())}
        truth = np.array([lookup.get(v, -1) for v in y.tolist()])
        pred = np.argmax(probe.predict_proba(X), axis=1)
        return float(np.mean(metrics.per_class_f1(pred, truth, len(classes))))
    raise ValueError(f"metric {metric!r} does not apply to classifiers")


@dataclass(frozen=True)
class GridSearchResult:
    probe: LogisticProbe
    reg_C: float
    scores: dict[float, float] = field(default_factory=dict)


def grid_search_logistic(train, validation, config: ProbeConfig = ProbeConfig()) -> GridSearchResult:
    """Select C on ``validation``, then refit on train + validation.

    Ties go to the smaller C.
    """
    Xt, yt = np.asarray(train[0], dtype=float), np.asarray(train[1])
    Xv, yv = np.asarray(validation[0], dtype=float), np.asarray(validation[1])
    if len(yv) == 0:
        raise ValueError("validation set is empty")
    scores = {}
    best_c, best = None, -np.inf
    for c in sorted(config.c_grid):
        probe = fit_logistic(Xt, yt, c, config.balanced, config.max_iter, config.tol)
        s = _selection_score(probe, Xv, yv, config.selection_metric)
        scores[c] = s
        if s > best or best_c is None:
            best_c, best = c, s
    full = fit_logistic(np.vstack([Xt, Xv]), np.concatenate([yt, yv]), best_c, config.balanced,
                        config.max_iter, config.tol)
    return GridSearchResult(full, best_c, scores)


# ---------------------------------------------------------------- regression


@dataclass(frozen=True)
class RidgeProbe:
    weights: np.ndarray
    intercept: float
    alpha: float

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.intercept

    def to_json(self) -> dict:
        return {"kind": "ridge", **{k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}}


def _center(X, y, fit_intercept):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ValueError("X must be (n, d) and y length n with n >= 1")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("non-finite input")
    if not fit_intercept:
        return X, y, np.zeros(X.shape[1]), 0.0
    xm, ym = X.mean(axis=0), y.mean()
    return X - xm, y - ym, xm, ym


def fit_ridge(X, y, alpha: float, fit_intercept: bool = True) -> RidgeProbe:
    if alpha <= 0:
        raise ValueError("alpha must be positive; use fit_ols for alpha = 0")
    Xc, yc, xm, ym = _center(X, y, fit_intercept)
    n, d = Xc.shape
    if d <= n:
        w = scipy.linalg.solve(Xc.T @ Xc + alpha * np.eye(d), Xc.T @ yc, assume_a="sym")
    else:
        # dual form: w = Xc^T (Xc Xc^T + alpha I)^-1 yc
        w = Xc.T @ scipy.linalg.solve(Xc @ Xc.T + alpha * np.eye(n), yc, assume_a="sym")
    return RidgeProbe(w, float(ym - xm @ w), float(alpha))


def fit_ols(X, y, fit_intercept: bool = True) -> RidgeProbe:
    """Least squares; minimum-norm solution when rank deficient."""
    Xc, yc, xm, ym = _center(X, y, fit_intercept)
    w, *_ = np.linalg.lstsq(Xc, yc, rcond=None)
    return RidgeProbe(w, float(ym - xm @ w), 0.0)


def _inner_folds(groups: np.ndarray, inner_k: int, seed: int):
    from .splits import patient_kfold

    plan = patient_kfold(np.unique(groups).tolist(), inner_k, seed)
    for f in plan:
        test = np.isin(groups, list(f.test))
        yield ~test, test


def nested_cv_ridge(X, y, groups=None, alpha_grid: Sequence[float] = ALPHA_GRID, inner_k: int = 5,
                    seed: int = 0) -> tuple[RidgeProbe, float, dict[float, float]]:
    """Pick alpha by mean inner-validation MAE over subject-level folds; ties go to the larger alpha.

    Returns the probe refit on all rows, the chosen alpha and the inner MAE per alpha.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    groups = np.arange(len(y)) if groups is None else np.asarray(groups)
    grid = sorted({float(a) for a in alpha_grid}, reverse=True)
    if len(grid) == 1:
        return fit_ridge(X, y, grid[0]), grid[0], {}
    folds = list(_inner_folds(groups, inner_k, seed))
    cv_mae = {}
    for a in grid:
        errs = [metrics.mae(fit_ridge(X[tr], y[tr], a).predict(X[te]), y[te]) for tr, te in folds]
        cv_mae[a] = float(np.mean(errs))
    best = min(grid, key=lambda a: (cv_mae[a], -a))
    return fit_ridge(X, y, best), best, cv_mae


@dataclass(frozen=True)
class MeanPredictor:
    value: float

    def predict(self, X) -> np.ndarray:
        n = X if isinstance(X, (int, np.integer)) else len(X)
        return np.full(n, self.value)


def train_mean_baseline(train_y) -> MeanPredictor:
    y = np.asarray(train_y, dtype=float)
    if y.size == 0:
        raise ValueError("train_y is empty")
    return MeanPredictor(float(y.mean()))
