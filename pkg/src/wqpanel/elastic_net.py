"""Elastic-net linear regression fit by cyclic coordinate descent.

Minimizes sum((y_i - x_i'b)^2) / (2n) + lam*(1-alpha)/2 * sum(b_j^2)
+ lam*alpha * sum(|b_j|) with an unpenalized intercept. Predictors are
standardized internally before penalization by default (coefficients are
mapped back to the original scale on return).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ElasticNetConfig:
    lam: float = 1e-3
    alpha: float = 0.5
    tol: float = 1e-7
    max_iter: int = 1000
    standardize_internally: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    coefficients: np.ndarray
    config: ElasticNetConfig
    sweeps_used: int
    objective_trace: tuple[float, ...] = ()


def _working_space(X: np.ndarray, standardize: bool):
    """Centered (and optionally scaled) predictors plus the back-mapping data."""
    x_mean = X.mean(axis=0)
    if standardize:
        sd = X.std(axis=0, ddof=0)
        scale = np.where(sd == 0.0, 1.0, sd)
    else:
        scale = np.ones(X.shape[1])
    Xs = (X - x_mean) / scale
    return Xs, x_mean, scale


def _soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def objective_value(X: np.ndarray, y: np.ndarray, intercept: float,
                    coefficients: np.ndarray, lam: float, alpha: float) -> float:
    """The penalized least-squares objective at the given parameters."""
    n = len(y)
    resid = y - intercept - X @ coefficients
    return float(
        resid @ resid / (2 * n)
        + lam * (1 - alpha) / 2 * coefficients @ coefficients
        + lam * alpha * np.abs(coefficients).sum()
    )


def fit_elastic_net(X, y, cfg: ElasticNetConfig, keep_trace: bool = False) -> LinearModel:
    """Cyclic coordinate descent with soft-thresholding and Gram-matrix updates.

    Deterministic (fixed cyclic order over columns); converged when the
    largest coefficient change in a sweep drops below cfg.tol, or after
    cfg.max_iter sweeps. With keep_trace the per-sweep objective (in the
    internal working space) is recorded on the model.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    n, p = X.shape
    if n == 0:
        raise ValueError("fit_elastic_net requires at least one row")
    if len(y) != n:
        raise ValueError("y length does not match X")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("non-finite values in input")

    Xs, x_mean, scale = _working_space(X, cfg.standardize_internally)
    y_mean = float(y.mean())
    yc = y - y_mean

    gram = Xs.T @ Xs / n
    xy = Xs.T @ yc / n
    diag = np.diag(gram).copy()
    l1 = cfg.lam * cfg.alpha
    l2 = cfg.lam * (1.0 - cfg.alpha)

    b = np.zeros(p)
    trace: list[float] = []
    sweeps = 0
    for sweep in range(cfg.max_iter):
        sweeps = sweep + 1
        max_delta = 0.0
        for j in range(p):
            if diag[j] == 0.0:
                continue  # constant column stays at 0
            rho = xy[j] - gram[j] @ b + diag[j] * b[j]
            new = _soft_threshold(rho, l1) / (diag[j] + l2)
            delta = abs(new - b[j])
            if delta > max_delta:
                max_delta = delta
            b[j] = new
        if keep_trace:
            trace.append(objective_value(Xs, yc, 0.0, b, cfg.lam, cfg.alpha))
        if max_delta < cfg.tol:
            break

    coefficients = b / scale
    intercept = y_mean - float(coefficients @ x_mean)
    return LinearModel(
        intercept=intercept, coefficients=coefficients, config=cfg,
        sweeps_used=sweeps, objective_trace=tuple(trace))


def predict_linear(model: LinearModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[1] != len(model.coefficients):
        raise ValueError(
            f"width mismatch: model has {len(model.coefficients)} coefficients, "
            f"X has {X.shape[1]} columns")
    return model.intercept + X @ model.coefficients


def lambda_max(X, y, standardize: bool = True) -> float:
    """Smallest lam at which the alpha=1 (lasso) solution is all-zero slopes.

    Computed in the same working space the solver penalizes in.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Xs, _, _ = _working_space(X, standardize)
    return float(np.max(np.abs(Xs.T @ (y - y.mean())))) / len(y)


def kkt_max_violation(X, y, model: LinearModel) -> float:
    """Largest stationarity-condition violation at the fitted coefficients.

    Checked in the solver's working space: for b_j != 0 the subgradient
    must vanish; for b_j = 0 the gradient must sit inside [-lam*alpha,
    lam*alpha]. A converged fit keeps this below 10 * tol.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    cfg = model.config
    Xs, _, scale = _working_space(X, cfg.standardize_internally)
    b = model.coefficients * scale
    yc = y - y.mean()
    n = len(y)
    grad = -(Xs.T @ (yc - Xs @ b)) / n
    l1 = cfg.lam * cfg.alpha
    l2 = cfg.lam * (1.0 - cfg.alpha)

    worst = 0.0
    for j in range(len(b)):
        if b[j] != 0.0:
            violation = abs(grad[j] + l2 * b[j] + l1 * np.sign(b[j]))
        else:
            violation = max(0.0, abs(grad[j]) - l1)
        worst = max(worst, float(violation))
    return worst


DEFAULT_LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
DEFAULT_ALPHA_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
