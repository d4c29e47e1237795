"""Feed-forward MLP regressor trained by backpropagation with mini-batch SGD.

Linear output unit, squared-error loss with optional L2 weight decay.
Deliberately no internal input scaling: the network consumes the design
matrix as given, which is exactly what makes it sensitive to whether the
features were standardized upstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_INIT_TAG = 101
_SPLIT_TAG = 102
_EPOCH_TAG = 103

ACTIVATIONS = ("relu", "tanh", "logistic")


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class EarlyStopConfig:
    validation_fraction: float = 0.1
    patience: int = 10

    def __post_init__(self):
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass(frozen=True)
class MLPConfig:
    hidden_layers: tuple[int, ...] = (64,)
    activation: str = "relu"
    learning_rate: float = 0.01
    batch_size: int = 32
    max_epochs: int = 200
    l2_penalty: float = 0.0
    momentum: float = 0.0
    seed: int = 0
    early_stop: EarlyStopConfig | None = None

    def __post_init__(self):
        if any(w < 1 for w in self.hidden_layers):
            raise ValueError("hidden layer widths must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


@dataclass(frozen=True)
class MLPModel:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    config: MLPConfig


@dataclass(frozen=True)
class TrainingTrace:
    train_loss: tuple[float, ...]
    val_loss: tuple[float, ...] | None = None


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return 1.0 / (1.0 + np.exp(-z))  # logistic


def _act_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(float)
    if kind == "tanh":
        return 1.0 - np.tanh(z) ** 2
    s = 1.0 / (1.0 + np.exp(-z))
    return s * (1.0 - s)


def init_params(cfg: MLPConfig, n_inputs: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """He-style scaled normal weights, zero biases, seeded."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _INIT_TAG]))
    widths = [n_inputs, *cfg.hidden_layers, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(widths, widths[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def forward(weights, biases, X: np.ndarray, activation: str) -> np.ndarray:
    a = X
    for W, b in zip(weights[:-1], biases[:-1]):
        a = _act(a @ W + b, activation)
    return (a @ weights[-1] + biases[-1]).ravel()


def loss_and_gradients(weights, biases, X: np.ndarray, y: np.ndarray,
                       activation: str, l2_penalty: float):
    """Loss = mean((yhat - y)^2) + l2/2 * sum ||W||^2, with analytic gradients.

    Biases are not penalized. Returns (loss, grad_weights, grad_biases).
    """
    n = len(y)
    zs, activations = [], [X]
    a = X
    for W, b in zip(weights[:-1], biases[:-1]):
        z = a @ W + b
        zs.append(z)
        a = _act(z, activation)
        activations.append(a)
    yhat = (a @ weights[-1] + biases[-1]).ravel()

    err = yhat - y
    loss = float(np.mean(err**2))
    loss += l2_penalty / 2.0 * sum(float((W**2).sum()) for W in weights)

    delta = (2.0 * err / n)[:, None]
    grad_w = [np.empty(0)] * len(weights)
    grad_b = [np.empty(0)] * len(biases)
    grad_w[-1] = activations[-1].T @ delta + l2_penalty * weights[-1]
    grad_b[-1] = delta.sum(axis=0)
    for layer in range(len(weights) - 2, -1, -1):
        delta = (delta @ weights[layer + 1].T) * _act_grad(zs[layer], activation)
        grad_w[layer] = activations[layer].T @ delta + l2_penalty * weights[layer]
        grad_b[layer] = delta.sum(axis=0)
    return loss, grad_w, grad_b


def _epoch_permutation(seed: int, epoch: int, n: int) -> np.ndarray:
    # a pure function of (seed, epoch): reruns and row-streaming order cannot drift it
    rng = np.random.default_rng(np.random.SeedSequence([seed, _EPOCH_TAG, epoch]))
    return rng.permutation(n)


def fit_mlp(X, y, cfg: MLPConfig) -> tuple[MLPModel, TrainingTrace]:
    """Mini-batch SGD (optional momentum) over shuffled epochs.

    Raises TrainingDivergedError when the loss goes non-finite; try a
    smaller learning rate. With early stopping enabled, a seeded
    validation split is held out and the best-validation parameters are
    restored on exit.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if X.ndim != 2 or len(X) != n or n == 0:
        raise ValueError("X must be 2-D with rows matching y")

    if cfg.early_stop is not None:
        split_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _SPLIT_TAG]))
        perm = split_rng.permutation(n)
        n_val = max(1, int(round(cfg.early_stop.validation_fraction * n)))
        if n_val >= n:
            raise ValueError("validation fraction leaves no training rows")
        val_idx, train_idx = perm[:n_val], perm[n_val:]
        X_val, y_val = X[val_idx], y[val_idx]
        X_tr, y_tr = X[train_idx], y[train_idx]
    else:
        X_tr, y_tr = X, y
        X_val = y_val = None

    weights, biases = init_params(cfg, X.shape[1])
    vel_w = [np.zeros_like(W) for W in weights]
    vel_b = [np.zeros_like(b) for b in biases]

    train_losses: list[float] = []
    val_losses: list[float] = []
    best_val = np.inf
    best_params = None
    since_best = 0
    n_tr = len(y_tr)

    for epoch in range(cfg.max_epochs):
        order = _epoch_permutation(cfg.seed, epoch, n_tr)
        for start in range(0, n_tr, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            _, gw, gb = loss_and_gradients(weights, biases, X_tr[batch], y_tr[batch],
                                           cfg.activation, cfg.l2_penalty)
            for layer in range(len(weights)):
                vel_w[layer] = cfg.momentum * vel_w[layer] - cfg.learning_rate * gw[layer]
                vel_b[layer] = cfg.momentum * vel_b[layer] - cfg.learning_rate * gb[layer]
                weights[layer] = weights[layer] + vel_w[layer]
                biases[layer] = biases[layer] + vel_b[layer]

        epoch_loss, _, _ = loss_and_gradients(weights, biases, X_tr, y_tr,
                                              cfg.activation, cfg.l2_penalty)
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(
                f"training loss became non-finite at epoch {epoch}; "
                f"reduce learning_rate (currently {cfg.learning_rate})")
        train_losses.append(epoch_loss)

        if cfg.early_stop is not None:
            val_pred = forward(weights, biases, X_val, cfg.activation)
            val_loss = float(np.mean((val_pred - y_val) ** 2))
            val_losses.append(val_loss)
            if val_loss < best_val:
                best_val = val_loss
                best_params = ([W.copy() for W in weights], [b.copy() for b in biases])
                since_best = 0
            else:
                since_best += 1
                if since_best > cfg.early_stop.patience:
                    break

    if cfg.early_stop is not None and best_params is not None:
        weights, biases = best_params

    model = MLPModel(weights=tuple(weights), biases=tuple(biases), config=cfg)
    trace = TrainingTrace(
        train_loss=tuple(train_losses),
        val_loss=tuple(val_losses) if cfg.early_stop is not None else None)
    return model, trace


def predict_mlp(model: MLPModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[1] != model.weights[0].shape[0]:
        raise ValueError(
            f"width mismatch: model expects {model.weights[0].shape[0]} inputs, "
            f"got {X.shape[1]}")
    return forward(model.weights, model.biases, X, model.config.activation)
