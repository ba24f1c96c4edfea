"""Single-hidden-layer tanh network with a logistic output."""

from __future__ import annotations

from typing import Any

import numpy as np
from scipy.special import expit


def n_parameters(n_inputs: int, hidden: int) -> int:
    return n_inputs * hidden + hidden + hidden + 1


def unpack(theta: np.ndarray, n_inputs: int, hidden: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Views (W1, b1, w2, b2) into the flat parameter vector."""
    split = n_inputs * hidden
    W1 = theta[:split].reshape(n_inputs, hidden)
    b1 = theta[split : split + hidden]
    w2 = theta[split + hidden : split + 2 * hidden]
    return W1, b1, w2, theta[-1]


def margin(theta: np.ndarray, X: np.ndarray, hidden: int) -> np.ndarray:
    W1, b1, w2, b2 = unpack(theta, X.shape[1], hidden)
    return np.tanh(X @ W1 + b1) @ w2 + b2


def cross_entropy(theta: np.ndarray, X: np.ndarray, y: np.ndarray, hidden: int) -> float:
    z = margin(theta, X, hidden)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def cross_entropy_gradient(theta: np.ndarray, X: np.ndarray, y: np.ndarray, hidden: int) -> np.ndarray:
    """Backpropagated gradient of the mean cross-entropy, flat like ``theta``."""
    W1, b1, w2, b2 = unpack(theta, X.shape[1], hidden)
    A = np.tanh(X @ W1 + b1)
    dz = (expit(A @ w2 + b2) - y) / len(y)
    dpre = np.outer(dz, w2) * (1.0 - A * A)
    return np.concatenate([(X.T @ dpre).ravel(), dpre.sum(axis=0), A.T @ dz, [dz.sum()]])


class MLP:
    def __init__(self, hidden: int, batch_size: int, learning_rate: float, epochs: int, init_scale: float):
        self.hidden = hidden
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.init_scale = init_scale
        self.theta = np.zeros(0)

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int, n_jobs: int = 1) -> MLP:
        rng = np.random.default_rng(seed)
        y = y.astype(float)
        theta = rng.uniform(-self.init_scale, self.init_scale, n_parameters(X.shape[1], self.hidden))
        for _ in range(self.epochs):
            order = rng.permutation(len(X))
            for start in range(0, len(X), self.batch_size):
                batch = order[start : start + self.batch_size]
                theta -= self.learning_rate * cross_entropy_gradient(theta, X[batch], y[batch], self.hidden)
        self.theta = theta
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return expit(margin(self.theta, X, self.hidden))

    def to_dict(self) -> dict[str, Any]:
        return {"theta": self.theta.tolist()}

    def load(self, data: dict[str, Any]) -> MLP:
        self.theta = np.asarray(data["theta"], dtype=float)
        return self


def gradient_check(X: np.ndarray, y: np.ndarray, hidden: int, epsilon: float, rng: np.random.Generator, n_coordinates: int = 32) -> float:
    """Max relative error between backprop and central differences at a random parameter point."""
    theta = rng.uniform(-0.5, 0.5, n_parameters(X.shape[1], hidden))
    analytic = cross_entropy_gradient(theta, X, y, hidden)
    size = len(theta)
    coordinates = np.arange(size) if size <= max(n_coordinates, 20) else np.sort(rng.choice(size, size=max(n_coordinates, 20), replace=False))
    worst = 0.0
    for i in coordinates:
        step = np.zeros(size)
        step[i] = epsilon
        numeric = (cross_entropy(theta + step, X, y, hidden) - cross_entropy(theta - step, X, y, hidden)) / (2 * epsilon)
        error = abs(analytic[i] - numeric) / max(abs(analytic[i]) + abs(numeric), 1e-6)
        worst = max(worst, error)
    return worst
