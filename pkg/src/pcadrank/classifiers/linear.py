from __future__ import annotations

import logging
from typing import Any

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

logger = logging.getLogger(__name__)


class LogisticGLM:
    """L2-penalised logistic regression; the intercept is not penalised."""

    def __init__(self, l2: float, tol: float, max_iter: int):
        self.l2 = l2
        self.tol = tol
        self.max_iter = max_iter
        self.coef = np.zeros(0)
        self.intercept = 0.0

    def _objective(self, theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
        w, b = theta[:-1], theta[-1]
        margin = X @ w + b
        loss = np.mean(np.logaddexp(0.0, margin) - y * margin) + 0.5 * self.l2 * (w @ w)
        residual = (expit(margin) - y) / len(y)
        grad = np.append(X.T @ residual + self.l2 * w, residual.sum())
        return float(loss), grad

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int, n_jobs: int = 1) -> LogisticGLM:
        result = minimize(
            self._objective,
            np.zeros(X.shape[1] + 1),
            args=(X, y.astype(float)),
            jac=True,
            method="L-BFGS-B",
            # the component test at tol/sqrt(p) bounds the gradient norm by tol; ftol=0 disables the loss test
            options={"maxiter": self.max_iter, "gtol": self.tol / np.sqrt(X.shape[1] + 1), "ftol": 0.0},
        )
        self.coef, self.intercept = result.x[:-1], float(result.x[-1])
        grad_norm = float(np.linalg.norm(result.jac))
        if grad_norm > self.tol:
            logger.debug("glm stopped after %d iterations with gradient norm %.2e", result.nit, grad_norm)
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coef + self.intercept

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return expit(self.decision_function(X))

    def to_dict(self) -> dict[str, Any]:
        return {"coef": self.coef.tolist(), "intercept": self.intercept}

    def load(self, data: dict[str, Any]) -> LogisticGLM:
        self.coef = np.asarray(data["coef"], dtype=float)
        self.intercept = float(data["intercept"])
        return self
