"""Closed-form ridge regression with a cross-validated shared penalty.

The objective per output is the sum of squared errors plus lambda times the
squared coefficient norm, intercept excluded from the penalty.  All outputs
share one lambda, chosen to minimize the mean cross-validation MSE summed
over outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from .data import Dataset, kfold_split

DEFAULT_LAMBDAS = tuple(np.logspace(-3, 3, 13))


def solve_ridge(X, Y, lam: float, intercept: bool = True) -> np.ndarray:
    """Minimize ||Z b - y||^2 + lam ||b_noint||^2 per output column.

    Returns coefficients with shape (n_outputs, p) where p includes the
    leading intercept column when ``intercept`` is set.  Raises
    numpy.linalg.LinAlgError when the normal matrix is singular.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    Z = np.column_stack([np.ones(X.shape[0]), X]) if intercept else X
    penalty = np.eye(Z.shape[1]) * lam
    if intercept:
        penalty[0, 0] = 0.0
    gram = Z.T @ Z + penalty
    coef = np.linalg.solve(gram, Z.T @ Y)
    if not np.all(np.isfinite(coef)):
        raise np.linalg.LinAlgError("non-finite ridge solution")
    return coef.T


@dataclass(frozen=True)
class RidgeModel:
    """Per-output coefficient rows (intercept first) at the selected lambda."""

    coef: np.ndarray      # (n_outputs, n_features + 1)
    lam: float
    cv_mse: dict          # lambda -> mean CV MSE summed over outputs

    @property
    def n_features(self) -> int:
        return self.coef.shape[1] - 1

    @property
    def n_outputs(self) -> int:
        return self.coef.shape[0]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise InputError(f"expected (N, {self.n_features}) inputs, got {X.shape}")
        return X @ self.coef[:, 1:].T + self.coef[:, 0]


def fit_ridge(
    data: Dataset,
    lambdas=DEFAULT_LAMBDAS,
    folds: int = 10,
    seed: int = 0,
) -> RidgeModel:
    """Cross-validate the shared penalty, then solve in closed form.

    A singular normal matrix at lambda = 0 falls back to the smallest
    positive candidate.
    """
    if data.n_rows <= data.n_features + 1:
        raise InputError(
            f"need more rows ({data.n_rows}) than coefficients ({data.n_features + 1})"
        )
    lambdas = sorted(float(l) for l in lambdas)
    if any(l < 0 for l in lambdas):
        raise InputError("lambda candidates must be nonnegative")
    assignment = kfold_split(data.n_rows, folds=folds, seed=seed)
    cv_mse = {}
    for lam in lambdas:
        total = 0.0
        ok = True
        for k in range(folds):
            test = assignment == k
            try:
                coef = solve_ridge(data.X[~test], data.Y[~test], lam)
            except np.linalg.LinAlgError:
                ok = False
                break
            Z = np.column_stack([np.ones(test.sum()), data.X[test]])
            resid = Z @ coef.T - data.Y[test]
            total += float(np.mean(resid**2) * data.n_outputs)
        if ok:
            cv_mse[lam] = total / folds
    if not cv_mse:
        raise InputError("every candidate lambda left the normal matrix singular")
    best = min(cv_mse, key=lambda l: (cv_mse[l], l))
    try:
        coef = solve_ridge(data.X, data.Y, best)
    except np.linalg.LinAlgError:
        positive = [l for l in lambdas if l > 0]
        if not positive:
            raise
        best = positive[0]
        coef = solve_ridge(data.X, data.Y, best)
    return RidgeModel(coef=coef, lam=best, cv_mse=cv_mse)
