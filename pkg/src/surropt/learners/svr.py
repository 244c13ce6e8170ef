"""Epsilon-insensitive support vector regression with an RBF kernel.

Each output is solved by sequential minimal optimization on the stacked
dual (positive and negative tube multipliers as one box-constrained vector
with a sum-to-zero coupling).  The working pair is the maximal violating
pair, and the solve stops when the KKT violation drops below ``tol``.
Non-convergence within the iteration cap raises a resource error that
carries the best model found so far.

The penalty C may be a single value or a candidate list cross-validated
with shared folds; the default bandwidth is 1 / (n_features * Var(X)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError, ResourceLimitError
from .data import Dataset, kfold_split

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)
DEFAULT_EPSILON = 0.1
DEFAULT_TOL = 1e-3


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def scale_gamma(X) -> float:
    """1 / (n_features * variance of all feature values)."""
    X = np.asarray(X, dtype=float)
    var = float(X.var())
    if var <= 0:
        var = 1.0
    return 1.0 / (X.shape[1] * var)


def smo_solve(K, y, C, epsilon, tol=DEFAULT_TOL, max_iter=None):
    """Solve one output's dual; returns (beta, b, iterations, converged).

    beta are the per-sample dual coefficients (difference of the two tube
    multipliers), bounded by [-C, C] and summing to zero.
    """
    n = K.shape[0]
    if max_iter is None:
        max_iter = max(20_000, 300 * n)
    a = np.zeros(2 * n)                       # stacked multipliers, box [0, C]
    z = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([epsilon - y, epsilon + y])
    G = p.copy()                              # gradient of the dual objective
    sample = np.concatenate([np.arange(n), np.arange(n)])

    it = 0
    converged = False
    while it < max_iter:
        zg = -z * G
        up = ((z > 0) & (a < C - 1e-12)) | ((z < 0) & (a > 1e-12))
        low = ((z > 0) & (a > 1e-12)) | ((z < 0) & (a < C - 1e-12))
        if not up.any() or not low.any():
            converged = True
            break
        up_vals = np.where(up, zg, -np.inf)
        low_vals = np.where(low, zg, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        m_val = up_vals[i]
        m_low = low_vals[j]
        if m_val - m_low <= tol:
            converged = True
            break
        si, sj = sample[i], sample[j]
        eta = K[si, si] + K[sj, sj] - 2.0 * K[si, sj]
        if eta < 1e-12:
            eta = 1e-12
        t = (m_val - m_low) / eta
        # box limits along the feasible direction a_i += z_i t, a_j -= z_j t
        hi_i = (C - a[i]) if z[i] > 0 else a[i]
        hi_j = a[j] if z[j] > 0 else (C - a[j])
        t = min(t, hi_i, hi_j)
        if t <= 0.0:
            converged = True
            break
        a[i] += z[i] * t
        a[j] -= z[j] * t
        # gradient update: dG_t = z_t * t * (K[sample(t), si] - K[sample(t), sj])
        col = K[:, si] - K[:, sj]
        G[:n] += col * t
        G[n:] -= col * t
        it += 1

    beta = a[:n] - a[n:]
    # bias from free multipliers, else midpoint of the KKT interval
    zg = -z * G
    free = (a > 1e-9) & (a < C - 1e-9)
    if free.any():
        b = float(np.mean(zg[free]))
    else:
        up = ((z > 0) & (a < C - 1e-12)) | ((z < 0) & (a > 1e-12))
        low = ((z > 0) & (a > 1e-12)) | ((z < 0) & (a < C - 1e-12))
        hi = np.max(np.where(up, zg, -np.inf)) if up.any() else 0.0
        lo = np.min(np.where(low, zg, np.inf)) if low.any() else 0.0
        b = float((hi + lo) / 2.0)
    return beta, b, it, converged


def dual_objective(K, y, beta, epsilon) -> float:
    """0.5 b'Kb + eps*sum|b| - y.b, the quantity smo_solve minimizes."""
    beta = np.asarray(beta, dtype=float)
    return float(
        0.5 * beta @ K @ beta + epsilon * np.abs(beta).sum() - y @ beta
    )


@dataclass
class SvrModel:
    """Per-output support vectors, dual coefficients, and bias."""

    support: list                 # per output: (n_sv, n_features) array
    coef: list                    # per output: (n_sv,) dual coefficients
    bias: np.ndarray              # per output
    gamma: float
    epsilon: float
    C: float
    n_features: int
    cv_mse: dict = field(default_factory=dict)

    @property
    def n_outputs(self) -> int:
        return len(self.support)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise InputError(f"expected (N, {self.n_features}) inputs, got {X.shape}")
        out = np.tile(self.bias, (X.shape[0], 1))
        for j in range(self.n_outputs):
            if self.support[j].shape[0]:
                out[:, j] += rbf_kernel(X, self.support[j], self.gamma) @ self.coef[j]
        return out


def _fit_all_outputs(X, Y, K, C, epsilon, tol, max_iter):
    support, coef, bias = [], [], []
    for j in range(Y.shape[1]):
        beta, b, _, converged = smo_solve(K, Y[:, j], C, epsilon, tol, max_iter)
        sv = np.abs(beta) > 1e-9
        support.append(X[sv].copy())
        coef.append(beta[sv].copy())
        bias.append(b)
        if not converged:
            return support, coef, bias, False
    return support, coef, bias, True


def fit_svr(
    data: Dataset,
    C=1.0,
    gamma: float = None,
    epsilon: float = DEFAULT_EPSILON,
    folds: int = 10,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_iter: int = None,
) -> SvrModel:
    """Train one SMO solve per output at a fixed or cross-validated C.

    When C is a list, the shared value minimizing mean CV MSE summed over
    outputs is selected with ``folds`` folds before the final fit.
    """
    X, Y = data.X, data.Y
    if gamma is None:
        gamma = scale_gamma(X)
    cv_mse = {}
    if isinstance(C, (list, tuple, np.ndarray)):
        if data.n_rows < folds:
            raise InputError(f"{data.n_rows} rows cannot fill {folds} folds")
        assignment = kfold_split(data.n_rows, folds=folds, seed=seed)
        candidates = [float(c) for c in C]
        for c in candidates:
            total = 0.0
            for k in range(folds):
                test = assignment == k
                Ktr = rbf_kernel(X[~test], X[~test], gamma)
                model = SvrModel(
                    *_fit_all_outputs(X[~test], Y[~test], Ktr, c, epsilon, tol, max_iter)[:3],
                    gamma=gamma,
                    epsilon=epsilon,
                    C=c,
                    n_features=data.n_features,
                )
                model.bias = np.asarray(model.bias, dtype=float)
                resid = model.predict(X[test]) - Y[test]
                total += float(np.mean(resid**2) * data.n_outputs)
            cv_mse[c] = total / folds
        C = min(cv_mse, key=lambda c: (cv_mse[c], c))
    C = float(C)
    if C <= 0:
        raise InputError(f"C must be positive, got {C}")
    if epsilon < 0:
        raise InputError(f"epsilon must be nonnegative, got {epsilon}")
    K = rbf_kernel(X, X, gamma)
    support, coef, bias, converged = _fit_all_outputs(X, Y, K, C, epsilon, tol, max_iter)
    model = SvrModel(
        support=support,
        coef=coef,
        bias=np.asarray(bias, dtype=float),
        gamma=gamma,
        epsilon=epsilon,
        C=C,
        n_features=data.n_features,
        cv_mse=cv_mse,
    )
    if not converged:
        raise ResourceLimitError(
            "SMO did not reach the KKT tolerance within the iteration cap",
            partial=model,
        )
    return model
