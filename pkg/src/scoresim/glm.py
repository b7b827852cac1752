"""Logistic regression by iteratively reweighted least squares.

Columns are fitted on their raw scale (ages in years, amounts in currency
units), so the weighted normal system can be badly conditioned.  Internally
each column is divided by its Euclidean norm; the equilibrated design is checked
once for collinearity with a column-pivoted QR, and every Newton step solves the
weighted normal system through a pivoted Cholesky factorization, which is
rank-revealing as well.  Coefficients are mapped back to the raw scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.linalg.lapack
from scipy.special import expit, logit

from .errors import FitError, RankDeficientError, SeparationError

TOL = 1e-8
MAX_ITER = 50
SEPARATION_BOUND = 30.0
MAX_HALVINGS = 40


@dataclass(frozen=True)
class FittedModel:
    beta: np.ndarray
    column_map: tuple[str, ...]
    converged: bool
    iterations: int
    final_gradient_norm: float
    log_likelihood: float

    def coefficients(self) -> dict[str, float]:
        return {label: float(b) for label, b in zip(self.column_map, self.beta)}


def _unpack(X) -> tuple[np.ndarray, tuple[str, ...]]:
    values = getattr(X, "values", X)
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError("design matrix must be two-dimensional")
    labels = getattr(X, "labels", None)
    if labels is None:
        labels = tuple(f"x{j}" for j in range(values.shape[1]))
    return values, tuple(labels)


def log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    """Bernoulli log-likelihood at linear predictor ``eta``."""
    return float(np.dot(y, eta) - np.logaddexp(0.0, eta).sum())


def _rank_check(A: np.ndarray, labels: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    # A = Q0 R0 (economic), then pivot the small l x l factor: A P = Q0 Q1 R
    R0 = np.linalg.qr(A, mode="r")
    R, perm = scipy.linalg.qr(R0, mode="r", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(A.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < A.shape[1]:
        raise RankDeficientError([labels[j] for j in sorted(perm[rank:])])
    return R, perm


def _newton_direction(Z: np.ndarray, w: np.ndarray, score: np.ndarray, labels) -> np.ndarray:
    """Solve (Z'WZ) step = score with a pivoted (rank-revealing) Cholesky factorization."""
    G = Z.T @ (w[:, None] * Z)
    c, piv, rank, info = scipy.linalg.lapack.dpstrf(G, lower=0, tol=-1.0)
    if info < 0:
        raise FitError(f"pivoted Cholesky failed (info={info})")
    perm = piv - 1
    if rank < G.shape[0]:
        raise RankDeficientError([labels[j] for j in sorted(perm[rank:])])
    U = np.triu(c)
    # G[perm][:, perm] = U'U
    u = scipy.linalg.solve_triangular(U, score[perm], trans="T")
    v = scipy.linalg.solve_triangular(U, u)
    step = np.empty_like(v)
    step[perm] = v
    return step


def fit_logistic(X, y, *, tol: float = TOL, max_iter: int = MAX_ITER) -> FittedModel:
    """Maximum-likelihood logistic regression.

    Converged when the raw-scale score vector X'(y - pi) has max-norm at most
    ``tol * n``.  A step that lowers the log-likelihood is halved until it does
    not.  Raises ``RankDeficientError`` for collinear columns and
    ``SeparationError`` when a coefficient's contribution to the linear
    predictor exceeds 30 over the column's range.  Hitting ``max_iter`` is
    not an error: the model is returned with ``converged=False``.
    """
    A, labels = _unpack(X)
    y = np.asarray(y, dtype=float).ravel()
    n, l = A.shape
    if y.shape[0] != n:
        raise ValueError(f"{n} design rows but {y.shape[0]} responses")
    if n < l:
        raise FitError(f"need at least as many rows ({n}) as columns ({l})")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("response must be binary 0/1")
    ybar = y.mean()
    if ybar in (0.0, 1.0):
        raise FitError("response contains a single class")

    norms = np.sqrt(np.einsum("ij,ij->j", A, A))
    if np.any(norms == 0):
        raise RankDeficientError([labels[j] for j in np.flatnonzero(norms == 0)])
    Z = A / norms
    _rank_check(Z, labels)

    span = A.max(axis=0) - A.min(axis=0)
    span = np.where(span > 0, span, np.abs(A).max(axis=0))

    b = np.zeros(l)  # coefficients on the equilibrated scale
    intercept = np.flatnonzero(np.all(A == 1.0, axis=0))
    if intercept.size:
        b[intercept[0]] = logit(ybar) * norms[intercept[0]]

    eta = Z @ b
    ll = log_likelihood(eta, y)
    converged = False
    grad_norm = np.inf
    it = 0
    while True:
        pi = expit(eta)
        score = Z.T @ (y - pi)
        grad_norm = float(np.max(np.abs(score * norms)))
        if grad_norm <= tol * n:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        step = _newton_direction(Z, pi * (1.0 - pi), score, labels)
        t = 1.0
        for _ in range(MAX_HALVINGS):
            b_new = b + t * step
            eta_new = Z @ b_new
            ll_new = log_likelihood(eta_new, y)
            if ll_new >= ll - 1e-12 * abs(ll):
                break
            t *= 0.5
        b, eta, ll = b_new, eta_new, ll_new
        if np.any(np.abs(b / norms) * span > SEPARATION_BOUND):
            raise SeparationError()

    return FittedModel(
        beta=b / norms,
        column_map=labels,
        converged=converged,
        iterations=it,
        final_gradient_norm=grad_norm,
        log_likelihood=ll,
    )


def linear_predictor(X, model: FittedModel) -> np.ndarray:
    A, labels = _unpack(X)
    if A.shape[1] != model.beta.shape[0]:
        raise ValueError(f"design has {A.shape[1]} columns, model has {model.beta.shape[0]}")
    if getattr(X, "labels", None) is not None and tuple(X.labels) != tuple(model.column_map):
        raise ValueError("design columns do not match the model's column map")
    return A @ model.beta


def predict_pd(X, model: FittedModel) -> np.ndarray:
    """Probability of default for every row, pi = 1 / (1 + exp(-x'beta))."""
    return expit(linear_predictor(X, model))
