"""Lowest eigenpairs of a real symmetric operator.

``lanczos_lowest`` runs a single-vector Lanczos iteration with full
(twice-applied Gram-Schmidt) reorthogonalization of the Krylov basis, so no
spurious copies of converged Ritz values appear over the thousands of
solves a reduction run performs. ``dense_lowest`` is the LAPACK oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

MatVec = Callable[[np.ndarray], np.ndarray]

DEGENERACY_GAP = 1e-9
# iterations to run after an invariant-subspace restart before testing convergence
RESTART_SETTLE = 10


class ConvergenceError(RuntimeError):
    """Lanczos hit ``max_iter`` before the requested pairs converged."""

    def __init__(self, message: str, values: np.ndarray, residuals: np.ndarray, iterations: int):
        super().__init__(message)
        self.values = values
        self.residuals = residuals
        self.iterations = iterations


@dataclass(frozen=True)
class SolverConfig:
    k: int = 4
    tol: float = 1e-10
    max_iter: int | None = None
    seed: int = 0
    dense_threshold: int = 64

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class EigenSolution:
    values: np.ndarray
    vectors: np.ndarray  # columns
    residuals: np.ndarray
    iterations: int = 0
    method: str = "lanczos"
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def ground(self) -> np.ndarray:
        return self.vectors[:, 0]


def _as_matvec(op) -> MatVec:
    if callable(op) and not hasattr(op, "shape"):
        return op
    if hasattr(op, "matvec"):
        return op.matvec
    return lambda x: op @ x


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of every column positive."""
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.ndim == 1:
        return fix_signs(vectors[:, None])[:, 0]
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            vectors[:, j] = -col
    return vectors


def _residuals(matvec: MatVec, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    return np.array(
        [np.linalg.norm(matvec(vectors[:, j]) - values[j] * vectors[:, j]) for j in range(len(values))]
    )


def dense_lowest(h, k: int = 4) -> EigenSolution:
    """``k`` lowest eigenpairs by dense symmetric diagonalization."""
    H = h.toarray() if sp.issparse(h) else np.asarray(h, dtype=float)
    n = H.shape[0]
    k = min(k, n)
    want = min(k + 1, n)
    w, v = sla.eigh(H, subset_by_index=[0, want - 1])
    degenerate = want > k and (w[k] - w[k - 1]) < DEGENERACY_GAP
    w, v = w[:k], fix_signs(v[:, :k])
    res = np.linalg.norm(H @ v - v * w, axis=0)
    return EigenSolution(w, v, res, iterations=0, method="dense", degenerate=bool(degenerate))


def lanczos_lowest(
    op,
    n: int,
    cfg: SolverConfig | None = None,
    v0: np.ndarray | None = None,
) -> EigenSolution:
    """``cfg.k`` lowest eigenpairs of the symmetric operator ``op``.

    ``op`` is a callable ``x -> A @ x``, a matrix, or anything with a
    ``matvec`` method. ``v0`` is an optional warm-start vector; otherwise the
    start vector is drawn from ``cfg.seed``. Raises :class:`ConvergenceError`
    carrying the best residual estimates when ``max_iter`` is exhausted.
    """
    cfg = cfg or SolverConfig()
    if n < 1:
        raise ValueError("operator dimension must be >= 1")
    matvec = _as_matvec(op)

    if n <= cfg.dense_threshold:
        H = np.column_stack([matvec(e) for e in np.eye(n)])
        sol = dense_lowest(0.5 * (H + H.T), cfg.k)
        sol.residuals = _residuals(matvec, sol.values, sol.vectors)
        return sol

    k = min(cfg.k, n)
    m_max = min(n, cfg.max_iter or 1000)
    rng = np.random.default_rng(cfg.seed)

    q = None if v0 is None else np.array(v0, dtype=float)
    if q is None or q.shape != (n,) or not np.all(np.isfinite(q)) or np.linalg.norm(q) == 0:
        q = rng.standard_normal(n)
    V = np.empty((m_max + 1, n))
    V[0] = q / np.linalg.norm(q)
    alpha = np.empty(m_max)
    beta = np.empty(m_max)
    scale = 0.0
    theta = S = None
    est = np.full(k, np.inf)
    settle = 0

    for j in range(m_max):
        w = matvec(V[j])
        alpha[j] = V[j] @ w
        w -= alpha[j] * V[j]
        if j > 0:
            w -= beta[j - 1] * V[j - 1]
        basis = V[: j + 1]
        w -= basis.T @ (basis @ w)
        w -= basis.T @ (basis @ w)
        b = np.linalg.norm(w)
        beta[j] = b
        m = j + 1
        scale = max(scale, abs(alpha[j]), b)

        breakdown = b <= 1e-12 * max(scale, 1.0) and m < n
        if m >= k and not breakdown:
            want = min(k + 1, m)
            theta, S = sla.eigh_tridiagonal(
                alpha[:m], beta[: m - 1], select="i", select_range=(0, want - 1)
            )
            est = np.abs(b * S[-1, :k])
            if m == n or (m >= settle and np.all(est <= cfg.tol)):
                break

        if breakdown:
            # invariant subspace: continue from a fresh direction orthogonal to it
            r = rng.standard_normal(n)
            r -= basis.T @ (basis @ r)
            r -= basis.T @ (basis @ r)
            beta[j] = 0.0
            V[j + 1] = r / np.linalg.norm(r)
            settle = min(n, m + RESTART_SETTLE)
        else:
            V[j + 1] = w / b
    else:
        raise ConvergenceError(
            f"Lanczos did not converge {k} pairs in {m_max} iterations",
            values=np.array([] if theta is None else theta[:k]),
            residuals=est,
            iterations=m_max,
        )

    X = V[:m].T @ S[:, :k]
    X /= np.linalg.norm(X, axis=0)
    X = fix_signs(X)
    values = theta[:k].copy()
    degenerate = len(theta) > k and (theta[k] - theta[k - 1]) < DEGENERACY_GAP
    res = _residuals(matvec, values, X)
    return EigenSolution(values, X, res, iterations=m, method="lanczos", degenerate=bool(degenerate))
