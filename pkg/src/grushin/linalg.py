"""Conjugate gradients, cached factorisations and inverse iteration."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "LinearSolverCfg",
    "SolverFailure",
    "cg_solve",
    "energy_solve",
    "smallest_eigenvalue",
    "EigenResult",
]


class SolverFailure(RuntimeError):
    """A numerical iteration failed to converge."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class LinearSolverCfg:
    tol: float = 1e-10
    max_iter: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError(f"linear tol must lie in (0, 1), got {self.tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("linear max_iter must be >= 1")

    def iterations_for(self, n):
        return self.max_iter if self.max_iter is not None else 10 * n


def _as_matrix(A):
    return getattr(A, "matrix", A)


def cg_solve(A, b, cfg=LinearSolverCfg(), x0=None):
    """Unpreconditioned conjugate gradients for symmetric positive definite ``A``.

    Stops when ``||b - A x|| <= cfg.tol * ||b||``; raises :class:`SolverFailure`
    carrying the final relative residual otherwise.
    """
    M = _as_matrix(A)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - M @ x
    p = r.copy()
    rs = r @ r
    target = (cfg.tol * bnorm) ** 2
    max_iter = cfg.iterations_for(n)
    for it in range(max_iter):
        if rs <= target:
            return x
        Ap = M @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise SolverFailure("matrix is not positive definite along a search direction",
                                residual=np.sqrt(rs) / bnorm, iterations=it)
        alpha = rs / pAp
        x += alpha * p
        r -= alpha * Ap
        rs_new = r @ r
        p = r + (rs_new / rs) * p
        rs = rs_new
    # recompute the true residual before giving up
    res = np.linalg.norm(b - M @ x) / bnorm
    if res <= cfg.tol:
        return x
    raise SolverFailure(f"CG did not converge in {max_iter} iterations "
                        f"(relative residual {res:.3e})", residual=res, iterations=max_iter)


def _factor(op):
    solve = getattr(op, "_factor_cache", None)
    if solve is None:
        solve = spla.factorized(sp.csc_matrix(_as_matrix(op)))
        try:
            op._factor_cache = solve
        except AttributeError:
            pass
    return solve


def energy_solve(op, b, cfg=LinearSolverCfg()):
    """Solve ``A x = b`` with a cached sparse LU factorisation.

    The residual is checked against ``cfg.tol``; if roundoff leaves it above
    the tolerance the result is polished by warm-started CG.
    """
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    M = _as_matrix(op)
    x = _factor(op)(b)
    if np.linalg.norm(b - M @ x) <= cfg.tol * bnorm:
        return x
    return cg_solve(M, b, cfg, x0=x)


@dataclass
class EigenResult:
    lambda_min: float
    eigvec: np.ndarray
    iterations: int
    residual: float


def smallest_eigenvalue(A, mass=None, cfg=LinearSolverCfg(), rtol=1e-12, max_iter=500):
    """Smallest eigenpair of ``A v = lambda M v`` by inverse iteration.

    ``M`` is a diagonal mass given as a vector (default: the operator's
    quadrature weights). Iteration stops once the Rayleigh quotient changes by
    at most ``rtol`` relatively and the residual ``||A v - lambda M v||`` is
    below ``1e-8 ||A v||``. The eigenvector is ``M``-normalised with a positive sum.
    """
    M = _as_matrix(A)
    n = M.shape[0]
    mass = np.asarray(A.weights if mass is None else mass, dtype=float)
    v = np.ones(n) / np.sqrt(mass.sum())
    lam = None
    for it in range(1, max_iter + 1):
        w = energy_solve(A, mass * v, cfg) if hasattr(A, "grid") else _factor(M)(mass * v)
        w /= np.sqrt(w @ (mass * w))
        Aw = M @ w
        lam_new = float(w @ Aw)
        residual = float(np.linalg.norm(Aw - lam_new * mass * w))
        converged = (lam is not None and abs(lam_new - lam) <= rtol * abs(lam_new)
                     and residual <= 1e-8 * np.linalg.norm(Aw))
        v, lam = w, lam_new
        if converged:
            if v.sum() < 0:
                v = -v
            return EigenResult(lam, v, it, residual)
    raise SolverFailure(f"inverse iteration did not converge in {max_iter} steps",
                        residual=residual, iterations=max_iter)
