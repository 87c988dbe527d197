"""Estimator-style wrappers around the solvers and the embedding estimate.

``fit`` takes no training data: the problem is fully described by the
constructor parameters. ``predict`` evaluates the fitted field at arbitrary
points, with zero outside the domain.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .analysis import embedding_constant, pohozaev_evaluate
from .discretization import assemble_grushin, build_grid, interpolate
from .domain import Domain
from .linalg import LinearSolverCfg
from .nonlinearity import Nonlinearity, PurePower, preset
from .solvers import MpaCfg, mountain_pass_endpoint, mpa_solve, nehari_minimize, seed_field

__all__ = ["NehariSolver", "MountainPassSolver", "EmbeddingConstantEstimator"]


def _as_domain(domain):
    if domain is None:
        return Domain.rectangle(-1.0, 1.0, -1.0, 1.0)
    if isinstance(domain, Domain):
        return domain
    return Domain.from_dict(domain)


def _as_nonlinearity(nonlinearity, p, k):
    if nonlinearity is None:
        return PurePower(p, k)
    if isinstance(nonlinearity, Nonlinearity):
        return nonlinearity
    return preset(nonlinearity, k)


class _GridEstimator(BaseEstimator):

    def _setup(self):
        domain = _as_domain(self.domain)
        domain.require_degenerate_line()
        self.grid_ = build_grid(domain, self.nx, self.ny)
        self.operator_ = assemble_grushin(self.grid_, self.k)
        return self.grid_, self.operator_

    def _field(self):
        raise NotImplementedError

    def predict(self, X):
        """Values of the fitted field at the points ``X`` of shape ``(n, 2)``."""
        check_is_fitted(self, "grid_")
        X = check_array(X, ensure_min_samples=1)
        if X.shape[1] != 2:
            raise ValueError(f"expected points of shape (n, 2), got {X.shape}")
        g = self.grid_
        inside = ((X[:, 0] >= g.x[0]) & (X[:, 0] <= g.x[-1])
                  & (X[:, 1] >= g.y[0]) & (X[:, 1] <= g.y[-1]))
        out = np.zeros(len(X))
        if inside.any():
            out[inside] = interpolate(g, self._field(), X[inside])
        return out


class _CriticalPointSolver(_GridEstimator):

    def _cfgs(self):
        cfg = MpaCfg(path_points=self.path_points, grad_tol=self.grad_tol,
                     max_outer=self.max_outer, newton_switch=self.newton_switch)
        return cfg, LinearSolverCfg(tol=self.linear_tol)

    def _store(self, report):
        self.report_ = report
        self.u_ = report.u_star
        self.level_ = report.level
        self.grad_norm_ = report.grad_norm
        self.n_iter_ = report.iterations
        return self

    def _field(self):
        return self.u_

    def pohozaev(self):
        """Pohozaev report of the fitted field (pure powers only)."""
        check_is_fitted(self, "u_")
        nl = self.nonlinearity_
        if not nl.is_pure_power:
            raise ValueError("the Pohozaev audit needs a pure power nonlinearity")
        return pohozaev_evaluate(self.grid_, self.u_, self.k, nl.p)


class NehariSolver(_CriticalPointSolver):
    """Ground state of the pure-power problem by descent on the Nehari set.

    Parameters
    ----------
    domain : Domain, dict or None
        Defaults to the square ``(-1, 1)^2``.
    k : float
        Degeneracy exponent.
    p : float
        Power of the nonlinearity ``|x|^2k |u|^(p-1) u``.
    nx, ny : int
        Grid nodes per axis.
    seed : int
        Seed of the positive starting field.
    """

    def __init__(self, domain=None, k=1.0, p=3.0, nx=65, ny=65, seed=0, grad_tol=1e-8,
                 max_outer=10000, newton_switch=1e-4, path_points=41, linear_tol=1e-10):
        self.domain = domain
        self.k = k
        self.p = p
        self.nx = nx
        self.ny = ny
        self.seed = seed
        self.grad_tol = grad_tol
        self.max_outer = max_outer
        self.newton_switch = newton_switch
        self.path_points = path_points
        self.linear_tol = linear_tol

    def fit(self, X=None, y=None):
        _, op = self._setup()
        self.nonlinearity_ = PurePower(self.p, self.k)
        cfg, lin = self._cfgs()
        return self._store(nehari_minimize(op, self.nonlinearity_, self.seed, cfg, lin))


class MountainPassSolver(_CriticalPointSolver):
    """Mountain-pass critical point by path deformation.

    ``nonlinearity`` may be a :class:`Nonlinearity`, a preset name or ``None``
    for the pure power with exponent ``p``. The endpoint is ``2 R u_hat`` with
    ``u_hat`` the normalised seed field and ``R`` the first doubling of ``R0``
    with negative energy.
    """

    def __init__(self, domain=None, k=1.0, p=3.0, nonlinearity=None, nx=65, ny=65, seed=0,
                 R0=1.0, grad_tol=1e-8, max_outer=10000, newton_switch=1e-4,
                 path_points=41, linear_tol=1e-10):
        self.domain = domain
        self.k = k
        self.p = p
        self.nonlinearity = nonlinearity
        self.nx = nx
        self.ny = ny
        self.seed = seed
        self.R0 = R0
        self.grad_tol = grad_tol
        self.max_outer = max_outer
        self.newton_switch = newton_switch
        self.path_points = path_points
        self.linear_tol = linear_tol

    def fit(self, X=None, y=None):
        grid, op = self._setup()
        self.nonlinearity_ = _as_nonlinearity(self.nonlinearity, self.p, self.k)
        cfg, lin = self._cfgs()
        self.R_, u1 = mountain_pass_endpoint(op, self.nonlinearity_, seed_field(grid, self.seed),
                                             self.R0)
        return self._store(mpa_solve(op, self.nonlinearity_, u1, cfg, lin))


class EmbeddingConstantEstimator(_GridEstimator):
    """Lower estimate of the weighted embedding constant ``C_q``.

    ``warm_start`` reuses the previous maximiser, interpolated to the current
    grid, as the starting field; the estimate is then never below the ratio of
    that interpolated field.
    """

    def __init__(self, domain=None, k=1.0, q=2.0, nx=33, ny=33, seed=0, max_iter=2000,
                 rtol=1e-13, warm_start=False):
        self.domain = domain
        self.k = k
        self.q = q
        self.nx = nx
        self.ny = ny
        self.seed = seed
        self.max_iter = max_iter
        self.rtol = rtol
        self.warm_start = warm_start

    def fit(self, X=None, y=None):
        u0 = None
        if self.warm_start and hasattr(self, "maximizer_"):
            old_grid, old_u = self.grid_, self.maximizer_
            self._setup()
            u0 = interpolate(old_grid, old_u, np.column_stack([self.grid_.xi, self.grid_.yi]))
        else:
            self._setup()
        rep = embedding_constant(self.operator_, self.q, self.seed, self.max_iter, self.rtol, u0)
        self.report_ = rep
        self.C_q_ = rep.C_q_estimate
        self.maximizer_ = rep.maximizer
        self.n_iter_ = rep.iterations
        return self

    def _field(self):
        return self.maximizer_
