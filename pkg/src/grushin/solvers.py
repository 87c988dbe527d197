"""Critical-point solvers: Nehari descent, mountain-pass path deformation, Newton.

The linear-algebra kernels (conjugate gradients, inverse iteration) live in
:mod:`grushin.linalg` and are re-exported here.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretization import weight_power
from .functional import dual_norm, energy_state, phi, phi_grad, riesz_gradient
from .linalg import (EigenResult, LinearSolverCfg, SolverFailure, cg_solve,
                     smallest_eigenvalue)

__all__ = [
    "MpaCfg",
    "SolveReport",
    "NewtonResult",
    "StagnationError",
    "InvalidEndpointError",
    "NehariProjectionError",
    "LinearSolverCfg",
    "SolverFailure",
    "EigenResult",
    "cg_solve",
    "smallest_eigenvalue",
    "seed_field",
    "nehari_project",
    "nehari_minimize",
    "mountain_pass_endpoint",
    "mpa_solve",
    "newton_refine",
    "newton_matrix",
]

log = logging.getLogger(__name__)


class StagnationError(SolverFailure):
    """Descent stopped making progress before reaching the gradient tolerance."""

    def __init__(self, message, diagnostics):
        super().__init__(message, residual=diagnostics.get("grad_norm"),
                         iterations=diagnostics.get("iterations"))
        self.diagnostics = diagnostics


class InvalidEndpointError(ValueError):
    """Mountain-pass endpoint with non-negative energy or zero field."""


class NehariProjectionError(ValueError):
    """The power term vanishes, so the Nehari scaling is undefined."""


@dataclass(frozen=True)
class MpaCfg:
    path_points: int = 41
    descent_step0: float = 1.0
    armijo_c: float = 1e-4
    grad_tol: float = 1e-8
    max_outer: int = 10000
    newton_switch: float = 1e-4

    def __post_init__(self):
        if self.path_points < 3:
            raise ValueError("path_points must be at least 3")
        for name in ("descent_step0", "armijo_c", "grad_tol", "newton_switch"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")


@dataclass
class SolveReport:
    u_star: np.ndarray
    level: float
    grad_norm: float
    iterations: int
    method: str
    supercritical: bool = False
    pohozaev_residual: Optional[float] = None
    timing: float = 0.0
    history: list = field(default_factory=list, repr=False)

    @property
    def linf(self):
        return float(np.max(np.abs(self.u_star)))

    @property
    def notes(self):
        return "no-continuum-limit" if self.supercritical else ""


def _is_supercritical(nl):
    if nl.p is None:
        return False
    return nl.p > (4.0 + 5.0 * nl.k) / nl.k


def seed_field(grid, seed, modes=3):
    """Positive seeded starting field: a boundary-vanishing bump times ``1 + r/2``
    with ``r`` a random smooth field scaled to ``|r| <= 1``."""
    rng = np.random.default_rng(seed)
    xmin, xmax, ymin, ymax = grid.domain.bounding_box
    sx = (grid.xi - xmin) / (xmax - xmin)
    sy = (grid.yi - ymin) / (ymax - ymin)
    if grid.domain.kind == "rect":
        base = np.sin(np.pi * sx) * np.sin(np.pi * sy)
    else:
        from .domain import signed_inside

        base = -signed_inside(grid.domain, (grid.xi, grid.yi))
    coef = rng.normal(size=(modes, modes))
    r = np.zeros(grid.n_unknowns)
    for m in range(modes):
        for n in range(modes):
            r += coef[m, n] * np.sin((m + 1) * np.pi * sx) * np.sin((n + 1) * np.pi * sy)
    peak = np.max(np.abs(r))
    if peak > 0:
        r /= peak
    return base * (1.0 + 0.5 * r)


def _power_terms(u, op, nl):
    g = op.grid
    a = op.energy(u)
    b = float(np.sum(g.weights * weight_power(g.xi, nl.k) * np.abs(u) ** (nl.p + 1)))
    return a, b


def nehari_project(u, op, nl):
    """Scale ``u`` onto the Nehari set of a pure power: ``t* = (a/b)^(1/(p-1))``.

    Returns ``(t_star, t_star * u)``.
    """
    if not nl.is_pure_power or not nl.p > 1:
        raise NehariProjectionError("Nehari projection needs a pure power with p > 1")
    a, b = _power_terms(u, op, nl)
    if not b > 0 or not a > 0:
        raise NehariProjectionError(
            f"projection undefined: <Au,u>={a:.3e}, weighted power term={b:.3e}")
    t = (a / b) ** (1.0 / (nl.p - 1.0))
    return t, t * u


def nehari_minimize(op, nl, seed=0, cfg=MpaCfg(), lin=LinearSolverCfg(), u0=None):
    """Minimise the energy over the Nehari set by projected gradient descent.

    Steps follow the energy-metric gradient with Barzilai-Borwein lengths and a
    non-monotone Armijo safeguard; the result is polished by Newton once the
    dual gradient norm drops below ``cfg.newton_switch``.
    """
    start = time.perf_counter()
    u = seed_field(op.grid, seed) if u0 is None else np.asarray(u0, dtype=float)
    _, v = nehari_project(u, op, nl)
    step = cfg.descent_step0
    prev = None
    recent = []
    history = []
    stall = 0
    switch = cfg.newton_switch
    method = "nehari"
    it = 0
    state = energy_state(v, op, nl, lin)
    for it in range(1, cfg.max_outer + 1):
        history.append((state.phi, state.grad_norm))
        if state.grad_norm <= cfg.grad_tol:
            break
        if state.grad_norm <= switch:
            newton = newton_refine(state.u, op, nl, cfg, lin)
            if newton.converged:
                state = energy_state(newton.u, op, nl, lin)
                history.extend((state.phi, r) for r in newton.residuals[1:])
                method = "newton-refined"
                break
            log.info("Newton fell back to descent at grad_norm=%.3e", state.grad_norm)
            switch *= 0.1
        if prev is not None:
            dv = state.u - prev.u
            curv = float(dv @ (state.grad_dual - prev.grad_dual))
            step = op.energy(dv) / curv if curv > 0 else cfg.descent_step0
            step = min(max(step, 1e-8), 1e8)
        recent = (recent + [state.phi])[-10:]
        ref = max(recent)
        slope = state.grad_norm**2
        for _ in range(60):
            _, w = nehari_project(state.u - step * state.grad_riesz, op, nl)
            fw = phi(w, op, nl)
            if fw <= ref - cfg.armijo_c * step * slope:
                break
            step *= 0.5
        else:
            raise StagnationError("line search failed on the Nehari set",
                                  {"level": state.phi, "grad_norm": state.grad_norm,
                                   "iterations": it})
        stall = stall + 1 if abs(fw - state.phi) < 1e-15 else 0
        if stall >= 100:
            raise StagnationError("Nehari descent stagnated",
                                  {"level": fw, "grad_norm": state.grad_norm, "iterations": it})
        prev = state
        state = energy_state(w, op, nl, lin)
    else:
        raise StagnationError(f"Nehari descent hit max_outer={cfg.max_outer}",
                              {"level": state.phi, "grad_norm": state.grad_norm,
                               "iterations": it})
    u_star, level, gnorm = state.u, state.phi, state.grad_norm
    return SolveReport(u_star, level, gnorm, it, method, _is_supercritical(nl),
                       timing=time.perf_counter() - start, history=history)


def mountain_pass_endpoint(op, nl, u_hat, R0=1.0, max_doublings=60):
    """Scan ``R = R0, 2 R0, ...`` until ``Phi(R u_hat) < 0``.

    ``u_hat`` is normalised to unit energy first. Returns ``(R, 2 R u_hat)``.
    """
    u_hat = np.asarray(u_hat, dtype=float)
    norm = np.sqrt(max(op.energy(u_hat), 0.0))
    if norm == 0:
        raise InvalidEndpointError("direction must be nonzero")
    u_hat = u_hat / norm
    R = float(R0)
    for _ in range(max_doublings):
        if phi(R * u_hat, op, nl) < 0:
            return R, 2.0 * R * u_hat
        R *= 2.0
    raise InvalidEndpointError(f"energy stays non-negative along the ray up to R={R:.3e}")


def _segment_lengths(path, op):
    return np.array([np.sqrt(max(op.energy(path[i + 1] - path[i]), 0.0))
                     for i in range(len(path) - 1)])


def _equidistribute(path, op):
    # piecewise-linear resampling at equal energy arclength
    seg = _segment_lengths(path, op)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return list(path)
    s /= s[-1]
    out = [path[0]]
    for t in np.linspace(0.0, 1.0, len(path))[1:-1]:
        j = min(int(np.searchsorted(s, t, side="right")) - 1, len(path) - 2)
        width = s[j + 1] - s[j]
        theta = (t - s[j]) / width if width > 0 else 0.0
        out.append((1.0 - theta) * path[j] + theta * path[j + 1])
    out.append(path[-1])
    return out


def _segment_max(a, b, fa, fb, op, nl, iters=40):
    # golden-section search for the maximum of Phi on the segment [a, b]
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, 1.0
    c, d = hi - gr * (hi - lo), lo + gr * (hi - lo)
    fc = phi(a + c * (b - a), op, nl)
    fd = phi(a + d * (b - a), op, nl)
    for _ in range(iters):
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - gr * (hi - lo)
            fc = phi(a + c * (b - a), op, nl)
        else:
            lo, c, fc = c, d, fd
            d = lo + gr * (hi - lo)
            fd = phi(a + d * (b - a), op, nl)
    t, ft = (c, fc) if fc >= fd else (d, fd)
    if fa >= ft and fa >= fb:
        return 0.0, fa
    if fb >= ft:
        return 1.0, fb
    return t, ft


def _locate_path_max(path, vals, op, nl):
    # node maximum (lowest index on ties), then refine on its two adjacent segments
    i = int(np.argmax(vals))
    best = (vals[i], i, 0.0, None)
    for j in (i - 1, i):
        if 0 <= j < len(path) - 1:
            t, ft = _segment_max(path[j], path[j + 1], vals[j], vals[j + 1], op, nl)
            if ft > best[0] and 0.0 < t < 1.0:
                best = (ft, j, t, path[j] + t * (path[j + 1] - path[j]))
    return best


def _unit_tangent(path, j, op):
    tau = path[j + 1] - path[j - 1]
    norm = np.sqrt(max(op.energy(tau), 0.0))
    return tau / norm if norm > 0 else tau


def mpa_solve(op, nl, u1, cfg=MpaCfg(), lin=LinearSolverCfg(), relax_step=0.5):
    """Mountain-pass critical point by deformation of a discrete path from 0 to ``u1``.

    Each outer iteration

    1. locates the maximum of the energy along the polyline (node maximum,
       lowest index on ties, refined by golden-section search on the two
       adjacent segments) and makes it a path node;
    2. moves that node along the negative energy-metric gradient, with
       Barzilai-Borwein trial steps and Armijo backtracking;
    3. relaxes the other nodes of positive energy along the component of their
       gradient normal to the path (step ``relax_step``, displacement capped at
       the mean segment length) so the path follows the ridge crossing;
    4. re-equidistributes both halves of the path in energy arclength, keeping
       the top node fixed.

    Damped Newton takes over once the top node's dual gradient norm is below
    ``cfg.newton_switch``; when Newton fails the descent resumes with a ten
    times smaller switch.
    """
    start = time.perf_counter()
    u1 = np.asarray(u1, dtype=float)
    if not np.any(u1):
        raise InvalidEndpointError("endpoint u1 must be nonzero")
    end_value = phi(u1, op, nl)
    if end_value >= 0:
        raise InvalidEndpointError(f"Phi(u1) = {end_value:.6g} must be negative")
    m = cfg.path_points
    path = [t * u1 for t in np.linspace(0.0, 1.0, m)]
    vals = np.array([phi(v, op, nl) for v in path])
    step = cfg.descent_step0
    prev = None
    history = []
    switch = cfg.newton_switch
    method = "mpa"
    it = 0
    state = None
    for it in range(1, cfg.max_outer + 1):
        top, j, t, point = _locate_path_max(path, vals, op, nl)
        if point is not None:
            i = min(max(j if t <= 0.5 else j + 1, 1), m - 2)
            path[i], vals[i] = point, top
        else:
            i = j
        if i in (0, m - 1):
            raise SolverFailure("path maximum reached an endpoint; mountain-pass "
                                "geometry lost", iterations=it)
        state = energy_state(path[i], op, nl, lin)
        history.append((state.phi, state.grad_norm))
        if state.grad_norm <= cfg.grad_tol:
            break
        if state.grad_norm <= switch:
            newton = newton_refine(state.u, op, nl, cfg, lin)
            if newton.converged:
                state = energy_state(newton.u, op, nl, lin)
                history.extend((state.phi, r) for r in newton.residuals[1:])
                method = "newton-refined"
                break
            log.info("Newton fell back to descent at grad_norm=%.3e", state.grad_norm)
            switch *= 0.1

        if prev is not None:
            dv = state.u - prev.u
            curv = float(dv @ (state.grad_dual - prev.grad_dual))
            step = op.energy(dv) / curv if curv > 0 else cfg.descent_step0
            step = min(max(step, 1e-8), 1e8)
        slope = state.grad_norm**2
        for _ in range(60):
            w = state.u - step * state.grad_riesz
            fw = phi(w, op, nl)
            if fw <= state.phi - cfg.armijo_c * step * slope:
                break
            step *= 0.5
        else:
            raise StagnationError("line search failed at the path maximum",
                                  {"level": state.phi, "grad_norm": state.grad_norm,
                                   "iterations": it})
        prev = state

        mean_seg = float(np.mean(_segment_lengths(path, op)))
        moved = list(path)
        moved[i] = w
        for jj in range(1, m - 1):
            if jj == i or vals[jj] <= 0:
                continue
            g = riesz_gradient(phi_grad(path[jj], op, nl), op, lin)
            tau = _unit_tangent(path, jj, op)
            d = g - op.energy(g, tau) * tau
            dn = np.sqrt(max(op.energy(d), 0.0))
            if dn > 0:
                moved[jj] = path[jj] - min(relax_step, mean_seg / dn) * d
        path = _equidistribute(moved[:i + 1], op) + _equidistribute(moved[i:], op)[1:]
        vals = np.array([phi(v, op, nl) for v in path])
    else:
        raise StagnationError(f"mountain-pass iteration hit max_outer={cfg.max_outer}",
                              {"level": state.phi, "grad_norm": state.grad_norm,
                               "iterations": it})
    return SolveReport(state.u, state.phi, state.grad_norm, it, method,
                       _is_supercritical(nl), timing=time.perf_counter() - start,
                       history=history)


def newton_matrix(u, op, nl):
    """Symmetric Jacobian ``A - diag(w_i df/dxi(x_i, y_i, u_i))``."""
    g = op.grid
    return (op.matrix - sp.diags(g.weights * nl.derivative(g.xi, g.yi, u))).tocsc()


@dataclass
class NewtonResult:
    u: np.ndarray
    converged: bool
    residuals: list
    fallback: bool = False


def newton_refine(u, op, nl, cfg=MpaCfg(), lin=LinearSolverCfg(), max_steps=20):
    """Damped Newton iteration on the discrete equation ``Phi'(u) = 0``.

    Steps are accepted when the dual residual at least halves; otherwise the
    step is halved up to eight times. A singular Jacobian or a rejected step
    returns ``fallback=True`` with the last accepted iterate.
    """
    u = np.array(u, dtype=float)
    res = dual_norm(phi_grad(u, op, nl), op, lin)
    residuals = [res]
    for _ in range(max_steps):
        if res <= cfg.grad_tol:
            return NewtonResult(u, True, residuals)
        gd = phi_grad(u, op, nl)
        try:
            with np.errstate(all="raise"):
                delta = spla.spsolve(newton_matrix(u, op, nl), -gd)
        except (RuntimeError, FloatingPointError, np.linalg.LinAlgError):
            return NewtonResult(u, False, residuals, fallback=True)
        if not np.all(np.isfinite(delta)):
            return NewtonResult(u, False, residuals, fallback=True)
        damping = 1.0
        for _ in range(9):
            trial = u + damping * delta
            r_trial = dual_norm(phi_grad(trial, op, nl), op, lin)
            if r_trial <= 0.5 * res:
                break
            damping *= 0.5
        else:
            # no sufficient decrease: either at roundoff level or diverging
            if res <= 10 * cfg.grad_tol:
                return NewtonResult(u, res <= cfg.grad_tol, residuals, fallback=True)
            return NewtonResult(u, False, residuals, fallback=True)
        u, res = trial, r_trial
        residuals.append(res)
    return NewtonResult(u, res <= cfg.grad_tol, residuals, fallback=res > cfg.grad_tol)
