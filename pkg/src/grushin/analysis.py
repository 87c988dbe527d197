"""Pohozaev audit, critical exponents, nonexistence trends and embedding constants."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .discretization import (assemble_grushin, build_grid, interpolate, norm_Lpk,
                             weight_power)
from .domain import boundary_quadrature, starshape_check
from .linalg import LinearSolverCfg, energy_solve
from .nonlinearity import PurePower
from .solvers import MpaCfg, nehari_minimize

__all__ = [
    "CriticalExponents",
    "critical_exponents",
    "pohozaev_coefficient",
    "PohozaevReport",
    "ProbeError",
    "pohozaev_evaluate",
    "default_boundary_samples",
    "TrendReport",
    "nonexistence_trend",
    "EmbeddingReport",
    "embedding_constant",
    "CompactnessReport",
    "compactness_probe",
    "oscillatory_sequence",
    "NONEXISTENCE",
    "INCONCLUSIVE",
]

NONEXISTENCE = "consistent-with-nonexistence"
INCONCLUSIVE = "inconclusive"


class CriticalExponents(NamedTuple):
    p_crit: float
    two_k: float


def critical_exponents(k):
    """``p_crit = (4 + 5k)/k`` and the embedding exponent ``2_k = (4 + 6k)/k``."""
    k = float(k)
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    return CriticalExponents((4.0 + 5.0 * k) / k, (4.0 + 6.0 * k) / k)


def pohozaev_coefficient(k, p):
    """Volume-side factor ``(2 + 3k)/(p + 1) - k/2``."""
    return (2.0 + 3.0 * k) / (p + 1.0) - k / 2.0


class ProbeError(ValueError):
    """A normal-derivative probe left the grid."""


@dataclass
class PohozaevReport:
    lhs: float
    rhs: float
    coeff: float
    rel_residual: float
    boundary_min_factor: float


def default_boundary_samples(grid):
    """Boundary samples fine enough for the surface side: 4 per grid spacing."""
    n = int(4 * grid.domain.perimeter / min(grid.hx, grid.hy))
    n += (-n) % 4
    return boundary_quadrature(grid.domain, max(n, 8))


def pohozaev_evaluate(grid, u, k, p, boundary=None):
    """Evaluate both sides of the Pohozaev-type identity for a power nonlinearity.

    The outward normal derivative is extrapolated from bilinear probes at
    distances ``h`` and ``2h`` along the inward normal, using ``u = 0`` on the
    boundary: ``du/dnu = -(4 u(s - h nu) - u(s - 2h nu)) / (2h)``.
    """
    boundary = default_boundary_samples(grid) if boundary is None else boundary
    u = np.asarray(u, dtype=float)
    coeff = pohozaev_coefficient(k, p)
    volume = float(np.sum(grid.weights * weight_power(grid.xi, k) * np.abs(u) ** (p + 1)))
    lhs = coeff * volume

    pts, nus, ws = boundary.points, boundary.normals, boundary.weights
    h = grid.h
    probes1 = pts - h * nus
    probes2 = pts - 2.0 * h * nus
    xmin, xmax, ymin, ymax = grid.x[0], grid.x[-1], grid.y[0], grid.y[-1]
    for probes in (probes1, probes2):
        out = ((probes[:, 0] < xmin) | (probes[:, 0] > xmax)
               | (probes[:, 1] < ymin) | (probes[:, 1] > ymax))
        if out.any():
            i = int(np.argmax(out))
            raise ProbeError(f"normal probe for boundary sample {i} at "
                             f"({pts[i, 0]:.6g}, {pts[i, 1]:.6g}) leaves the grid")
    u1 = interpolate(grid, u, probes1)
    u2 = interpolate(grid, u, probes2)
    dudn = -(4.0 * u1 - u2) / (2.0 * h)
    star = pts[:, 0] * nus[:, 0] + (1.0 + k) * pts[:, 1] * nus[:, 1]
    aniso = nus[:, 0] ** 2 + weight_power(pts[:, 0], k) * nus[:, 1] ** 2
    rhs = 0.5 * float(np.sum(ws * star * aniso * dudn**2))
    denom = max(abs(lhs), abs(rhs), 1e-300)
    return PohozaevReport(lhs, rhs, coeff, abs(lhs - rhs) / denom, float(star.min()))


@dataclass
class TrendReport:
    k: float
    p: float
    grids: list
    levels: list
    linf: list
    grad_norms: list
    verdict: str
    reports: list = field(default_factory=list, repr=False)


def _strictly(seq, sign):
    return all(sign * (b - a) > 0 for a, b in zip(seq, seq[1:]))


def nonexistence_trend(domain, k, p, grids, cfg=MpaCfg(), lin=LinearSolverCfg(), seed=0):
    """Refinement study of Nehari minimisers on a G_k-starshaped domain.

    The verdict is ``consistent-with-nonexistence`` when, over at least three
    grids, levels strictly decrease while the maximum norm strictly increases;
    otherwise ``inconclusive``.
    """
    check = starshape_check(domain, k, boundary_quadrature(domain, 4096))
    if not check.is_starshaped:
        raise ValueError(f"domain is not G_k-starshaped for k={k} "
                         f"(min boundary factor {check.min_value:.3g})")
    nl = PurePower(p, k)
    levels, linf, gnorms, reports = [], [], [], []
    for n in grids:
        nx, ny = (n, n) if np.isscalar(n) else n
        grid = build_grid(domain, nx, ny)
        op = assemble_grushin(grid, k)
        rep = nehari_minimize(op, nl, seed=seed, cfg=cfg, lin=lin)
        levels.append(rep.level)
        linf.append(rep.linf)
        gnorms.append(rep.grad_norm)
        reports.append(rep)
    consistent = len(levels) >= 3 and _strictly(levels, -1) and _strictly(linf, +1)
    return TrendReport(float(k), float(p), list(grids), levels, linf, gnorms,
                       NONEXISTENCE if consistent else INCONCLUSIVE, reports)


@dataclass
class EmbeddingReport:
    q: float
    k: float
    C_q_estimate: float
    maximizer: np.ndarray
    iterations: int
    history: list = field(default_factory=list, repr=False)


def _lq_ratio(op, u, q, k):
    e = np.sqrt(max(op.energy(u), 0.0))
    return norm_Lpk(op.grid, u, q, k) / e if e > 0 else 0.0


def embedding_constant(op, q, seed=0, iters=2000, rtol=1e-13, u0=None, lin=LinearSolverCfg()):
    """Estimate ``sup ||u||_{L^q_k} / ||grad_G u||`` over the discrete space.

    Normalised gradient ascent on the energy sphere: the next iterate is the
    energy-metric gradient of ``int |x|^2k |u|^q`` rescaled to unit energy. The
    objective is convex, so the ratio never decreases; a step that would lower
    it is rejected and the iteration stops.
    """
    k = op.k
    two_k = critical_exponents(k).two_k
    if not 1 <= q <= two_k:
        raise ValueError(f"q={q} outside [1, 2_k={two_k:g}]")
    grid = op.grid
    if u0 is None:
        rng = np.random.default_rng(seed)
        u = np.abs(rng.normal(size=grid.n_unknowns)) + 0.5
    else:
        u = np.asarray(u0, dtype=float).copy()
    u /= np.sqrt(op.energy(u))
    wk = grid.weights * weight_power(grid.xi, k)
    ratio = _lq_ratio(op, u, q, k)
    history = [ratio]
    it = 0
    for it in range(1, iters + 1):
        grad = wk * np.abs(u) ** (q - 1) * np.sign(u)
        w = energy_solve(op, grad, lin)
        e = np.sqrt(max(op.energy(w), 0.0))
        if e == 0:
            break
        w /= e
        new = _lq_ratio(op, w, q, k)
        if new < ratio:
            break
        u, change = w, (new - ratio) / new
        ratio = new
        history.append(ratio)
        if change <= rtol:
            break
    return EmbeddingReport(float(q), k, ratio, u, it, history)


@dataclass
class CompactnessReport:
    q: float
    lq_norms: np.ndarray
    energy_norms: np.ndarray
    residual_lq_norms: np.ndarray
    profile_decreasing: bool


def oscillatory_sequence(grid, count=8):
    """Unit-energy fields ``sin(m pi s_x) sin(pi s_y)`` for ``m = 1..count``."""
    xmin, xmax, ymin, ymax = grid.domain.bounding_box
    sx = (grid.xi - xmin) / (xmax - xmin)
    sy = (grid.yi - ymin) / (ymax - ymin)
    return [np.sin(m * np.pi * sx) * np.sin(np.pi * sy) for m in range(1, count + 1)]


def _coarse_space(grid, dim):
    xmin, xmax, ymin, ymax = grid.domain.bounding_box
    sx = (grid.xi - xmin) / (xmax - xmin)
    sy = (grid.yi - ymin) / (ymax - ymin)
    side = int(np.ceil(np.sqrt(dim)))
    modes = [np.sin(i * np.pi * sx) * np.sin(j * np.pi * sy)
             for i in range(1, side + 1) for j in range(1, side + 1)]
    return np.column_stack(modes[:dim])


def compactness_probe(op, q, sequence=None, seed=0, count=8, coarse_dim=4):
    """Diagnostic for the compact embedding below ``2_k``.

    Normalises the fields of ``sequence`` (default: :func:`oscillatory_sequence`)
    to unit energy and reports their ``L^q_k`` norms together with the norms of
    the part that is energy-orthogonal to a fixed coarse space of low modes.
    """
    k = op.k
    two_k = critical_exponents(k).two_k
    if not 1 <= q < two_k:
        raise ValueError(f"compactness is probed only for 1 <= q < 2_k={two_k:g}, got q={q}")
    grid = op.grid
    if sequence is None:
        sequence = oscillatory_sequence(grid, count)
    V = _coarse_space(grid, coarse_dim)
    KV = op.matrix @ V
    gram = V.T @ KV
    lq, en, res = [], [], []
    for u in sequence:
        u = np.asarray(u, dtype=float)
        e = np.sqrt(max(op.energy(u), 0.0))
        if e == 0:
            lq.append(0.0)
            en.append(0.0)
            res.append(0.0)
            continue
        u = u / e
        coef = np.linalg.solve(gram, KV.T @ u)
        r = u - V @ coef
        lq.append(norm_Lpk(grid, u, q, k))
        en.append(np.sqrt(max(op.energy(u), 0.0)))
        res.append(norm_Lpk(grid, r, q, k))
    lq = np.array(lq)
    decreasing = bool(np.all(np.diff(lq) <= 0)) if len(lq) > 1 else True
    return CompactnessReport(float(q), lq, np.array(en), np.array(res), decreasing)
