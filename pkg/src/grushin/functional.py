"""Energy functional, its discrete derivative and the energy-metric gradient."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import _check_dim
from .linalg import LinearSolverCfg, energy_solve

__all__ = [
    "EnergyState",
    "phi",
    "phi_grad",
    "riesz_gradient",
    "dual_norm",
    "energy_state",
    "random_unit_directions",
    "small_sphere_probe",
    "far_side_probe",
]


def phi(u, op, nl):
    """``0.5 <A u, u> - sum_i w_i F(x_i, y_i, u_i)``."""
    _check_dim(op, u)
    g = op.grid
    return 0.5 * op.energy(u) - float(np.sum(g.weights * nl.primitive(g.xi, g.yi, u)))


def phi_grad(u, op, nl):
    """Dual vector of the derivative: ``(A u)_i - w_i f(x_i, y_i, u_i)``."""
    _check_dim(op, u)
    g = op.grid
    return op.matrix @ u - g.weights * nl(g.xi, g.yi, u)


def riesz_gradient(grad_dual, op, lin=LinearSolverCfg()):
    """Representative of ``grad_dual`` in the energy inner product (``A g = grad_dual``)."""
    _check_dim(op, grad_dual)
    return energy_solve(op, grad_dual, lin)


def dual_norm(grad_dual, op, lin=LinearSolverCfg(), riesz=None):
    """``sqrt(<grad, A^-1 grad>)``, the norm of a dual vector."""
    g = riesz_gradient(grad_dual, op, lin) if riesz is None else riesz
    return float(np.sqrt(max(float(grad_dual @ g), 0.0)))


@dataclass
class EnergyState:
    u: np.ndarray
    phi: float
    grad_dual: np.ndarray
    grad_riesz: np.ndarray
    grad_norm: float


def energy_state(u, op, nl, lin=LinearSolverCfg()):
    u = np.asarray(u, dtype=float)
    gd = phi_grad(u, op, nl)
    gr = riesz_gradient(gd, op, lin)
    return EnergyState(u, phi(u, op, nl), gd, gr, dual_norm(gd, op, riesz=gr))


def random_unit_directions(op, count, seed=0, modes=4):
    """Smooth random fields of unit energy built from low sine modes."""
    rng = np.random.default_rng(seed)
    g = op.grid
    xmin, xmax, ymin, ymax = g.domain.bounding_box
    sx = (g.xi - xmin) / (xmax - xmin)
    sy = (g.yi - ymin) / (ymax - ymin)
    basis = np.column_stack([np.sin(i * np.pi * sx) * np.sin(j * np.pi * sy)
                             for i in range(1, modes + 1) for j in range(1, modes + 1)])
    out = []
    for _ in range(count):
        u = basis @ rng.normal(size=basis.shape[1])
        out.append(u / np.sqrt(op.energy(u)))
    return out


@dataclass
class SmallSphereProbe:
    rho: float
    alpha: float
    radii: np.ndarray
    minima: np.ndarray


def small_sphere_probe(op, nl, seed=0, n_dirs=50, rho0=1.0, max_halvings=40):
    """Backtracking search for a radius with ``min_j Phi(rho u_j) > 0``.

    ``u_j`` are ``n_dirs`` random unit-energy directions. Starting from
    ``rho0`` the radius is halved until the sampled minimum is positive; that
    minimum is reported as ``alpha``. Large radii are never tried, since a
    few random directions overestimate the infimum over the whole sphere
    once the power term matters.
    """
    dirs = random_unit_directions(op, n_dirs, seed)
    rho = float(rho0)
    radii, minima = [], []
    for _ in range(max_halvings + 1):
        radii.append(rho)
        minima.append(min(phi(rho * d, op, nl) for d in dirs))
        if minima[-1] > 0:
            break
        rho *= 0.5
    return SmallSphereProbe(radii[-1], minima[-1], np.array(radii), np.array(minima))


@dataclass
class FarSideProbe:
    R0: float
    radii: tuple
    values: tuple

    @property
    def negative(self):
        return all(v < 0 for v in self.values)

    @property
    def monotone(self):
        return all(b < a for a, b in zip(self.values, self.values[1:]))


def far_side_probe(op, nl, u_hat, R_start=1.0, max_doublings=60):
    """Double ``R`` until ``Phi(R u_hat) < 0`` and report values at ``R0, 2R0, 4R0``."""
    u_hat = np.asarray(u_hat, dtype=float)
    u_hat = u_hat / np.sqrt(op.energy(u_hat))
    R = float(R_start)
    for _ in range(max_doublings):
        if phi(R * u_hat, op, nl) < 0:
            radii = (R, 2 * R, 4 * R)
            return FarSideProbe(R, radii, tuple(phi(r * u_hat, op, nl) for r in radii))
        R *= 2.0
    raise ValueError(f"energy stays non-negative along the ray up to R={R:.3e}")
