"""Tensor grids, the discrete Grushin operator, weighted quadrature and norms.

Fields are plain 1-D arrays of values on the interior nodes (the unknowns);
Dirichlet data is structural. Quadrature routines also accept full-grid
arrays of shape ``(ny, nx)`` or callables ``g(x, y)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .domain import Domain, signed_inside

__all__ = [
    "Grid",
    "GrushinOperator",
    "DegenerateGridError",
    "build_grid",
    "assemble_grushin",
    "weight_power",
    "weighted_integral",
    "norm_Lpk",
    "norm_energy",
    "norm_S12",
    "to_full",
    "interpolate",
    "write_field",
    "read_field",
]

_MIN_ARM = 1e-3
_CUT_SUBSAMPLES = 16


class DegenerateGridError(ValueError):
    """The grid has too few nodes or interior unknowns."""


def weight_power(x, k):
    """``|x|**(2k)`` with the convention ``0**(2k) = 0`` for ``k > 0``."""
    ax = np.abs(np.asarray(x, dtype=float))
    if k == 0:
        return np.ones_like(ax)
    with np.errstate(divide="ignore"):
        return np.where(ax > 0, np.exp(2.0 * k * np.log(np.where(ax > 0, ax, 1.0))), 0.0)


@dataclass(eq=False)
class Grid:
    domain: Domain
    nx: int
    ny: int
    x: np.ndarray
    y: np.ndarray
    inside: np.ndarray
    index: np.ndarray
    node_weights: np.ndarray
    xi: np.ndarray = field(init=False)
    yi: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        jj, ii = np.nonzero(self.inside)
        self.xi = self.x[ii]
        self.yi = self.y[jj]
        self.weights = self.node_weights[jj, ii]

    @property
    def hx(self):
        return float(self.x[1] - self.x[0])

    @property
    def hy(self):
        return float(self.y[1] - self.y[0])

    @property
    def h(self):
        return max(self.hx, self.hy)

    @property
    def n_unknowns(self):
        return len(self.xi)

    def sample(self, func):
        """Evaluate ``func(x, y)`` on the interior nodes."""
        return np.asarray(func(self.xi, self.yi), dtype=float) * np.ones(self.n_unknowns)

    def __repr__(self):
        return (f"Grid(domain={self.domain.to_json()}, nx={self.nx}, ny={self.ny}, "
                f"unknowns={self.n_unknowns})")


def build_grid(domain, nx, ny):
    """Uniform tensor grid over the bounding box of ``domain``.

    Interior nodes are those with ``signed_inside < 0``; for rectangles the
    outermost nodes lie exactly on the boundary.
    """
    nx, ny = int(nx), int(ny)
    if nx < 8 or ny < 8:
        raise DegenerateGridError(f"grid needs nx, ny >= 8, got {nx}x{ny}")
    xmin, xmax, ymin, ymax = domain.bounding_box
    x = np.linspace(xmin, xmax, nx)
    y = np.linspace(ymin, ymax, ny)
    X, Y = np.meshgrid(x, y)
    inside = signed_inside(domain, (X, Y)) < 0
    if inside.sum() < 4:
        raise DegenerateGridError(f"only {int(inside.sum())} interior nodes")
    index = np.full((ny, nx), -1, dtype=np.int64)
    index[inside] = np.arange(int(inside.sum()))
    node_weights = _dual_cell_weights(domain, x, y)
    return Grid(domain, nx, ny, x, y, inside, index, node_weights)


def _dual_cell_weights(domain, x, y):
    # hx*hy times the fraction of each node's dual cell lying inside the domain
    hx, hy = x[1] - x[0], y[1] - y[0]
    if domain.kind == "rect":
        xmin, xmax, ymin, ymax = domain.params
        fx = np.clip(np.minimum(x + hx / 2, xmax) - np.maximum(x - hx / 2, xmin), 0, None)
        fy = np.clip(np.minimum(y + hy / 2, ymax) - np.maximum(y - hy / 2, ymin), 0, None)
        return np.outer(fy, fx)
    s = _CUT_SUBSAMPLES
    off = (np.arange(s) + 0.5) / s - 0.5
    X, Y = np.meshgrid(x, y)
    frac = np.zeros_like(X)
    for dy in off:
        for dx in off:
            frac += signed_inside(domain, (X + dx * hx, Y + dy * hy)) < 0
    return frac * (hx * hy / s**2)


def _arm_to_boundary(domain, px, py, axis, sign, h):
    # distance from interior nodes to the ellipse along +-x (axis 0) or +-y
    cx, cy, a, b = domain.params
    if axis == 0:
        half = a * np.sqrt(np.clip(1.0 - ((py - cy) / b) ** 2, 0.0, None))
        t = (cx + half - px) if sign > 0 else (px - (cx - half))
    else:
        half = b * np.sqrt(np.clip(1.0 - ((px - cx) / a) ** 2, 0.0, None))
        t = (cy + half - py) if sign > 0 else (py - (cy - half))
    return np.clip(t, _MIN_ARM * h, h)


@dataclass(eq=False)
class GrushinOperator:
    """Symmetric positive definite stiffness matrix of the Grushin operator.

    ``matrix`` realises the discrete energy product, ``u @ matrix @ v``
    approximating ``int grad_G u . grad_G v``. ``stencil`` is the pointwise
    finite-difference action, ``matrix / (hx * hy)``.
    """

    grid: Grid
    k: float
    matrix: sp.csr_matrix

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def weights(self):
        return self.grid.weights

    @property
    def stencil(self):
        return self.matrix / (self.grid.hx * self.grid.hy)

    def __matmul__(self, u):
        return self.matrix @ u

    def energy(self, u, v=None):
        v = u if v is None else v
        _check_dim(self, u)
        return float(u @ (self.matrix @ v))


def assemble_grushin(grid, k):
    """Assemble the 5-point Grushin stiffness matrix with Dirichlet rows removed.

    The y-stencil carries ``|x|^(2k)`` at the node's own abscissa. On ellipses
    the arms reaching past the boundary are shortened to the boundary distance
    and the row is divided by the full spacing, which keeps the matrix symmetric.
    """
    k = float(k)
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    hx, hy = grid.hx, grid.hy
    jj, ii = np.nonzero(grid.inside)
    n = grid.n_unknowns
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    wx = weight_power(grid.xi, k)
    for axis, (di, dj), h, coef in (
        (0, (1, 0), hx, np.full(n, hy / hx)),
        (0, (-1, 0), hx, np.full(n, hy / hx)),
        (1, (0, 1), hy, wx * hx / hy),
        (1, (0, -1), hy, wx * hx / hy),
    ):
        ni, nj = ii + di, jj + dj
        valid = (ni >= 0) & (ni < grid.nx) & (nj >= 0) & (nj < grid.ny)
        nbr = np.full(n, -1, dtype=np.int64)
        nbr[valid] = grid.index[nj[valid], ni[valid]]
        interior = nbr >= 0
        arm = np.full(n, h)
        if grid.domain.kind == "ellipse" and (~interior).any():
            cut = ~interior
            sign = di + dj
            arm[cut] = _arm_to_boundary(grid.domain, grid.xi[cut], grid.yi[cut], axis, sign, h)
        diag += coef * h / arm
        idx = np.nonzero(interior)[0]
        rows.append(idx)
        cols.append(nbr[idx])
        vals.append(-coef[idx])
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    A.sum_duplicates()
    A.sort_indices()
    return GrushinOperator(grid, k, A)


def _check_dim(op, u):
    if np.shape(u) != (op.shape[0],):
        raise ValueError(f"field of shape {np.shape(u)} does not match operator of size {op.shape[0]}")


def _quadrature_terms(grid, g):
    # returns (values, weights, abscissae) for interior vectors, full arrays or callables
    if callable(g):
        X, Y = np.meshgrid(grid.x, grid.y)
        vals = np.asarray(g(X, Y), dtype=float) * np.ones_like(X)
        return vals.ravel(), grid.node_weights.ravel(), X.ravel()
    g = np.asarray(g, dtype=float)
    if g.shape == (grid.n_unknowns,):
        return g, grid.weights, grid.xi
    if g.shape == (grid.ny, grid.nx):
        X = np.broadcast_to(grid.x, g.shape)
        return g.ravel(), grid.node_weights.ravel(), X.ravel()
    raise ValueError(f"cannot integrate values of shape {g.shape} on {grid!r}")


def weighted_integral(grid, k, g):
    """Nodal quadrature of ``int |x|^(2k) g dx dy`` over the domain."""
    vals, w, xs = _quadrature_terms(grid, g)
    return float(np.sum(w * weight_power(xs, k) * vals))


def norm_Lpk(grid, u, p, k):
    """Weighted Lebesgue norm ``(int |x|^(2k) |u|^p)^(1/p)``."""
    if not p >= 1:
        raise ValueError(f"L^p_k norm needs p >= 1, got {p}")
    vals, w, xs = _quadrature_terms(grid, u)
    return float(np.sum(w * weight_power(xs, k) * np.abs(vals) ** p)) ** (1.0 / p)


def norm_energy(u, op):
    """``sqrt(<A u, u>)``, the discrete ``||grad_G u||_{L^2}``."""
    return float(np.sqrt(max(op.energy(u), 0.0)))


def norm_S12(u, op):
    """``(||u||_{L^2}^2 + ||grad_G u||_{L^2}^2)^(1/2)``."""
    _check_dim(op, u)
    l2 = float(np.sum(op.weights * u * u))
    return float(np.sqrt(l2 + max(op.energy(u), 0.0)))


def to_full(grid, u):
    """Scatter interior values into a zero-padded ``(ny, nx)`` array."""
    full = np.zeros((grid.ny, grid.nx))
    full[grid.inside] = u
    return full


def interpolate(grid, u, points):
    """Bilinear interpolation of the zero-extended field at ``points`` (m x 2)."""
    from scipy.interpolate import RegularGridInterpolator

    interp = RegularGridInterpolator((grid.y, grid.x), to_full(grid, u), method="linear",
                                     bounds_error=True)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return interp(pts[:, ::-1])


_FIELD_TAG = "# grushin-field"


def write_field(path, grid, u, k):
    """Write the plain-text field dump; values use 17 significant digits."""
    full = to_full(grid, u)
    lines = [f"{_FIELD_TAG} nx={grid.nx} ny={grid.ny} k={float(k)!r} "
             f"domain={grid.domain.to_json()}"]
    for j in range(grid.ny):
        yj = grid.y[j]
        for i in range(grid.nx):
            lines.append(f"{i} {j} {grid.x[i]:.17g} {yj:.17g} {full[j, i]:.17g} "
                         f"{int(grid.inside[j, i])}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field(path):
    """Load a field dump. Returns ``(grid, values, k)``."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(_FIELD_TAG + " "):
            raise ValueError(f"{path}: not a grushin field file")
        rest = header[len(_FIELD_TAG) + 1:]
        head, _, domain_json = rest.partition(" domain=")
        meta = dict(item.split("=", 1) for item in head.split())
        try:
            nx, ny, k = int(meta["nx"]), int(meta["ny"]), float(meta["k"])
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{path}: malformed header: {exc}") from None
        domain = Domain.from_dict(json.loads(domain_json))
        data = np.loadtxt(fh, ndmin=2)
    grid = build_grid(domain, nx, ny)
    if data.shape != (nx * ny, 6):
        raise ValueError(f"{path}: expected {nx * ny} rows of 6 columns, got {data.shape}")
    inside = data[:, 5].reshape(ny, nx).astype(bool)
    if not np.array_equal(inside, grid.inside):
        raise ValueError(f"{path}: interior mask disagrees with the rebuilt grid")
    values = data[:, 4].reshape(ny, nx)[grid.inside]
    return grid, values, k
