"""Planar domains, boundary quadrature and the G_k-starshape test."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "Domain",
    "BoundarySamples",
    "DomainError",
    "boundary_quadrature",
    "starshape_check",
    "StarshapeResult",
    "signed_inside",
]

STARSHAPE_TOL = 1e-12


class DomainError(ValueError):
    """Invalid domain geometry or request."""


@dataclass(frozen=True)
class Domain:
    """Rectangle ``(xmin, xmax, ymin, ymax)`` or ellipse ``(cx, cy, a, b)``."""

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in ("rect", "ellipse"):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if len(self.params) != 4 or not all(math.isfinite(float(v)) for v in self.params):
            raise DomainError("domain needs four finite parameters")
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        if self.kind == "rect":
            xmin, xmax, ymin, ymax = self.params
            if not (xmin < xmax and ymin < ymax):
                raise DomainError("rectangle requires xmin < xmax and ymin < ymax")
        else:
            _, _, a, b = self.params
            if not (a > 0 and b > 0):
                raise DomainError("ellipse requires a > 0 and b > 0")

    @classmethod
    def rectangle(cls, xmin, xmax, ymin, ymax):
        return cls("rect", (xmin, xmax, ymin, ymax))

    @classmethod
    def ellipse(cls, cx, cy, a, b):
        return cls("ellipse", (cx, cy, a, b))

    @property
    def bounding_box(self):
        if self.kind == "rect":
            return self.params
        cx, cy, a, b = self.params
        return (cx - a, cx + a, cy - b, cy + b)

    @property
    def contains_origin(self):
        return bool(signed_inside(self, (0.0, 0.0)) < 0)

    @property
    def meets_degenerate_line(self):
        """True when the open domain intersects ``{x = 0}``."""
        xmin, xmax, _, _ = self.bounding_box
        return xmin < 0.0 < xmax

    def require_degenerate_line(self):
        if not self.meets_degenerate_line:
            raise DomainError("domain must intersect the line x = 0")
        return self

    @property
    def perimeter(self):
        if self.kind == "rect":
            xmin, xmax, ymin, ymax = self.params
            return 2.0 * ((xmax - xmin) + (ymax - ymin))
        from scipy.special import ellipe

        _, _, a, b = self.params
        big, small = max(a, b), min(a, b)
        return 4.0 * big * ellipe(1.0 - (small / big) ** 2)

    def to_dict(self):
        if self.kind == "rect":
            keys = ("xmin", "xmax", "ymin", "ymax")
        else:
            keys = ("cx", "cy", "a", "b")
        out = {"kind": self.kind}
        out.update(zip(keys, self.params))
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise DomainError("domain must be a JSON object")
        kind = data.get("kind")
        keys = {"rect": ("xmin", "xmax", "ymin", "ymax"),
                "ellipse": ("cx", "cy", "a", "b")}.get(kind)
        if keys is None:
            raise DomainError(f"unknown domain kind {kind!r}")
        extra = set(data) - set(keys) - {"kind"}
        if extra:
            raise DomainError(f"unknown domain keys: {sorted(extra)}")
        missing = [key for key in keys if key not in data]
        if missing:
            raise DomainError(f"missing domain keys: {missing}")
        try:
            params = tuple(float(data[key]) for key in keys)
        except (TypeError, ValueError) as exc:
            raise DomainError(f"non-numeric domain parameter: {exc}") from None
        return cls(kind, params)


@dataclass(frozen=True)
class BoundarySamples:
    """Boundary points with unit outward normals and arc-length weights.

    Arrays are stored column-wise, one row per sample, in counterclockwise order.
    """

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        for pt, nu, w in zip(self.points, self.normals, self.weights):
            yield (float(pt[0]), float(pt[1])), (float(nu[0]), float(nu[1])), float(w)


def signed_inside(domain, point):
    """Level-set value: negative inside, zero on the boundary, positive outside.

    Accepts a single ``(x, y)`` pair or arrays of coordinates.
    """
    x = np.asarray(point[0], dtype=float)
    y = np.asarray(point[1], dtype=float)
    if domain.kind == "ellipse":
        cx, cy, a, b = domain.params
        val = ((x - cx) / a) ** 2 + ((y - cy) / b) ** 2 - 1.0
    else:
        xmin, xmax, ymin, ymax = domain.params
        # max of the four half-plane functions: exact sign, zero on edges
        val = np.maximum.reduce([xmin - x, x - xmax, ymin - y, y - ymax])
    return float(val) if val.ndim == 0 else val


def boundary_quadrature(domain, n):
    """Sample ``n`` points on the boundary with outward normals and weights."""
    n = int(n)
    if n < 8:
        raise DomainError(f"boundary quadrature needs n >= 8, got {n}")
    if domain.kind == "ellipse":
        cx, cy, a, b = domain.params
        theta = 2.0 * np.pi * np.arange(n) / n
        c, s = np.cos(theta), np.sin(theta)
        points = np.column_stack([cx + a * c, cy + b * s])
        normals = np.column_stack([b * c, a * s])
        speed = np.hypot(normals[:, 0], normals[:, 1])
        normals /= speed[:, None]
        # periodic trapezoid rule: spectrally accurate arc length
        weights = speed * (2.0 * np.pi / n)
        return BoundarySamples(points, normals, weights)

    xmin, xmax, ymin, ymax = domain.params
    lx, ly = xmax - xmin, ymax - ymin
    edges = [
        ((xmin, ymin), (xmax, ymin), (0.0, -1.0), lx),
        ((xmax, ymin), (xmax, ymax), (1.0, 0.0), ly),
        ((xmax, ymax), (xmin, ymax), (0.0, 1.0), lx),
        ((xmin, ymax), (xmin, ymin), (-1.0, 0.0), ly),
    ]
    counts = _split_count(n, [lx, ly, lx, ly])
    pts, nus, ws = [], [], []
    for (start, end, normal, length), m in zip(edges, counts):
        t = (np.arange(m) + 0.5) / m
        pts.append(np.column_stack([start[0] + t * (end[0] - start[0]),
                                    start[1] + t * (end[1] - start[1])]))
        nus.append(np.tile(normal, (m, 1)))
        w = np.full(m, length / m)
        # the last weight absorbs the rounding so each edge sums exactly to its length
        w[-1] = length - math.fsum(w[:-1])
        ws.append(w)
    return BoundarySamples(np.vstack(pts), np.vstack(nus), np.concatenate(ws))


def _split_count(n, lengths):
    # at least one midpoint per edge, the rest proportional to edge length
    total = sum(lengths)
    counts = [max(1, int(n * length / total)) for length in lengths]
    i = 0
    while sum(counts) < n:
        counts[i % 4] += 1
        i += 1
    while sum(counts) > n:
        j = int(np.argmax(counts))
        counts[j] -= 1
    return counts


class StarshapeResult(NamedTuple):
    is_starshaped: bool
    min_value: float


def starshape_check(domain, k, samples):
    """Decide G_k-starshapedness with respect to the origin.

    Returns ``(is_starshaped, min_value)``, where ``min_value`` is the minimum of
    ``x nu_x + (1 + k) y nu_y`` over the samples.
    """
    if k <= 0:
        raise DomainError("k must be positive")
    pts, nus = samples.points, samples.normals
    factor = pts[:, 0] * nus[:, 0] + (1.0 + k) * pts[:, 1] * nus[:, 1]
    min_value = float(factor.min())
    return StarshapeResult(domain.contains_origin and min_value >= -STARSHAPE_TOL, min_value)
