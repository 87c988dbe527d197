"""Right-hand sides ``f(x, y, xi)``, their primitives and hypothesis validators."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .discretization import weight_power
from .domain import signed_inside

__all__ = [
    "Nonlinearity",
    "PurePower",
    "preset",
    "PRESETS",
    "HypothesisResult",
    "HypothesisReport",
    "check_A1_A5",
    "check_lemma45_monotone",
    "f_eval",
    "F_eval",
]


@dataclass(frozen=True)
class Nonlinearity:
    """A nonlinearity ``f`` with primitive ``F`` and hypothesis metadata.

    ``f``, ``F`` and ``df`` are vectorised callables ``(x, y, xi, k)``; ``df`` is
    the derivative in ``xi`` used by Newton steps. ``psi`` and ``phi`` default to
    sampled constants when left as ``None``.
    """

    k: float
    f: Callable
    F: Callable
    df: Optional[Callable] = None
    name: str = "custom"
    p: Optional[float] = None
    q1: Optional[float] = None
    C0: float = 0.0
    C: float = 1.0
    psi: Optional[Callable] = None
    phi: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")

    @property
    def is_pure_power(self):
        return self.name == "power"

    def __call__(self, x, y, xi):
        return self.f(x, y, xi, self.k)

    def primitive(self, x, y, xi):
        return self.F(x, y, xi, self.k)

    def derivative(self, x, y, xi):
        if self.df is not None:
            return self.df(x, y, xi, self.k)
        # central difference fallback for presets without an analytic derivative
        xi = np.asarray(xi, dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(xi))
        return (self.f(x, y, xi + h, self.k) - self.f(x, y, xi - h, self.k)) / (2 * h)

    def scaled(self, factor):
        """Return ``factor * f`` (used to check scaling covariance)."""
        f, F, df = self.f, self.F, self.df
        return Nonlinearity(
            k=self.k,
            f=lambda x, y, s, k: factor * f(x, y, s, k),
            F=lambda x, y, s, k: factor * F(x, y, s, k),
            df=None if df is None else (lambda x, y, s, k: factor * df(x, y, s, k)),
            name=f"{self.name}*{factor:g}", p=self.p, q1=self.q1, C0=self.C0, C=self.C,
        )

    def to_dict(self):
        if self.is_pure_power:
            return {"kind": "power", "p": self.p}
        return {"kind": f"preset:{self.name}"}


def _power_f(p):
    def f(x, y, xi, k):
        xi = np.asarray(xi, dtype=float)
        return weight_power(x, k) * np.abs(xi) ** (p - 1) * xi
    return f


def _power_F(p):
    def F(x, y, xi, k):
        return weight_power(x, k) * np.abs(np.asarray(xi, dtype=float)) ** (p + 1) / (p + 1)
    return F


def _power_df(p):
    def df(x, y, xi, k):
        return p * weight_power(x, k) * np.abs(np.asarray(xi, dtype=float)) ** (p - 1)
    return df


def PurePower(p, k, q1=None, C0=0.0, C=1.0):
    """The model nonlinearity ``|x|^(2k) |xi|^(p-1) xi``."""
    p = float(p)
    if not p >= 1:
        raise ValueError(f"power nonlinearity requires p >= 1, got p={p}")
    return Nonlinearity(k=float(k), f=_power_f(p), F=_power_F(p), df=_power_df(p),
                        name="power", p=p, q1=p + 1 if q1 is None else float(q1),
                        C0=float(C0), C=float(C),
                        phi=lambda x, y: np.zeros_like(np.asarray(x, dtype=float)))


def _cubic_quadratic(k):
    # |x|^2k (xi^3 + |xi| xi): superlinear, not a pure power
    return Nonlinearity(
        k=k,
        f=lambda x, y, s, k: weight_power(x, k) * (s**3 + np.abs(s) * s),
        F=lambda x, y, s, k: weight_power(x, k) * (s**4 / 4 + np.abs(s) ** 3 / 3),
        df=lambda x, y, s, k: weight_power(x, k) * (3 * s**2 + 2 * np.abs(s)),
        name="cubic_quadratic", q1=5.0, C0=2.0, C=1.0,
        phi=lambda x, y: np.zeros_like(np.asarray(x, dtype=float)),
    )


def _linear(k):
    return Nonlinearity(
        k=k,
        f=lambda x, y, s, k: weight_power(x, k) * s,
        F=lambda x, y, s, k: weight_power(x, k) * s**2 / 2,
        df=lambda x, y, s, k: weight_power(x, k) * np.ones_like(s),
        name="linear", q1=2.5, C0=1.0, C=1.0,
    )


def _inconsistent_linear(k):
    # F is deliberately twice the primitive of f; exercises the monotonicity validator
    return Nonlinearity(
        k=k,
        f=lambda x, y, s, k: weight_power(x, k) * s,
        F=lambda x, y, s, k: weight_power(x, k) * s**2,
        df=lambda x, y, s, k: weight_power(x, k) * np.ones_like(s),
        name="inconsistent_linear", q1=2.5, C0=1.0, C=1.0,
    )


PRESETS = {
    "cubic_quadratic": _cubic_quadratic,
    "linear": _linear,
    "inconsistent_linear": _inconsistent_linear,
}


def preset(name, k):
    try:
        return PRESETS[name](float(k))
    except KeyError:
        raise ValueError(f"unknown nonlinearity preset {name!r}; "
                         f"available: {sorted(PRESETS)}") from None


def f_eval(nl, x, y, xi):
    return nl(x, y, xi)


def F_eval(nl, x, y, xi):
    return nl.primitive(x, y, xi)


@dataclass
class HypothesisResult:
    passed: bool
    witness: Optional[tuple] = None
    detail: str = ""


@dataclass
class HypothesisReport:
    seed: int
    sample_count: int
    results: dict

    @property
    def all_passed(self):
        return all(r.passed for r in self.results.values())

    def __getitem__(self, key):
        return self.results[key]

    def rows(self):
        for name, res in self.results.items():
            yield {"hypothesis": name, "passed": res.passed,
                   "witness": "" if res.witness is None else " ".join(f"{v:.6g}" for v in res.witness),
                   "detail": res.detail}


def _sample_points(domain, count, rng, min_abs_x=0.0):
    xmin, xmax, ymin, ymax = domain.bounding_box
    pts = []
    got = 0
    while got < count:
        x = rng.uniform(xmin, xmax, 4 * count)
        y = rng.uniform(ymin, ymax, 4 * count)
        keep = (signed_inside(domain, (x, y)) < 0) & (np.abs(x) >= min_abs_x)
        pts.append(np.column_stack([x[keep], y[keep]]))
        got += int(keep.sum())
    pts = np.vstack(pts)[:count]
    return pts[:, 0], pts[:, 1]


def _sample_xi(count, rng, C):
    half = count // 2
    mag = 10.0 ** rng.uniform(-6.0, 3.0, count - half)
    wide = mag * rng.choice([-1.0, 1.0], count - half)
    narrow = rng.uniform(-C, C, half) if C > 0 else np.zeros(half)
    return np.concatenate([wide, narrow])


def _first_failure(mask, *cols):
    bad = np.nonzero(~mask)[0]
    if bad.size == 0:
        return None
    i = bad[0]
    return tuple(float(c[i]) for c in cols)


def check_A1_A5(nl, domain, sample_count=2000, seed=0):
    """Statistical spot-checks of the standing hypotheses on ``f``.

    Points are drawn inside ``domain``; ``xi`` spans ``[-1e3, 1e3]`` log-spaced
    plus ``[-C, C]``. Failures carry a witness ``(x, y, xi, value)``. The
    limit checks use points with ``|x| >= 0.1`` only, since the weight kills
    ``f`` on the line ``x = 0``.
    """
    if sample_count < 1000:
        raise ValueError("sample_count must be at least 1000")
    rng = np.random.default_rng(seed)
    k, C = nl.k, nl.C
    from .analysis import critical_exponents

    two_k = critical_exponents(k).two_k
    x, y = _sample_points(domain, sample_count, rng)
    xi = _sample_xi(sample_count, rng, C)
    wx = weight_power(x, k)
    fv = nl(x, y, xi)
    results = {}

    # (A1) growth bound
    q1 = nl.q1
    if q1 is None or not (2 < q1 < two_k):
        results["A1"] = HypothesisResult(False, None, f"q1={q1} not in (2, {two_k:g})")
    else:
        bound = wx * (np.abs(xi) ** (q1 - 1) + nl.C0)
        ok = np.abs(fv) <= bound * (1 + 1e-12) + 1e-300
        results["A1"] = HypothesisResult(bool(ok.all()), _first_failure(ok, x, y, xi, fv),
                                         f"q1={q1:g}, C0={nl.C0:g}")

    # (A2) bound on |xi| <= C by |x|^2k psi; psi calibrated on an independent draw
    xc, yc = _sample_points(domain, sample_count, rng)
    # include the endpoints: for |f| increasing in |xi| the bound is attained there
    xi_c = rng.uniform(-C, C, sample_count)
    xi_c[:4] = (-C, C, -C, C)
    small = np.abs(xi) <= C
    if nl.psi is not None:
        psi = np.asarray(nl.psi(x, y), dtype=float) * np.ones_like(x)
        psi_note = "declared psi"
    else:
        wc = weight_power(xc, k)
        ratio = np.abs(nl(xc, yc, xi_c)) / np.where(wc > 0, wc, np.inf)
        psi_const = float(np.max(ratio)) if ratio.size else 0.0
        psi = np.full_like(x, psi_const * (1 + 1e-9))
        psi_note = f"psi={psi_const:.6g} (sampled constant)"
    ok = ~small | (np.abs(fv) <= wx * psi * (1 + 1e-9) + 1e-300)
    finite_l1 = bool(np.all(np.isfinite(psi)) and np.all(psi >= 0))
    results["A2"] = HypothesisResult(bool(ok.all()) and finite_l1,
                                     _first_failure(ok, x, y, xi, fv), psi_note)

    # (A3) non-positive lower bound for f / xi
    nz = xi != 0
    ratio = np.where(nz, fv / np.where(nz, xi, 1.0), 0.0)
    if nl.phi is not None:
        phi = np.asarray(nl.phi(x, y), dtype=float) * np.ones_like(x)
        phi_note = "declared phi"
    else:
        rc = nl(xc, yc, xi_c) / np.where(xi_c != 0, xi_c, 1.0)
        phi = np.full_like(x, min(0.0, float(rc.min())) * (1 + 1e-9))
        phi_note = f"phi={float(phi[0]):.6g} (sampled constant)"
    ok = (phi <= 0) & (~nz | (phi <= ratio + 1e-12 * np.abs(ratio)))
    results["A3"] = HypothesisResult(bool(ok.all()), _first_failure(ok, x, y, xi, ratio), phi_note)

    # (A4) f(., ., 0) = 0 and the two limits
    f0 = nl(x, y, np.zeros_like(x))
    ok = f0 == 0
    results["A4_zero"] = HypothesisResult(bool(ok.all()), _first_failure(ok, x, y, f0))
    xl, yl = _sample_points(domain, 200, rng, min_abs_x=0.1)
    seq = 10.0 ** -np.arange(1, 13)
    worst = None
    for sign in (1.0, -1.0):
        s = sign * seq[None, :]
        r = nl(xl[:, None], yl[:, None], s) / (weight_power(xl, k)[:, None] * s)
        final = np.abs(r[:, -1])
        bad = final >= 0.01
        if bad.any() and worst is None:
            i = int(np.argmax(bad))
            worst = (float(xl[i]), float(yl[i]), float(s[0, -1]), float(r[i, -1]))
    results["A4_small"] = HypothesisResult(worst is None, worst,
                                           "|f / (|x|^2k xi)| < 0.01 at xi = +-1e-12")
    grow = 10.0 ** (np.arange(7) / 2.0)
    r = nl(xl[:, None], yl[:, None], grow[None, :]) / grow[None, :]
    mono = np.all(np.diff(r, axis=1) > 0, axis=1)
    factor = r[:, -1] >= 10.0 * np.abs(r[:, 0])
    ok = mono & factor
    results["A4_large"] = HypothesisResult(
        bool(ok.all()), _first_failure(ok, xl, yl, np.full_like(xl, grow[-1]), r[:, -1]),
        "f/xi strictly increasing on [1, 1e3] and grows tenfold")

    # (A5) f / xi increasing on xi >= C, decreasing on xi <= -C
    top = max(C, 1e-12)
    grid = np.geomspace(top, max(1e3, 10 * top), 60)
    xs5, ys5 = xl[:50], yl[:50]
    ok = np.ones(len(xs5), dtype=bool)
    for sign in (1.0, -1.0):
        s = sign * grid[None, :]
        r = nl(xs5[:, None], ys5[:, None], s) / s
        d = np.diff(r, axis=1)
        slack = 1e-12 * np.max(np.abs(r), axis=1, keepdims=True)
        ok &= np.all(d >= -slack, axis=1)
    results["A5"] = HypothesisResult(bool(ok.all()),
                                     _first_failure(ok, xs5, ys5, np.full_like(xs5, top)),
                                     f"C={C:g}")
    return HypothesisReport(seed=seed, sample_count=sample_count, results=results)


def check_lemma45_monotone(nl, x, y, xi_grid, C=None):
    """Check that ``xi -> f xi - 2F`` is nondecreasing on ``xi >= C`` and
    nonincreasing on ``xi <= -C`` (relative slack ``1e-12``)."""
    xi = np.asarray(xi_grid, dtype=float)
    if np.any(np.diff(xi) < 0):
        raise ValueError("xi_grid must be sorted")
    C = nl.C if C is None else C
    g = nl(x, y, xi) * xi - 2 * nl.primitive(x, y, xi)
    slack = 1e-12 * max(1.0, float(np.max(np.abs(g)))) if g.size else 0.0
    right = g[xi >= C]
    left = g[xi <= -C]
    return bool(np.all(np.diff(right) >= -slack) and np.all(np.diff(left) <= slack))
