"""End-to-end acceptance checks. Each test records a criterion title; the
terminal summary prints one PASS/FAIL line per criterion."""
import json
import time

import numpy as np
import pytest
import scipy.linalg

from grushin import (Domain, NONEXISTENCE, PurePower, assemble_grushin, boundary_quadrature,
                     build_grid, cg_solve, critical_exponents, far_side_probe, mpa_solve,
                     nehari_minimize, nonexistence_trend, norm_Lpk, phi, phi_grad,
                     pohozaev_coefficient, pohozaev_evaluate, small_sphere_probe,
                     smallest_eigenvalue, starshape_check)
from grushin.cli import main
from grushin.functional import random_unit_directions
from grushin.solvers import mountain_pass_endpoint, seed_field

from conftest import SQUARE, make_problem
from oracles import dense_phi, dense_stiffness


def _criterion(record_property, title):
    record_property("criterion", title)
    print(f"\n[acceptance] {title}")


def test_gradient_consistency(record_property):
    _criterion(record_property, "1. gradient consistency (finite-difference slope in [1.9, 2.1])")
    start = time.perf_counter()
    grid, op, nl = make_problem(33)
    rng = np.random.default_rng(2024)
    eps = np.array([1e-3, 1e-4, 1e-5, 1e-6])
    slopes = []
    for trial in range(20):
        # |v| large against |u| keeps the eps^2 term above roundoff at eps = 1e-6
        u = random_unit_directions(op, 1, seed=100 + trial)[0] * rng.uniform(0.5, 2.0)
        v = random_unit_directions(op, 1, seed=200 + trial)[0] * rng.uniform(300.0, 600.0)
        exact = phi_grad(u, op, nl) @ v
        err = [abs((phi(u + e * v, op, nl) - phi(u - e * v, op, nl)) / (2 * e) - exact)
               for e in eps]
        slopes.append(np.polyfit(np.log(eps), np.log(err), 1)[0])
    slopes = np.array(slopes)
    print(f"slopes in [{slopes.min():.4f}, {slopes.max():.4f}]")
    assert np.all((slopes >= 1.9) & (slopes <= 2.1))
    assert time.perf_counter() - start < 10.0


def test_dense_oracle_equivalence(record_property):
    _criterion(record_property, "2. dense-oracle equivalence on 9x9 (cg, eigen, phi)")
    start = time.perf_counter()
    grid, op, nl = make_problem(9)
    K, w = dense_stiffness(grid.x, grid.y, 1.0)
    rng = np.random.default_rng(7)
    b = rng.normal(size=grid.n_unknowns)
    x = cg_solve(op, b)
    x_ref = np.linalg.solve(K, b)
    assert np.max(np.abs(x - x_ref)) <= 1e-8 * np.max(np.abs(x_ref))

    eig = smallest_eigenvalue(op, grid.weights)
    lam_ref = scipy.linalg.eigh(K, np.diag(w), eigvals_only=True)[0]
    assert abs(eig.lambda_min - lam_ref) <= 1e-8 * lam_ref

    for _ in range(5):
        u = rng.normal(size=grid.n_unknowns)
        ref = dense_phi(grid.x, grid.y, 1.0, 3.0, u)
        assert abs(phi(u, op, nl) - ref) <= 1e-12 * max(1.0, abs(ref))
    assert time.perf_counter() - start < 1.0


def test_critical_exponents(record_property):
    _criterion(record_property, "3. critical exponents (9, 10) and (7, 8); coefficient zero at p_crit")
    assert tuple(critical_exponents(1)) == (9.0, 10.0)
    assert tuple(critical_exponents(2)) == (7.0, 8.0)
    rng = np.random.default_rng(3)
    for k in rng.uniform(0.1, 5.0, 20):
        assert abs(pohozaev_coefficient(k, critical_exponents(k).p_crit)) <= 1e-12


def test_existence_benchmark(record_property, nehari_runs):
    _criterion(record_property, "4. existence benchmark: Nehari and mountain pass agree (65x65)")
    start = time.perf_counter()
    grid, op, nl, neh = nehari_runs(3.0, 65)
    _, u1 = mountain_pass_endpoint(op, nl, seed_field(grid, 0))
    mpa = mpa_solve(op, nl, u1)
    print(f"levels nehari={neh.level:.10g} mpa={mpa.level:.10g}; "
          f"linf {neh.linf:.6g} / {mpa.linf:.6g}")
    for rep in (neh, mpa):
        assert rep.grad_norm <= 1e-8
        assert rep.level > 0
    assert abs(neh.level - mpa.level) <= 0.01 * neh.level
    assert abs(neh.linf - mpa.linf) <= 0.02 * neh.linf
    assert time.perf_counter() - start < 120.0


@pytest.mark.slow
def test_pohozaev_audit(record_property, nehari_runs):
    _criterion(record_property, "5. Pohozaev residual strictly decreasing over 33/65/129, finest <= 0.1")
    start = time.perf_counter()
    residuals = []
    for n in (33, 65, 129):
        grid, _, nl, rep = nehari_runs(3.0, n)
        residuals.append(pohozaev_evaluate(grid, rep.u_star, 1.0, 3.0).rel_residual)
    print("rel_residual", residuals)
    assert residuals[0] > residuals[1] > residuals[2]
    assert residuals[2] <= 0.1
    assert time.perf_counter() - start < 600.0


def test_holder_interpolation(record_property):
    _criterion(record_property, "6. Hoelder interpolation between L^1_k and L^(2_k)_k")
    grid = build_grid(SQUARE, 33, 33)
    k = 1.0
    two_k = critical_exponents(k).two_k
    rng = np.random.default_rng(11)
    for _ in range(100):
        u = rng.normal(size=grid.n_unknowns) * rng.uniform(1e-3, 1e3)
        for q in (3.0, 5.0, 9.0):
            mu = (two_k - q) / (two_k * q - q)
            lhs = norm_Lpk(grid, u, q, k)
            rhs = norm_Lpk(grid, u, 1.0, k) ** mu * norm_Lpk(grid, u, two_k, k) ** (1 - mu)
            assert lhs <= rhs * (1 + 1e-12)


def test_surface_positivity(record_property):
    _criterion(record_property, "7. starshape factor and surface integral non-negative")
    domains = [SQUARE, Domain.ellipse(0, 0, 1, 1), Domain.ellipse(0, 0, 1.5, 0.75)]
    for domain in domains:
        for k in (0.5, 1.0, 2.0):
            samples = boundary_quadrature(domain, 1024)
            check = starshape_check(domain, k, samples)
            assert check.is_starshaped and check.min_value >= -1e-12
            grid = build_grid(domain, 33, 33)
            op = assemble_grushin(grid, k)
            rep = nehari_minimize(op, PurePower(3.0, k), seed=0)
            poh = pohozaev_evaluate(grid, rep.u_star, k, 3.0)
            scale = abs(poh.rhs) + abs(poh.lhs)
            assert poh.rhs >= -1e-10 * scale


@pytest.mark.slow
def test_nonexistence_trend(record_property, nehari_runs):
    _criterion(record_property, "8. supercritical trend p=11 vs subcritical control p=3")
    start = time.perf_counter()
    trend = nonexistence_trend(SQUARE, 1.0, 11.0, [33, 65, 129])
    print("p=11 levels", trend.levels, "linf", trend.linf)
    assert trend.verdict == NONEXISTENCE
    control = [nehari_runs(3.0, n)[3] for n in (33, 65, 129)]
    levels = [r.level for r in control]
    linf = [r.linf for r in control]
    earned = (levels[0] > levels[1] > levels[2]) and (linf[0] < linf[1] < linf[2])
    assert not earned
    control_trend = nonexistence_trend(SQUARE, 1.0, 3.0, [33, 65])
    assert control_trend.verdict != NONEXISTENCE
    assert time.perf_counter() - start < 600.0


def test_mountain_pass_geometry(record_property):
    _criterion(record_property, "9. mountain-pass geometry probes (rho, alpha) and R-scan")
    grid, op, nl = make_problem(65)
    small = small_sphere_probe(op, nl, seed=0, n_dirs=50)
    print(f"rho={small.rho:.4g} alpha={small.alpha:.4g}")
    assert small.alpha > 0
    u_hat = seed_field(grid, 0) * (np.abs(grid.xi) >= 0.1)
    assert np.all(u_hat >= 0) and np.any(u_hat > 0)
    far = far_side_probe(op, nl, u_hat)
    print(f"R0={far.R0:g} values={far.values}")
    assert far.negative and far.monotone


def test_cli_determinism(record_property, tmp_path):
    _criterion(record_property, "10. determinism: identical solution.field bytes")
    cfg = {"domain": SQUARE.to_dict(), "k": 1.0,
           "nonlinearity": {"kind": "power", "p": 3.0}, "grid": {"nx": 33, "ny": 33},
           "seed": 5}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["solve", "--config", str(path), "--out", str(out)]) == 0
    assert (outs[0] / "solution.field").read_bytes() == (outs[1] / "solution.field").read_bytes()
