import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grushin.analysis import critical_exponents, embedding_constant
from grushin.discretization import (DegenerateGridError, assemble_grushin, build_grid,
                                    interpolate, norm_energy, norm_Lpk, norm_S12, read_field,
                                    to_full, weight_power, weighted_integral, write_field)
from grushin.domain import Domain, signed_inside
from grushin.linalg import smallest_eigenvalue

from oracles import gradient_quadrature_energy

SQUARE = Domain.rectangle(-1.0, 1.0, -1.0, 1.0)
DISK = Domain.ellipse(0.0, 0.0, 1.0, 1.0)


def test_square_interior_count():
    assert build_grid(SQUARE, 17, 17).n_unknowns == 225


def test_disk_interior_count_brute_force():
    grid = build_grid(DISK, 9, 9)
    xs = np.linspace(-1, 1, 9)
    count = sum(1 for x in xs for y in xs if x * x + y * y < 1)
    assert grid.n_unknowns == count


def test_interior_mask_matches_level_set():
    dom = Domain.ellipse(0.1, -0.2, 1.3, 0.8)
    grid = build_grid(dom, 21, 17)
    X, Y = np.meshgrid(grid.x, grid.y)
    assert np.array_equal(grid.inside, signed_inside(dom, (X, Y)) < 0)
    assert np.array_equal(np.sort(grid.index[grid.inside]), np.arange(grid.n_unknowns))


def test_rectangle_boundary_nodes_on_edges():
    grid = build_grid(Domain.rectangle(-1, 2, -0.5, 1.5), 13, 9)
    assert grid.x[0] == -1 and grid.x[-1] == 2 and grid.y[0] == -0.5 and grid.y[-1] == 1.5
    assert not grid.inside[0].any() and not grid.inside[:, -1].any()


def test_degenerate_grids_rejected():
    with pytest.raises(DegenerateGridError):
        build_grid(DISK, 3, 3)
    with pytest.raises(DegenerateGridError):
        build_grid(SQUARE, 17, 7)


def test_nonpositive_k_rejected():
    grid = build_grid(SQUARE, 9, 9)
    for k in (0.0, -1.0):
        with pytest.raises(ValueError):
            assemble_grushin(grid, k)


def test_weight_power_conventions():
    assert weight_power(np.array([0.0]), 0.5)[0] == 0.0
    assert weight_power(np.array([0.0, 2.0]), 0.0).tolist() == [1.0, 1.0]
    assert np.isclose(weight_power(np.array([-0.5]), 0.75)[0], 0.5 ** 1.5)


def test_diagonal_entry_single_node():
    grid = build_grid(SQUARE, 17, 17)
    op = assemble_grushin(grid, 1.0)
    h = grid.hx
    r = grid.index[5, 11]
    e = np.zeros(grid.n_unknowns)
    e[r] = 1.0
    x0 = grid.x[11]
    assert np.isclose((op.stencil @ e)[r], 2 / h**2 + 2 * x0**2 / h**2, rtol=1e-14)


def test_stencil_second_order_away_from_axis():
    errors, hs = [], []
    for n in (17, 33, 65, 129):
        grid = build_grid(SQUARE, n, n)
        op = assemble_grushin(grid, 1.0)
        u = np.sin(np.pi * (grid.xi + 1) / 2) * np.sin(np.pi * (grid.yi + 1) / 2)
        exact = (np.pi / 2) ** 2 * (1 + grid.xi**2) * u
        away = np.abs(grid.xi) >= 0.25
        errors.append(np.max(np.abs(op.stencil @ u - exact)[away]))
        hs.append(grid.h)
    order = np.polyfit(np.log(hs), np.log(errors), 1)[0]
    assert 1.9 <= order <= 2.1


@pytest.mark.parametrize("dom", [SQUARE, DISK, Domain.ellipse(0.2, 0.1, 1.4, 0.9)])
def test_operator_symmetric_positive_definite(dom):
    grid = build_grid(dom, 23, 19)
    op = assemble_grushin(grid, 1.5)
    A = op.matrix
    assert abs(A - A.T).max() <= 1e-13 * abs(A).max()
    rng = np.random.default_rng(0)
    for _ in range(20):
        u, v = rng.normal(size=(2, grid.n_unknowns))
        lhs, rhs = (A @ u) @ v, u @ (A @ v)
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)
    assert smallest_eigenvalue(op, grid.weights).lambda_min > 0


def test_weighted_integral_examples():
    grid = build_grid(SQUARE, 129, 129)
    assert abs(weighted_integral(grid, 1.0, lambda x, y: 1.0) - 4 / 3) <= 1e-3
    assert abs(weighted_integral(grid, 1.0, np.ones((129, 129))) - 4 / 3) <= 1e-3
    assert weighted_integral(grid, 1.0, np.zeros(grid.n_unknowns)) == 0.0
    assert abs(weighted_integral(grid, 0.0, lambda x, y: 1.0) - 4.0) <= 1e-12


def test_disk_area_from_cut_weights():
    grid = build_grid(DISK, 65, 65)
    assert abs(weighted_integral(grid, 0.0, lambda x, y: 1.0) - np.pi) <= 1e-3


def test_norm_Lpk_examples():
    grid = build_grid(SQUARE, 129, 129)
    assert norm_Lpk(grid, np.zeros(grid.n_unknowns), 2, 1.0) == 0.0
    assert abs(norm_Lpk(grid, np.ones((129, 129)), 2, 1.0) - np.sqrt(4 / 3)) <= 1e-3
    u = np.random.default_rng(1).normal(size=grid.n_unknowns)
    assert np.isclose(norm_Lpk(grid, -3 * u, 3, 1.0), 3 * norm_Lpk(grid, u, 3, 1.0), rtol=1e-14)
    with pytest.raises(ValueError):
        norm_Lpk(grid, u, 0.5, 1.0)


def test_energy_norm_against_gradient_quadrature():
    grid = build_grid(SQUARE, 65, 65)
    op = assemble_grushin(grid, 1.0)
    f = lambda x, y: np.sin(np.pi * (x + 1) / 2) * np.sin(np.pi * (y + 1)) * (1 + 0.3 * x)
    u = f(grid.xi, grid.yi)
    ref = gradient_quadrature_energy(grid.x, grid.y, 1.0, to_full(grid, u))
    assert abs(op.energy(u) - ref) <= 0.02 * ref
    assert norm_energy(np.zeros_like(u), op) == 0.0
    assert np.isclose(norm_energy(-2.5 * u, op), 2.5 * norm_energy(u, op), rtol=1e-14)


def test_energy_dimension_mismatch():
    op = assemble_grushin(build_grid(SQUARE, 9, 9), 1.0)
    with pytest.raises(ValueError):
        norm_energy(np.ones(5), op)


def test_S12_bounds():
    grid = build_grid(SQUARE, 33, 33)
    op = assemble_grushin(grid, 1.0)
    lam = smallest_eigenvalue(op, grid.weights).lambda_min
    rng = np.random.default_rng(4)
    assert norm_S12(np.zeros(grid.n_unknowns), op) == 0.0
    for _ in range(20):
        u = rng.normal(size=grid.n_unknowns)
        e, s = norm_energy(u, op), norm_S12(u, op)
        assert e <= s <= np.sqrt(1 + 1 / lam) * e * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.25, 4.0), st.floats(0.001, 0.999), st.integers(0, 2**32 - 1),
       st.floats(1e-3, 1e3))
def test_holder_interpolation_property(k, frac, seed, scale):
    grid = build_grid(SQUARE, 9, 9)
    two_k = critical_exponents(k).two_k
    q = 1 + frac * (two_k - 1)
    u = np.random.default_rng(seed).normal(size=grid.n_unknowns) * scale
    mu = (two_k - q) / (two_k * q - q)
    lhs = norm_Lpk(grid, u, q, k)
    rhs = norm_Lpk(grid, u, 1, k) ** mu * norm_Lpk(grid, u, two_k, k) ** (1 - mu)
    assert lhs <= rhs * (1 + 1e-12)


def test_sobolev_ratio_below_estimated_constant():
    grid = build_grid(SQUARE, 17, 17)
    op = assemble_grushin(grid, 1.0)
    rng = np.random.default_rng(9)
    fields = [rng.normal(size=grid.n_unknowns) for _ in range(50)]
    for q in (2.0, 4.0, critical_exponents(1.0).two_k):
        C = embedding_constant(op, q, seed=0).C_q_estimate
        for u in fields:
            assert norm_Lpk(grid, u, q, 1.0) / norm_energy(u, op) <= C


@pytest.mark.parametrize("dom", [SQUARE, DISK])
def test_field_round_trip_bit_exact(tmp_path, dom):
    grid = build_grid(dom, 17, 13)
    u = np.random.default_rng(2).normal(size=grid.n_unknowns) * 1e3 ** np.linspace(-3, 3, grid.n_unknowns)
    path = tmp_path / "u.field"
    write_field(path, grid, u, 0.7)
    grid2, u2, k2 = read_field(path)
    assert k2 == 0.7 and grid2.nx == 17 and grid2.ny == 13 and grid2.domain == dom
    assert np.array_equal(u, u2)
    header = path.read_text().splitlines()[0]
    assert header.startswith("# grushin-field nx=17 ny=13 k=0.7 domain=")


def test_interpolate_reproduces_nodes():
    grid = build_grid(SQUARE, 9, 9)
    u = np.arange(grid.n_unknowns, dtype=float)
    pts = np.column_stack([grid.xi, grid.yi])
    assert np.allclose(interpolate(grid, u, pts), u)
