"""Variational solvers and numerical audits for the Grushin-type Dirichlet problem

    -u_xx - |x|^(2k) u_yy = f(x, y, u)  in Omega,   u = 0 on the boundary.
"""
from .analysis import (INCONCLUSIVE, NONEXISTENCE, critical_exponents, compactness_probe,
                       embedding_constant, nonexistence_trend, pohozaev_coefficient,
                       pohozaev_evaluate)
from .discretization import (Grid, GrushinOperator, assemble_grushin, build_grid,
                             norm_energy, norm_Lpk, norm_S12, read_field, weighted_integral,
                             write_field)
from .domain import Domain, boundary_quadrature, signed_inside, starshape_check
from .estimators import EmbeddingConstantEstimator, MountainPassSolver, NehariSolver
from .functional import (energy_state, far_side_probe, phi, phi_grad, riesz_gradient,
                         small_sphere_probe)
from .linalg import LinearSolverCfg, SolverFailure, cg_solve, smallest_eigenvalue
from .nonlinearity import (Nonlinearity, PurePower, check_A1_A5, check_lemma45_monotone,
                           F_eval, f_eval, preset)
from .solvers import (MpaCfg, SolveReport, mpa_solve, nehari_minimize, nehari_project,
                      newton_refine)

__version__ = "0.1.0"

__all__ = [
    "Domain", "boundary_quadrature", "signed_inside", "starshape_check",
    "Grid", "GrushinOperator", "build_grid", "assemble_grushin", "weighted_integral",
    "norm_Lpk", "norm_energy", "norm_S12", "write_field", "read_field",
    "Nonlinearity", "PurePower", "preset", "f_eval", "F_eval", "check_A1_A5",
    "check_lemma45_monotone",
    "phi", "phi_grad", "riesz_gradient", "energy_state", "small_sphere_probe",
    "far_side_probe",
    "LinearSolverCfg", "SolverFailure", "cg_solve", "smallest_eigenvalue",
    "MpaCfg", "SolveReport", "nehari_project", "nehari_minimize", "mpa_solve",
    "newton_refine",
    "critical_exponents", "pohozaev_coefficient", "pohozaev_evaluate", "nonexistence_trend",
    "embedding_constant", "compactness_probe", "NONEXISTENCE", "INCONCLUSIVE",
    "NehariSolver", "MountainPassSolver", "EmbeddingConstantEstimator",
]
