"""Low-rank semidefinite optimization on quotient manifolds."""

from ._core import (
    SolverError,
    maxcut_bound,
    maxcut_bound_file,
    project_horizontal,
    random_feasible,
    retract,
    rho_bar,
    solve_linear,
    spca_dspca,
    spca_homotopy,
    spca_spectral,
)

__all__ = [
    "SolverError",
    "maxcut_bound",
    "maxcut_bound_file",
    "project_horizontal",
    "random_feasible",
    "retract",
    "rho_bar",
    "solve_linear",
    "spca_dspca",
    "spca_homotopy",
    "spca_spectral",
]
