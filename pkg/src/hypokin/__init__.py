"""Numerical laboratory for quantitative hypocoercivity of collisional
kinetic models on the one-dimensional torus.

Layers, bottom up: ``grid`` (discrete phase space), ``models`` (collision
operators), ``constants`` (measured coercivity data and certified
functional weights), ``hypo`` (twisted functionals and decay fits),
``solver`` (time integration), ``config``/``cli`` (reproducible runs and
artifacts).
"""

from .grid import (
    DistributionField,
    PhaseGrid,
    build_grid,
    grad_v,
    grad_x,
    inner_l2,
    norm_h1,
    norm_l2,
)
from .models import (
    EquilibriumState,
    FokkerPlanckModel,
    Model,
    RelaxationModel,
    SemiClassicalModel,
    apply_collision,
    build_fokker_planck,
    build_relaxation,
    build_semiclassical,
    collision_bilinear,
    nonlinear_collision,
    solve_equilibrium,
)
from .constants import (
    CoercivityConstants,
    certify_twisted_dissipation,
    gap_bound_fermion,
    gap_relaxation,
    measure_constants,
    numeric_abscissa,
    numeric_gap,
    select_weights,
)
from .hypo import (
    DecayReport,
    LyapunovWeights,
    dissipation_check,
    fit_rate,
    lambda_norm,
    lyapunov,
    lyapunov_k,
)
from .solver import (
    GridSpec,
    InitialSpec,
    ModelSpec,
    PotentialSpec,
    RunConfig,
    SolverAbort,
    build_model,
    collision_step,
    run_linear,
    run_nonlinear_sc,
    run_poisson,
    run_with_potential,
    transport_step,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "PhaseGrid",
    "DistributionField",
    "build_grid",
    "grad_x",
    "grad_v",
    "inner_l2",
    "norm_l2",
    "norm_h1",
    "Model",
    "RelaxationModel",
    "SemiClassicalModel",
    "FokkerPlanckModel",
    "EquilibriumState",
    "build_relaxation",
    "build_semiclassical",
    "build_fokker_planck",
    "solve_equilibrium",
    "apply_collision",
    "collision_bilinear",
    "nonlinear_collision",
    "CoercivityConstants",
    "measure_constants",
    "select_weights",
    "certify_twisted_dissipation",
    "numeric_gap",
    "numeric_abscissa",
    "gap_relaxation",
    "gap_bound_fermion",
    "LyapunovWeights",
    "DecayReport",
    "lambda_norm",
    "lyapunov",
    "lyapunov_k",
    "dissipation_check",
    "fit_rate",
    "ModelSpec",
    "GridSpec",
    "InitialSpec",
    "PotentialSpec",
    "RunConfig",
    "SolverAbort",
    "build_model",
    "transport_step",
    "collision_step",
    "run_linear",
    "run_nonlinear_sc",
    "run_with_potential",
    "run_poisson",
]
