"""Bilinear control of strongly degenerate parabolic equations."""

from ._kernels import BACKEND
from .coefficient import (DegeneracyReport, DiffusionCoefficient, antiderivative,
                          classify_degeneracy, make_coefficient, parse_coefficient)
from .control import (ControlPlan, TargetState, build_plan, choose_beta, choose_horizon,
                      mollify_target, synthesize_alpha_star)
from .discretization import (AssembledOperator, Grid, StateField, assemble, b_norm,
                             build_grid, inner_product, norm, read_field_csv,
                             weighted_seminorm, write_field_csv)
from .errors import DegenControlError, DegenControlWarning
from .evolution import (EvolutionTrace, check_nonnegativity, evolve_implicit,
                        evolve_spectral, gronwall_envelope, remainder_decay,
                        steering_error)
from .pipeline import (RunReport, Scenario, load_scenario, run_budyko_sellers_demo,
                       run_convergence_study, run_pipeline)
from .spectral import SpectralDecomposition, eigendecompose, parseval_defect, project

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AssembledOperator", "ControlPlan", "DegenControlError",
    "DegenControlWarning", "DegeneracyReport", "DiffusionCoefficient", "EvolutionTrace",
    "Grid", "RunReport", "Scenario", "SpectralDecomposition", "StateField", "TargetState",
    "antiderivative", "assemble", "b_norm", "build_grid", "build_plan",
    "check_nonnegativity", "choose_beta", "choose_horizon", "classify_degeneracy",
    "eigendecompose", "evolve_implicit", "evolve_spectral", "gronwall_envelope",
    "inner_product", "load_scenario", "make_coefficient", "mollify_target", "norm",
    "parse_coefficient", "parseval_defect", "project", "read_field_csv",
    "remainder_decay", "run_budyko_sellers_demo", "run_convergence_study",
    "run_pipeline", "steering_error", "synthesize_alpha_star", "weighted_seminorm",
    "write_field_csv",
]
