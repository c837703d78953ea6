"""Recovery of two subspace-constrained signals from phaseless Fourier
magnitudes of their circular convolution.

The measurement magnitudes are lifted to products of two PSD quadratic
forms; trace minimization over the resulting convex hyperbolic feasible
set recovers both rank-1 lifts, and a splitting solver with factored PSD
iterates makes the program practical at desk scale.
"""

from .admm import (AdmmConfig, AdmmState, MetricBundle, Rank1Extraction,
                   SolveReport, error_metrics, extract_rank1, solve)
from .analysis import (SurrogateContext, check_level_set_equivalence,
                       is_feasible, surrogate_f)
from .bench import (CellResult, ConfigError, ExperimentConfig,
                    run_noise_sweep, run_phase, run_single, summarize_report)
from .hyperproj import kkt_residuals, project_batch, project_point, solve_quartic
from .lowrank import (FactoredPsd, XUpdateProblem, XUpdateResult, choose_rank,
                      eval_gradient, eval_objective, x_update)
from .measure import (GENERATOR_ID, FunctionalStack, MeasurementSet,
                      NoiseModelError, ProblemInstance, SensingFunctional,
                      SubspaceMode, add_noise, circular_convolve,
                      forward_measure, forward_measure_via_convolution,
                      gen_instance, lifted_value, load_instance, save_instance,
                      time_domain_bases)

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig", "AdmmState", "CellResult", "ConfigError", "ExperimentConfig",
    "FactoredPsd", "FunctionalStack", "GENERATOR_ID", "MeasurementSet",
    "MetricBundle", "NoiseModelError", "ProblemInstance", "Rank1Extraction",
    "SensingFunctional", "SolveReport", "SubspaceMode", "SurrogateContext",
    "XUpdateProblem", "XUpdateResult", "add_noise",
    "check_level_set_equivalence", "choose_rank", "circular_convolve",
    "error_metrics", "eval_gradient", "eval_objective", "extract_rank1",
    "forward_measure", "forward_measure_via_convolution", "gen_instance",
    "is_feasible", "kkt_residuals", "lifted_value", "load_instance",
    "project_batch", "project_point", "run_noise_sweep", "run_phase",
    "run_single", "save_instance", "solve", "solve_quartic",
    "summarize_report", "surrogate_f", "time_domain_bases", "x_update",
]
