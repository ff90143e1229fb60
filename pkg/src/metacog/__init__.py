"""Revealed-preference detection of budget-constrained optimizing agents and
counter-adversarial response masking, with a tracking-loop abstraction and
reproducible experiment drivers."""

__version__ = "0.1.0"

from .afriat import (
    AfriatCertificate,
    SolverError,
    afriat_feasible,
    afriat_margin,
    check_garp,
    reconstruct_utility,
)
from .dataset import ProbeResponseDataset, load_dataset, save_dataset
from .detector import (
    DetectorConfig,
    EmpiricalCdfL,
    NoiseKind,
    NoiseModel,
    Verdict,
    build_cdf_L,
    conditional_type1_prob,
    detect,
    sample_noisy_dataset,
    statistic_phi,
    statistic_phi_u,
)
from .experiments import (
    ExperimentConfig,
    ResultTable,
    run_example1,
    run_example2,
    write_results,
)
from .masking import (
    DetMaskConfig,
    MaskingResult,
    epsilon_max,
    mask_deterministic,
    pass_margin,
)
from .projection import project_budget, project_budget_all
from .radar import (
    ConvergenceError,
    KalmanState,
    RadarSystem,
    build_system,
    kalman_step,
    naive_response,
    solve_are,
)
from .rng import substream
from .spsa import SpsaConfig, SpsaTrace, estimate_cost, mask_stochastic, spsa_gradient
from .utility import (
    PiecewiseAffineUtility,
    QuadSumUtility,
    SqrtSumUtility,
    utility_by_name,
)

__all__ = [
    "AfriatCertificate",
    "ConvergenceError",
    "DetMaskConfig",
    "DetectorConfig",
    "EmpiricalCdfL",
    "ExperimentConfig",
    "KalmanState",
    "MaskingResult",
    "NoiseKind",
    "NoiseModel",
    "PiecewiseAffineUtility",
    "ProbeResponseDataset",
    "QuadSumUtility",
    "RadarSystem",
    "ResultTable",
    "SolverError",
    "SpsaConfig",
    "SpsaTrace",
    "SqrtSumUtility",
    "Verdict",
    "afriat_feasible",
    "afriat_margin",
    "build_cdf_L",
    "build_system",
    "check_garp",
    "conditional_type1_prob",
    "detect",
    "epsilon_max",
    "estimate_cost",
    "kalman_step",
    "load_dataset",
    "mask_deterministic",
    "mask_stochastic",
    "naive_response",
    "pass_margin",
    "project_budget",
    "project_budget_all",
    "reconstruct_utility",
    "run_example1",
    "run_example2",
    "sample_noisy_dataset",
    "save_dataset",
    "solve_are",
    "spsa_gradient",
    "statistic_phi",
    "statistic_phi_u",
    "substream",
    "utility_by_name",
    "write_results",
]
