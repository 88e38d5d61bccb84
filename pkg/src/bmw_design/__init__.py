"""Workbench for group-sequential win-ratio trial designs: numerical
kernels, pairwise comparison statistics, posterior inference, boundary
calibration, trial simulation, and CLI/HTTP surfaces."""

from .calibration import (
    CalibrationError,
    CalibrationResult,
    DesignSpec,
    GridSpec,
    PathMatrix,
    ToxSpec,
    calibrate_efficacy,
    calibrate_toxicity,
    poe,
    sample_z_paths,
)
from .decide import DesignRef, InterimRequest, evaluate_request
from .inference import (
    AnalysisSchedule,
    BoundarySet,
    FinalDecision,
    InterimDecision,
    NormalPrior,
    PosteriorTheta,
    ToxCounts,
    ZPath,
    boundary_set,
    evaluate_interim,
    information_vector,
    mvn_model,
    posterior_theta,
    pp_toxicity,
)
from .statkernel import (
    Rng,
    beta_cdf,
    bvn_upper_orthant,
    normal_cdf,
    normal_quantile,
    spd_factor_and_logdet,
    spd_solve,
)
from .trialsim import (
    Decision,
    OcSummary,
    TrialResult,
    TruthLabels,
    calibrate_from_raw_data,
    estimate_null_tie_probability,
    estimate_ocs,
    raw_z_paths,
    run_conventional,
    run_trial_bmw,
    run_trial_graphical,
    sample_patient,
)
from .winratio import (
    EndpointHierarchy,
    PairResult,
    PatientOutcome,
    ScenarioTruth,
    WltCounts,
    WrEstimate,
    compare_pair,
    count_wlt,
    theoretical_wlt,
    wr_estimate,
)

__version__ = "0.1.0"
