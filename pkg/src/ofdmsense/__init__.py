"""OFDM radar sensing beyond the cyclic prefix.

Simulation and algorithm library for OFDM-based sensing when target echoes
exceed the CP: structured ISI/ICI echo synthesis, closed-form SINR/PSLR
analytics with Monte-Carlo counterparts, and two successive-interference-
cancellation estimators (DFT-based and ESPRIT-based), plus a CLI experiment
runner.
"""

from .params import (
    BOLTZMANN,
    SPEED_OF_LIGHT,
    ConfigError,
    RangeLimits,
    ScenarioConfig,
    TargetLink,
    TargetTruth,
    config_from_json,
    config_hash,
    config_to_json,
    derive_link,
    noise_power,
    scenario_links,
    unambiguous_ranges,
    validate_config,
)
from .waveform import Constellation, gen_frame, make_constellation, mu4
from .echo import (
    EchoComponents,
    SteeringVectors,
    add_noise,
    delay_steering,
    doppler_steering,
    phase_coupling_matrix,
    synth_components,
    time_domain_oracle,
)
from .analytics import (
    CovarianceModel,
    SidelobeReport,
    SinrReport,
    covariance_model,
    dirichlet_kernel,
    harmonic_number,
    rdm_second_moment,
    sidelobe_level,
    sinr_closed_form,
    sinr_empirical,
)
from .rdm import (
    CfarParams,
    Detection,
    RangeDopplerMap,
    SicParams,
    SicResult,
    cfar_detect,
    compute_rdm,
    estimate_alpha,
    reconstruct_interference,
    sic_dft,
)
from .esprit import (
    EspritEstimate,
    EspritSicParams,
    SmoothingPlan,
    SubspaceError,
    SubspaceModel,
    esprit_once,
    extract_pairs,
    rotation_operators,
    sic_esprit,
    signal_subspace,
    smooth_snapshots,
    vectorize_channel,
)
from .experiments import (
    Experiment,
    load_experiment,
    rdm_compare,
    rmse,
    sweep_cp_length,
    sweep_iterations,
    sweep_snr_rmse,
)

__all__ = [
    "BOLTZMANN",
    "SPEED_OF_LIGHT",
    "ConfigError",
    "RangeLimits",
    "ScenarioConfig",
    "TargetLink",
    "TargetTruth",
    "config_from_json",
    "config_hash",
    "config_to_json",
    "derive_link",
    "noise_power",
    "scenario_links",
    "unambiguous_ranges",
    "validate_config",
    "Constellation",
    "gen_frame",
    "make_constellation",
    "mu4",
    "EchoComponents",
    "SteeringVectors",
    "add_noise",
    "delay_steering",
    "doppler_steering",
    "phase_coupling_matrix",
    "synth_components",
    "time_domain_oracle",
    "CovarianceModel",
    "SidelobeReport",
    "SinrReport",
    "covariance_model",
    "dirichlet_kernel",
    "harmonic_number",
    "rdm_second_moment",
    "sidelobe_level",
    "sinr_closed_form",
    "sinr_empirical",
    "CfarParams",
    "Detection",
    "RangeDopplerMap",
    "SicParams",
    "SicResult",
    "cfar_detect",
    "compute_rdm",
    "estimate_alpha",
    "reconstruct_interference",
    "sic_dft",
    "EspritEstimate",
    "EspritSicParams",
    "SmoothingPlan",
    "SubspaceError",
    "SubspaceModel",
    "esprit_once",
    "extract_pairs",
    "rotation_operators",
    "sic_esprit",
    "signal_subspace",
    "smooth_snapshots",
    "vectorize_channel",
    "Experiment",
    "load_experiment",
    "rdm_compare",
    "rmse",
    "sweep_cp_length",
    "sweep_iterations",
    "sweep_snr_rmse",
]
