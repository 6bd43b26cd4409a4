"""Simulator and analytic calculator for temporally multiplexed DLCZ repeater links.

Subpackages map onto the problem's layers:

    link_physics   photon statistics of one elementary link (write, herald, read)
    metrics        concurrence / visibility / retrieval-efficiency estimators
    rate           closed-form nested-chain rate recursion
    chain_sim      discrete-event Monte Carlo of the full chain
    fitters        weighted least-squares fits (exponential, linear, fringe)
    experiments    storage-time and mode-count scan pipelines
    calibration    frozen benchmark-link calibration and its solver
    config_io      INI configs, manifests, deterministic result files
    cli            the `dlczsim` command
"""

from .calibration import calibrated_link_params
from .chain_sim import ChainTrace, SimConfig, simulate_chain, simulate_elementary_link
from .errors import (
    ConfigError,
    ContractError,
    DlczSimError,
    EstimatorError,
    IllConditionedError,
    NoHeraldsError,
    ParameterError,
    RankDeficiencyError,
    StalledChainError,
)
from .fitters import FitResult, Samples, fit_exponential, fit_linear_origin, fit_sinusoid
from .link_physics import (
    HeraldEvent,
    HeraldSign,
    LinkParams,
    ModeExcitation,
    Node,
    PmnTable,
    StokesDetector,
    expected_herald_probability,
    expected_pmn,
    expected_window_detection,
    fringe_expectation,
    fringe_visibility,
    herald_bsm,
    readout_pmn,
    run_link_trials,
    sample_write_train,
)
from .metrics import (
    ConcurrenceResult,
    CountsRecord,
    concurrence,
    intrinsic_efficiency,
    visibility,
)
from .rate import ChainParams, ChainReport, elementary_p0, multiplexed_success, swap_chain

__version__ = "1.0.0"

__all__ = [
    "__version__",
    "calibrated_link_params",
    "ChainParams",
    "ChainReport",
    "ChainTrace",
    "ConcurrenceResult",
    "ConfigError",
    "ContractError",
    "CountsRecord",
    "DlczSimError",
    "EstimatorError",
    "FitResult",
    "HeraldEvent",
    "HeraldSign",
    "IllConditionedError",
    "LinkParams",
    "ModeExcitation",
    "NoHeraldsError",
    "Node",
    "ParameterError",
    "PmnTable",
    "RankDeficiencyError",
    "Samples",
    "SimConfig",
    "StalledChainError",
    "StokesDetector",
    "concurrence",
    "elementary_p0",
    "expected_herald_probability",
    "expected_pmn",
    "expected_window_detection",
    "fit_exponential",
    "fit_linear_origin",
    "fit_sinusoid",
    "fringe_expectation",
    "fringe_visibility",
    "herald_bsm",
    "intrinsic_efficiency",
    "multiplexed_success",
    "readout_pmn",
    "run_link_trials",
    "sample_write_train",
    "simulate_chain",
    "simulate_elementary_link",
    "swap_chain",
    "visibility",
]
