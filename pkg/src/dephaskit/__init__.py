"""Dephasing dynamics of polarized photons in birefringent media.

Reconstructs the polarization qubit's dephasing channel from optical line
shapes, quantifies how much of the process is genuinely quantum (composition
and robustness over a classical-process set), and classifies the dynamics
under five non-Markovianity criteria, including the composite-process test
that detects memory where the state-based criteria see none.
"""

__version__ = "0.1.0"

from .criteria import (
    BlpSearchConfig,
    CriteriaReport,
    DynamicsFamily,
    blp,
    criteria_report,
    divisibility_gap,
    hcl_n,
    hcl_w,
    lfs,
    positive_variation,
    rhp,
    write_criteria_csv,
)
from .dynamics import (
    ChoiMatrix,
    EvolutionParams,
    KappaTrajectory,
    ProcessMatrix,
    apply_process,
    apply_process_to_half,
    chi_to_choi,
    choi_to_chi,
    compose,
    kappa,
    kappa_quadrature,
    kappa_trajectory,
    process_from_kappa,
    simulate_environment,
    simulate_tomography,
    write_kappa_csv,
)
from .qcore import (
    DensityMatrix,
    HermitianEigen,
    concurrence,
    hermitian_eig,
    partial_trace,
    partial_transpose,
    trace_distance,
    von_neumann_entropy,
)
from .quantumness import (
    MEASURE_PREPARE_PPT,
    ClassicalSetFormulation,
    QuantumnessReport,
    alpha,
    alpha_reconstruction_error,
    beta,
    beta_mixture,
    is_classical,
    pluggable_formulation,
)
from .spectra import (
    FitReport,
    PRESET_THETAS,
    Spectrum,
    SpectrumSample,
    fit_mixture,
    fwhm_of_sigma,
    load_spectrum,
    sigma_of_fwhm,
    tilt_preset,
)

__all__ = [
    "__version__",
    "BlpSearchConfig",
    "ChoiMatrix",
    "ClassicalSetFormulation",
    "CriteriaReport",
    "DensityMatrix",
    "DynamicsFamily",
    "EvolutionParams",
    "FitReport",
    "HermitianEigen",
    "KappaTrajectory",
    "MEASURE_PREPARE_PPT",
    "PRESET_THETAS",
    "ProcessMatrix",
    "QuantumnessReport",
    "Spectrum",
    "SpectrumSample",
    "alpha",
    "alpha_reconstruction_error",
    "apply_process",
    "apply_process_to_half",
    "beta",
    "beta_mixture",
    "blp",
    "chi_to_choi",
    "choi_to_chi",
    "compose",
    "concurrence",
    "criteria_report",
    "divisibility_gap",
    "fit_mixture",
    "fwhm_of_sigma",
    "hcl_n",
    "hcl_w",
    "hermitian_eig",
    "is_classical",
    "kappa",
    "kappa_quadrature",
    "kappa_trajectory",
    "lfs",
    "load_spectrum",
    "partial_trace",
    "partial_transpose",
    "pluggable_formulation",
    "positive_variation",
    "process_from_kappa",
    "rhp",
    "sigma_of_fwhm",
    "simulate_environment",
    "simulate_tomography",
    "tilt_preset",
    "trace_distance",
    "von_neumann_entropy",
    "write_criteria_csv",
    "write_kappa_csv",
]
