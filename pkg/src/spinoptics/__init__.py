"""Spin-photon interface toolkit: forward spectra synthesis and inverse fits.

Simulates the optical and microwave signatures of an effective spin-1/2
molecular emitter with anisotropic g-tensors (PLE, powder and
single-crystal ESR, spectral hole burning, optical pumping dynamics,
pulsed-ESR traces) and recovers the generating parameters by nonlinear
least squares.
"""

__version__ = "0.1.0"

from .constants import CODATA2018, MU_B_OVER_H_GHZ_PER_T, PhysicalConstants
from .core import (
    FieldVector,
    GTensor,
    HyperfineModel,
    OpticalSystem,
    TransitionFrequencies,
    boltzmann_populations,
    effective_g,
    hyperfine_satellite_offsets,
    optical_transition_frequencies,
    rotation_about_axis,
    spin_temperature_from_ratio,
    zeeman_frequency,
)
from .spectra import (
    LineshapeSpec,
    SitePair,
    Spectrum,
    angle_sweep_cd_splitting,
    edfs_spectrum,
    fibonacci_sphere,
    lineshape_profile,
    ple_spectrum,
    powder_esr_spectrum,
    uniform_grid,
)
from .holeburn import (
    ANTIHOLE,
    FAST_SPIN_RELAXATION,
    HOLE,
    OPTICAL_PUMPING,
    HoleFeature,
    HoleFieldMap,
    HolePattern,
    LorentzianBackground,
    TwoSiteDetunings,
    hole_field_map,
    hole_pattern,
    render_hole_spectrum,
    two_site_hole_splitting,
)
from .dynamics import (
    OrbachParams,
    PulsedEsrParams,
    RateModel,
    hahn_echo_trace,
    inversion_recovery_trace,
    orbach_linewidth,
    pl_time_trace,
    rabi_trace,
    rate_evolve,
    rate_matrix,
    steady_state,
)
from .fitting import (
    FitResult,
    PeakModel,
    fit_damped_cosine,
    fit_eseem_frequencies,
    fit_exponential,
    fit_gfactors,
    fit_peaks,
    initial_peak_model,
)
