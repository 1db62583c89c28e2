"""Locate process noise in Wiener-Hammerstein systems from periodic, nonstationary excitation."""

from .errors import WhsidError
from .excitation_design import (
    EnvelopeTarget,
    MultisineSignal,
    default_trapezoid_envelope,
    design_nonstationary_multisine,
    flat_envelope,
    full_grid,
    instantaneous_rms,
    random_phase_multisine,
)
from .kernels import BACKEND
from .lti_filter import FilterState, TransferFunction, filter_apply, make_filter, pole_magnitudes
from .static_nonlinearity import DeadZone, Polynomial, Saturation, eval_nl, polynomial_coefficients
from .structure_detector import (
    DetectionReport,
    Signature,
    Thresholds,
    Verdict,
    bin_profile,
    classify_signature,
    decide_location,
    detect,
    variance_profile,
)
from .wh_simulator import (
    CampaignRecord,
    Location,
    NoiseModel,
    Node,
    WhSystem,
    calibrate_noise_gain,
    calibrate_system,
    ep_oracle_case1,
    example_system,
    run_campaign,
    simulate,
    simulate_case1,
    simulate_case2,
)

__version__ = "0.1.0"
