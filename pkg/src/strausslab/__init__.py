"""Numerical laboratory for the radial Strauss-critical wave equation with a modulus nonlinearity."""

from .constants import P_S, P_S_CONJ, Q, STRAUSS, StraussConstants
from .modulus import (
    CriticalIntegralReport,
    DomainError,
    ModulusSpec,
    c_str_index,
    critical_integral,
    custom,
    decay_predicates,
    iterated_log,
    iterated_log_modulus,
    log_product,
    mu_eval,
    power_log,
    zero_modulus,
)
from .radial_wave import (
    CharacteristicGrid,
    InitialData,
    Profile,
    SolutionField,
    homogeneous_solution,
    picard_iterate,
    pointwise_lowerbound_check,
    solve_leapfrog,
)
from .testfunc import TestFunctionParams, eta, eta_bounds_check, phi
from .functional import fit_frame_constants, functional_sample, identity_residual, jensen_check
from .iteration import BlowupEstimate, FrameConstants, blowup_onset

__version__ = "0.1.0"
