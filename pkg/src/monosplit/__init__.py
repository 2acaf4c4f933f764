"""Inertial under-relaxed splitting solvers for monotone inclusions.

Solves ``0 in T(z)`` (and structured ``0 in F(z) + B(z)``) with inexact
proximal iterations certified by a relative-error criterion, and exposes
closed-form complexity bounds that every run is checked against.
"""

from .bounds import (BoundInputs, assert_bounds, ergodic_bounds,
                     iteration_budget, pointwise_bounds)
from .ergodic import ErgodicState, transport
from .errors import (CertificationError, ConfigError, DimensionMismatch,
                     MonosplitError, OracleError, ParameterError,
                     TheoremViolation)
from .hpe_core import (Certificate, IterationTrace, SolverState, StoppingRule,
                       certify, energy_check, extrapolate, fejer_check,
                       relax_update, run, summability_check)
from .instances import (INSTANCE_KINDS, InstanceConfig, fb_step,
                        make_inner_solver, ppm_step, solve, tseng_step)
from .operators import (AffineOperator, AffineResolvent, BoxResolvent,
                        ForwardMap, L1Resolvent, TestProblem, ZeroResolvent,
                        enlargement_infimum, enlargement_member,
                        make_problem, resolve)
from .params import (AlphaSchedule, HpeParams, beta_prime,
                     beta_prime_lower_bound, beta_to_t, eta_of, inverse_map,
                     q_value, tau_of)

__version__ = "0.1.0"

__all__ = [
    "AffineOperator", "AffineResolvent", "AlphaSchedule", "BoundInputs",
    "BoxResolvent", "Certificate", "CertificationError", "ConfigError",
    "DimensionMismatch", "ErgodicState", "ForwardMap", "HpeParams",
    "INSTANCE_KINDS", "InstanceConfig", "IterationTrace", "L1Resolvent",
    "MonosplitError", "OracleError", "ParameterError", "SolverState",
    "StoppingRule", "TestProblem", "TheoremViolation", "ZeroResolvent",
    "assert_bounds", "beta_prime", "beta_prime_lower_bound", "beta_to_t",
    "certify", "energy_check", "enlargement_infimum", "enlargement_member",
    "ergodic_bounds", "eta_of", "extrapolate", "fb_step", "fejer_check",
    "inverse_map", "iteration_budget", "make_inner_solver", "make_problem",
    "pointwise_bounds", "ppm_step", "q_value", "relax_update", "resolve",
    "run", "solve", "summability_check", "tau_of", "transport",
    "tseng_step",
]
