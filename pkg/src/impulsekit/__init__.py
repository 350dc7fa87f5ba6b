"""impulsekit: impulsive dynamical systems with per-sequence jump maps.

Simulation of flows with scheduled state resets, grid-based verification of
exponential ISS-Lyapunov certificates, exact dwell-time condition evaluation,
and small-gain composition of two certified subsystems.
"""

from ._kernels import backend_name
from .errors import (
    CompositionError,
    ConfigError,
    DisjointnessError,
    DomainError,
    ImpulsekitError,
    ParseError,
    SamplingError,
    SimulationError,
)
from .exprlang import Expr, VectorExpr, parse, parse_scalar, parse_vector
from .timegrid import ImpulseSequence, SequenceFamily
from .model import ImpulsiveSystem, InputSignal, JumpRule, Subsystem, interconnect, validate
from .sim import Trajectory, check_iss_envelope, simulate
from .certify import (
    CheckReport,
    LyapunovCandidate,
    SamplingRegion,
    SubsystemCertificate,
    check_flow_condition,
    check_jump_condition,
    check_subsystem_conditions,
    validate_candidate,
    validate_certificate,
)
from .dwell import (
    DwellEvent,
    DwellTimeProblem,
    DwellTimeVerdict,
    Witness,
    check,
    feasible_lambda,
    minimal_mu,
    sample_in_class,
)
from .smallgain import (
    CompositionResult,
    PipelineReport,
    candidate_for,
    check_small_gain,
    compose,
    iss_pipeline,
    perturbed,
    verify_composition,
)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "ImpulsekitError", "ParseError", "DomainError", "ConfigError",
    "DisjointnessError", "SimulationError", "CompositionError", "SamplingError",
    "Expr", "VectorExpr", "parse", "parse_scalar", "parse_vector",
    "ImpulseSequence", "SequenceFamily",
    "ImpulsiveSystem", "InputSignal", "JumpRule", "Subsystem",
    "interconnect", "validate",
    "Trajectory", "simulate", "check_iss_envelope",
    "CheckReport", "LyapunovCandidate", "SamplingRegion",
    "SubsystemCertificate", "check_flow_condition", "check_jump_condition",
    "check_subsystem_conditions", "validate_candidate", "validate_certificate",
    "DwellEvent", "DwellTimeProblem", "DwellTimeVerdict", "Witness",
    "check", "feasible_lambda", "minimal_mu", "sample_in_class",
    "CompositionResult", "PipelineReport", "candidate_for",
    "check_small_gain", "compose", "iss_pipeline", "perturbed",
    "verify_composition",
    "__version__",
]
