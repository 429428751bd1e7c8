"""Transfinite fixed-point computation over lattices, metric spaces and games."""

from .engine import (FixpointCertificate, IterationTrace, StageRecord, Uniqueness, detect_stable,
                     iterate_to_fixpoint, state_at, verify_uniqueness)
from .errors import (InnerDivergence, LimitDivergence, NonConvergence, OperatorCheckFailed,
                     TransfixError)
from .games import (NestedGame, SemanticGame, SignalSchedule, equilibrium_check, play, play_round,
                    solve_inner, solve_nested)
from .ordinal import OMEGA, ONE, ZERO, Ordinal, parse_ordinal
from .space import (DiscrepancyMeasure, FiniteLattice, MetricSpace, Operator, OrdinalChain,
                    PowersetLattice, check_contraction, check_monotone)

__version__ = "0.1.0"

__all__ = [
    "FixpointCertificate", "IterationTrace", "StageRecord", "Uniqueness", "detect_stable",
    "iterate_to_fixpoint", "state_at", "verify_uniqueness", "InnerDivergence", "LimitDivergence",
    "NonConvergence", "OperatorCheckFailed", "TransfixError", "NestedGame", "SemanticGame",
    "SignalSchedule", "equilibrium_check", "play", "play_round", "solve_inner", "solve_nested",
    "OMEGA", "ONE", "ZERO", "Ordinal", "parse_ordinal", "DiscrepancyMeasure", "FiniteLattice",
    "MetricSpace", "Operator", "OrdinalChain", "PowersetLattice", "check_contraction", "check_monotone",
]
