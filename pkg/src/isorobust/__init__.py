"""Robustness analysis of transaction templates against mixed isolation levels."""

from .allocation import NotRobustInput, is_lowest, lowest_allocation
from .checker import (
    Checker,
    InternalInconsistency,
    PtConflictGraph,
    Verdict,
    WitnessSequence,
    build_pt_conflict_graph,
    extract_witness,
    is_robust,
    reachable,
    valid_schedule,
)
from .conflicts import ConflictKind, Quadruple, all_quadruples, potential_conflict, variables_connected_in_sequence
from .dsl import load, parse, smallbank
from .model import (
    RC,
    SI,
    SSI,
    Allocation,
    IsolationLevel,
    Model,
    allocation_leq,
    allocation_lt,
    parse_allocation,
    validate,
)
from .promotion import apply_promotion, explore, promotable_reads

__version__ = "0.1.0"
