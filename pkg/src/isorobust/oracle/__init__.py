"""Ground-truth checks on concrete multiversion schedules."""

from .conditions import check_conditions, occurrence_labels
from .schedule import (
    OP0,
    DependencyEdge,
    MVSchedule,
    SOp,
    allowed_under,
    concurrent,
    dangerous_structures,
    dependencies,
    exhibits_concurrent_write,
    exhibits_dirty_write,
    from_json,
    is_conflict_serializable,
    read_last_committed,
    respects_commit_order,
    serialization_graph,
    to_json,
    violations,
)
from .split import (
    BoundTooSmall,
    ConcreteTransaction,
    Counterexample,
    bounded_counterexample_search,
    build_split_schedule,
    canonical_allocation,
    instantiate_canonical,
    is_counterexample,
    iter_counterexamples,
    sequences,
)

__all__ = [
    "OP0", "DependencyEdge", "MVSchedule", "SOp", "allowed_under", "concurrent",
    "dangerous_structures", "dependencies", "exhibits_concurrent_write",
    "exhibits_dirty_write", "from_json", "is_conflict_serializable",
    "read_last_committed", "respects_commit_order", "serialization_graph", "to_json",
    "violations", "check_conditions", "occurrence_labels", "BoundTooSmall",
    "ConcreteTransaction", "Counterexample", "bounded_counterexample_search",
    "build_split_schedule", "canonical_allocation", "instantiate_canonical",
    "is_counterexample", "iter_counterexamples", "sequences",
]
