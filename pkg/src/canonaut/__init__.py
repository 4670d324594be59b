"""Graph automorphism groups and canonical labelling by individualization-refinement."""

from .graphs import (
    Colouring,
    ColouredGraph,
    DimensionError,
    Graph,
    Permutation,
    apply_perm_colouring,
    apply_perm_graph,
    finer_or_equal,
    perm_compose,
    perm_inverse,
)
from .invariant import (
    LeafCertificate,
    QuotientGraph,
    TraceOrder,
    TraceValue,
    leaf_certificate,
    quotient,
    trace_append,
    trace_compare_incremental,
)
from .permgroup import OrbitPartition, PermGroup
from .refine import (
    InvalidSequenceError,
    RefinementOutcome,
    RefinementQueue,
    individualize,
    refine,
    refine_sequence,
)
from .target_cells import SelectorStrategy, select

__version__ = "0.1.0"

__all__ = [
    "Colouring",
    "ColouredGraph",
    "DimensionError",
    "Graph",
    "Permutation",
    "apply_perm_colouring",
    "apply_perm_graph",
    "finer_or_equal",
    "perm_compose",
    "perm_inverse",
    "LeafCertificate",
    "QuotientGraph",
    "TraceOrder",
    "TraceValue",
    "leaf_certificate",
    "quotient",
    "trace_append",
    "trace_compare_incremental",
    "OrbitPartition",
    "PermGroup",
    "InvalidSequenceError",
    "RefinementOutcome",
    "RefinementQueue",
    "individualize",
    "refine",
    "refine_sequence",
    "SelectorStrategy",
    "select",
]
