"""Uniform multicommodity flows, expansion bounds and exact oracles on Hanoi graphs."""

from .builder import (
    Audit,
    LevelTerms,
    RecurrenceLedger,
    UniformMcf,
    audit_uniform_mcf,
    build_uniform_mcf,
    recurrence_ledger,
    solve_concentration,
    solve_distribution,
    solve_routing,
    solve_shuffle,
    solve_transmission,
    stage_problems,
)
from .hanoi import (
    BudgetExceededError,
    Facet,
    HanoiGraph,
    InvalidConfigurationError,
    InvalidFacetError,
    PartitionError,
    StructuralError,
    SubgraphHandle,
    boundary,
    config_to_index,
    edge_count,
    facet,
    index_to_config,
    partition_by_largest,
)
from .msf import (
    ArcFlow,
    CompositionError,
    CongestionReport,
    MsfProblem,
    UnbalancedProblemError,
    compose,
    congestion,
    dump_flow,
    expansion_lower_bound,
    load_flow,
    msf_sum,
    validate_msf,
)
from .oracles import (
    CutWitness,
    TreewidthCertificate,
    brute_force_expansion,
    check_relations,
    elimination_width,
    exact_edge_expansion,
    exact_treewidth,
    exact_vertex_expansion,
    witness_cut,
    witness_cut_bound,
)

__version__ = "0.1.0"
