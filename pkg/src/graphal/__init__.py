"""Graph-based active learning with risk-minimizing query selection."""

from .config import DEFAULT_BETA, DEFAULT_ENUM_CAP, DEFAULT_TOLERANCES, Tolerances
from .errors import (
    CapacityError,
    DegeneracyError,
    GraphalError,
    InputError,
    ParseError,
    UnanchoredComponentError,
    UsageError,
)
from .graph_core import (
    Graph,
    LabelState,
    Laplacian,
    build_laplacian,
    downdate_inverse,
    graph_from_edges,
    init_label_state,
    read_edge_list,
)
from .inference import (
    MarginalKind,
    Marginals,
    exact_bmrf_marginals,
    lp_harmonic,
    sigmoid,
    tsa_imputation_decision,
    tsa_marginals,
    zlg_marginals,
)
from .eem import (
    lookahead_risk,
    select_query_eem,
    tsa_lookahead_decisions,
    tsa_risk_table,
    zero_one_risk,
    zlg_lookahead_harmonic,
    zlg_risk_table,
)
from .strategies import (
    BinarySession,
    MulticlassSession,
    MulticlassState,
    QueryStrategy,
    StrategyKind,
    init_multiclass,
    multiclass_marginals,
    multiclass_update,
    multiclass_zero_one_risk,
    next_query,
    next_query_multiclass,
    predict_binary,
    predict_multiclass,
    start_binary,
    start_multiclass,
    update,
    update_multiclass,
)
from .harness import (
    Dataset,
    ExperimentResult,
    TrialRecord,
    gen_chain,
    gen_jittered_grid,
    load_dataset,
    run_experiment,
    run_trial,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BinarySession",
    "CapacityError",
    "Dataset",
    "DegeneracyError",
    "DEFAULT_BETA",
    "DEFAULT_ENUM_CAP",
    "DEFAULT_TOLERANCES",
    "ExperimentResult",
    "Graph",
    "GraphalError",
    "InputError",
    "LabelState",
    "Laplacian",
    "MarginalKind",
    "Marginals",
    "MulticlassSession",
    "MulticlassState",
    "ParseError",
    "QueryStrategy",
    "StrategyKind",
    "Tolerances",
    "TrialRecord",
    "UnanchoredComponentError",
    "UsageError",
    "build_laplacian",
    "downdate_inverse",
    "exact_bmrf_marginals",
    "gen_chain",
    "gen_jittered_grid",
    "graph_from_edges",
    "init_label_state",
    "init_multiclass",
    "load_dataset",
    "lookahead_risk",
    "lp_harmonic",
    "multiclass_marginals",
    "multiclass_update",
    "multiclass_zero_one_risk",
    "next_query",
    "next_query_multiclass",
    "predict_binary",
    "predict_multiclass",
    "read_edge_list",
    "run_experiment",
    "run_trial",
    "select_query_eem",
    "sigmoid",
    "start_binary",
    "start_multiclass",
    "tsa_imputation_decision",
    "tsa_lookahead_decisions",
    "tsa_marginals",
    "tsa_risk_table",
    "update",
    "update_multiclass",
    "write_csv",
    "zero_one_risk",
    "zlg_lookahead_harmonic",
    "zlg_marginals",
    "zlg_risk_table",
]
