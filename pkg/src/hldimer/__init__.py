"""Interacting monomer-dimer model on the square lattice: exact enumeration,
transfer-matrix analysis, Monte Carlo sampling, and the combinatorial
machinery (configuration graphs, stick percolation, disagreement paths,
reflection positivity) used to study its nematic ordered phase."""

__version__ = "0.1.0"

from .lattice import Isometry, Rect
from .model import (
    DimerConfig,
    ModelParams,
    Periodic,
    Prescribed,
    PeriodicPattern,
    Vacant,
    broken_links,
    energy,
    energy_delta,
    load_config,
    log_weight,
    save_config,
    vacancies,
    validate,
    weight,
)
from .enumerate import (
    chessboard_check,
    chessboard_seminorm,
    count_histogram,
    enumerate_configs,
    expectation,
    log_partition_function,
    partition_function,
    rp_check,
)
from .transfer1d import (
    char_poly,
    correlation_length,
    ell0,
    leading_eigenvalue,
    spectrum,
    transfer_matrix,
    z_fullpacked,
    z_periodic_1d,
    z_vacant,
)
from .sampler import (
    ChainSpec,
    RunRecord,
    detailed_balance_audit,
    iter_occupancies,
    run,
    run_many,
    sample_pair,
)
from .order import (
    PsiGrid,
    Stick,
    percolation_report,
    psi_grid,
    stick_edges,
    sticks,
    unit_order_scan,
)
from .confgraph import (
    ConfigGraph,
    build,
    component_bound_holds,
    compress,
    in_EM,
    in_EMA,
    sub_components,
    weight_identity_gap,
)
from .disagree import (
    PairSample,
    SealScales,
    alpha1_fit,
    component_report,
    confinement_check,
    connection_stats,
    ddag_components,
    delta,
    sealed,
    sealing_events,
)

__all__ = [
    "Isometry", "Rect", "DimerConfig", "ModelParams",
    "Periodic", "Prescribed", "PeriodicPattern", "Vacant",
    "broken_links", "energy", "energy_delta", "load_config", "log_weight",
    "save_config", "vacancies", "validate", "weight",
    "chessboard_check", "chessboard_seminorm", "count_histogram",
    "enumerate_configs", "expectation", "log_partition_function",
    "partition_function", "rp_check",
    "char_poly", "correlation_length", "ell0", "leading_eigenvalue",
    "spectrum", "transfer_matrix", "z_fullpacked", "z_periodic_1d",
    "z_vacant",
    "ChainSpec", "RunRecord", "detailed_balance_audit", "iter_occupancies",
    "run", "run_many", "sample_pair",
    "PsiGrid", "Stick", "percolation_report", "psi_grid", "stick_edges",
    "sticks", "unit_order_scan",
    "ConfigGraph", "build", "component_bound_holds", "compress", "in_EM",
    "in_EMA", "sub_components", "weight_identity_gap",
    "PairSample", "SealScales", "alpha1_fit", "component_report",
    "confinement_check", "connection_stats", "ddag_components", "delta",
    "sealed", "sealing_events",
]
