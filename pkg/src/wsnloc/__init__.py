"""Scalable wireless-sensor-network localization with a banded-covariance
extended Kalman filter."""

__version__ = "0.1.0"

from .banded import (
    BandedSymMatrix,
    add,
    add_scaled_identity,
    bandwidth,
    dense_inverse,
    frobenius_error,
    l_banded_inverse,
    principal_submatrix,
)
from .ekf import FilterState, covariance_block, ekf_step, init_filter, lb_ekf_step
from .graph import (
    Permutation,
    Realization,
    RggConfig,
    WsnGraph,
    apply_permutation,
    build_geometric_graph,
    diameter_bound,
    graph_bandwidth,
    laplacian,
    min_bandwidth_bruteforce,
    phi_max,
    phi_of_relabeling,
    sample_rgg,
    strip_count_process,
    vertex_relabel,
)
from .model import (
    MeasurementBatch,
    SparseJacobian,
    WsnModel,
    gain_apply,
    h_eval,
    information_matrix,
    jacobian,
    measure,
    observability_rank_check,
    simulate_step,
)

__all__ = [
    "BandedSymMatrix",
    "FilterState",
    "MeasurementBatch",
    "Permutation",
    "Realization",
    "RggConfig",
    "SparseJacobian",
    "WsnGraph",
    "WsnModel",
    "add",
    "add_scaled_identity",
    "apply_permutation",
    "bandwidth",
    "build_geometric_graph",
    "covariance_block",
    "dense_inverse",
    "diameter_bound",
    "ekf_step",
    "frobenius_error",
    "gain_apply",
    "graph_bandwidth",
    "h_eval",
    "information_matrix",
    "init_filter",
    "jacobian",
    "l_banded_inverse",
    "laplacian",
    "lb_ekf_step",
    "measure",
    "min_bandwidth_bruteforce",
    "observability_rank_check",
    "phi_max",
    "phi_of_relabeling",
    "principal_submatrix",
    "sample_rgg",
    "simulate_step",
    "strip_count_process",
    "vertex_relabel",
]
