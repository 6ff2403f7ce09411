"""Weak-label SVM toolkit: semi-supervised, multi-instance and clustering
training via cutting-plane label generation over a convex relaxation."""

from .data import (
    Bag,
    BagDataset,
    Dataset,
    ParseError,
    SparseVector,
    SplitSpec,
    make_two_gaussians,
    minmax_scale,
    parse_bags,
    parse_libsvm,
    serialize_bags,
    serialize_libsvm,
    split_dataset,
)
from .driver import TaskConfig, TraceRecord, WellsvmModel, train
from .kernel import (
    WIDTH_MULTIPLIERS,
    KernelSpec,
    composite_label_gram,
    cross_gram,
    gamma_heuristic,
    gram,
    kernel_alignment,
    kernel_value,
)
from .labelgen import (
    ClusteringBalance,
    SslBalance,
    certify_violation,
    generate_clustering,
    generate_mil,
    generate_ssl,
    pick_incumbent,
    satisfies_balance,
)
from .metrics import EvalReport, accuracy, clustering_accuracy, roi_success_rates
from .mlkl import LabelCandidate, MlklResult, WorkingSet, mlkl_objective, mlkl_solve, mu_update
from .oracle import (
    enumerate_feasible,
    lp_solve_exhaustive,
    mip_solve,
    projected_gradient_solve,
)
from .svm_dual import BoxBounds, DualState, dual_objective, solve_box_qp

__version__ = "0.1.0"

__all__ = [
    "Bag",
    "BagDataset",
    "BoxBounds",
    "ClusteringBalance",
    "Dataset",
    "DualState",
    "EvalReport",
    "KernelSpec",
    "LabelCandidate",
    "MlklResult",
    "ParseError",
    "SparseVector",
    "SplitSpec",
    "SslBalance",
    "TaskConfig",
    "TraceRecord",
    "WIDTH_MULTIPLIERS",
    "WellsvmModel",
    "WorkingSet",
    "accuracy",
    "certify_violation",
    "clustering_accuracy",
    "composite_label_gram",
    "cross_gram",
    "dual_objective",
    "enumerate_feasible",
    "gamma_heuristic",
    "generate_clustering",
    "generate_mil",
    "generate_ssl",
    "gram",
    "kernel_alignment",
    "kernel_value",
    "lp_solve_exhaustive",
    "make_two_gaussians",
    "minmax_scale",
    "mip_solve",
    "mlkl_objective",
    "mlkl_solve",
    "mu_update",
    "parse_bags",
    "parse_libsvm",
    "pick_incumbent",
    "projected_gradient_solve",
    "roi_success_rates",
    "satisfies_balance",
    "serialize_bags",
    "serialize_libsvm",
    "solve_box_qp",
    "split_dataset",
    "train",
]
