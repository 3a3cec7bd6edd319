"""Bagged regularized k-distances for anomaly detection and density estimation."""

__version__ = "0.1.0"

from .data import (
    BagPartition,
    DataError,
    Dataset,
    LabeledDataset,
    ScaleTransform,
    apply_scale,
    auto_bag_count,
    fit_scale,
    load_csv,
    make_partition,
)
from .estimator import (
    AnomalyScores,
    BagModel,
    bagged_distance,
    bagged_distances,
    brdad,
    brdde_density,
    bwdde_density,
    detect,
    fit,
    regularized_k_distance,
    regularized_k_distances,
    score,
    score_with_prior,
)
from .evaluation import MetricReport, auc, mae, rank_table
from .neighbors import (
    NeighborIndex,
    available_backends,
    average_i_distances,
    brute_force_knn,
    build_index,
    default_backend,
    knn_distances,
)
from .srm import GammaTable, WeightVector, gamma_table, solve_srm, srm_core, surrogate_risk, unit_ball_volume
