"""shapeclust: unsupervised shapelet discovery and time series clustering."""

from ._backend import backend_name
from .candidates import Candidate, generate_candidates, resample_to_grid, restore_from_grid
from .clustering import ClusterAssignment, dbi_exact, kmeans, kmeans_best_of, nmi, rand_index
from .data import Dataset, Subsequence, TimeSeriesInstance, load_dataset, save_dataset
from .distance import best_match, dist, transform
from .losses import (
    dbi_loss,
    diversity_loss,
    overall_loss,
    reconstruction_loss,
    smooth_max,
    triplet_loss,
)
from .pipeline import (
    Shapelet,
    TrainConfig,
    TrainingResult,
    cluster_dataset,
    discover_shapelets,
    rank_by_diversity,
)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "Candidate",
    "generate_candidates",
    "resample_to_grid",
    "restore_from_grid",
    "ClusterAssignment",
    "dbi_exact",
    "kmeans",
    "kmeans_best_of",
    "nmi",
    "rand_index",
    "Dataset",
    "Subsequence",
    "TimeSeriesInstance",
    "load_dataset",
    "save_dataset",
    "best_match",
    "dist",
    "transform",
    "dbi_loss",
    "diversity_loss",
    "overall_loss",
    "reconstruction_loss",
    "smooth_max",
    "triplet_loss",
    "Shapelet",
    "TrainConfig",
    "TrainingResult",
    "cluster_dataset",
    "discover_shapelets",
    "rank_by_diversity",
    "__version__",
]
