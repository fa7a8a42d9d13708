"""Kernelized multiview projection: fuse several feature views into one
low-dimensional embedding that extends linearly to unseen samples."""

from .data import MultiviewDataset, load_views, save_views, split
from .eig import EigenSolution, solve_gep, solve_kernel_gep
from .estimator import KernelizedMultiviewProjection
from .model import ProjectionModel, embed_oos, embed_train, load, save
from .optimizer import FitReport, KMPConfig, fit

__version__ = "0.1.0"

__all__ = [
    "EigenSolution",
    "FitReport",
    "KMPConfig",
    "KernelizedMultiviewProjection",
    "MultiviewDataset",
    "ProjectionModel",
    "embed_oos",
    "embed_train",
    "fit",
    "load",
    "load_views",
    "save",
    "save_views",
    "solve_gep",
    "solve_kernel_gep",
    "split",
]
