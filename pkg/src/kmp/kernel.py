"""Per-view Gram matrices and their convex fusion.

RBF convention: ``k(x, y) = exp(-||x - y||^2 / (2 sigma^2))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .exceptions import (ArgumentError, DegenerateDataError, DimensionError,
                         UnsupportedError)

SIMPLEX_TOL = 1e-9
KERNEL_KINDS = ("rbf", "linear")


@dataclass(frozen=True)
class KernelSet:
    """Per-view Grams with the hyperparameters that produced them.

    ``sigmas[i]`` is ignored (kept as ``nan``) when ``kinds[i] == "linear"``.
    """

    grams: list
    sigmas: tuple
    kinds: tuple


@dataclass(frozen=True)
class FusionWeights:
    alpha: np.ndarray
    gamma: np.ndarray


def _check_view(view) -> np.ndarray:
    view = np.asarray(view, dtype=np.float64)
    if view.ndim != 2:
        raise DimensionError(f"view must be 2-D, got shape {view.shape}")
    if not np.all(np.isfinite(view)):
        raise ArgumentError("view contains non-finite values")
    return view


def _symmetrize(K: np.ndarray) -> np.ndarray:
    return (K + K.T) / 2.0


def rbf_cross(A, B, sigma: float) -> np.ndarray:
    """RBF kernel between the rows of ``A`` and the rows of ``B``."""
    if not sigma > 0:
        raise ArgumentError(f"sigma must be positive, got {sigma}")
    sq = cdist(np.atleast_2d(A), np.atleast_2d(B), "sqeuclidean")
    return np.exp(-sq / (2.0 * sigma * sigma))


def rbf_gram(view, sigma: float) -> np.ndarray:
    """Symmetric RBF Gram matrix of the rows of ``view``.

    The diagonal is exactly one.
    """
    view = _check_view(view)
    K = _symmetrize(rbf_cross(view, view, sigma))
    np.fill_diagonal(K, 1.0)
    return K


def linear_gram(view) -> np.ndarray:
    view = _check_view(view)
    return _symmetrize(view @ view.T)


def cross_kernel(kind: str, A, B, sigma: float = float("nan")) -> np.ndarray:
    if kind == "rbf":
        return rbf_cross(A, B, sigma)
    if kind == "linear":
        return np.atleast_2d(A) @ np.atleast_2d(B).T
    raise UnsupportedError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")


def gram(kind: str, view, sigma: float = float("nan")) -> np.ndarray:
    if kind == "rbf":
        return rbf_gram(view, sigma)
    if kind == "linear":
        return linear_gram(view)
    raise UnsupportedError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")


def median_sigma(view) -> float:
    """Median of all pairwise Euclidean distances between rows.

    Raises
    ------
    DegenerateDataError
        If every row is identical (the median would be zero).
    """
    view = _check_view(view)
    if view.shape[0] < 2:
        raise DegenerateDataError("median heuristic needs at least 2 samples")
    dists = pdist(view)
    if not np.any(dists > 0):
        raise DegenerateDataError("all rows are identical; no bandwidth can be inferred")
    med = float(np.median(dists))
    if med <= 0:
        # more than half the pairs are duplicates; fall back to the positive ones
        med = float(np.median(dists[dists > 0]))
    return med


def build_kernels(views: Sequence, sigmas=None, kinds=None) -> KernelSet:
    """Gram matrix per view; ``None`` sigma entries get the median heuristic."""
    m = len(views)
    kinds = tuple(kinds) if kinds is not None else ("rbf",) * m
    if len(kinds) != m:
        raise ArgumentError(f"{len(kinds)} kernel kinds for {m} views")
    if sigmas is None:
        sigmas = [None] * m
    if len(sigmas) != m:
        raise ArgumentError(f"{len(sigmas)} sigmas for {m} views")
    resolved, grams = [], []
    for view, s, kind in zip(views, sigmas, kinds):
        if kind == "rbf":
            s = median_sigma(view) if s is None else float(s)
        else:
            s = float("nan")
        resolved.append(s)
        grams.append(gram(kind, view, s))
    return KernelSet(grams=grams, sigmas=tuple(resolved), kinds=kinds)


def check_simplex(weights, m: int = None, tol: float = SIMPLEX_TOL) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64).ravel()
    if m is not None and w.size != m:
        raise DimensionError(f"expected {m} weights, got {w.size}")
    if not np.all(np.isfinite(w)) or np.any(w < -tol) or abs(w.sum() - 1.0) > tol:
        raise ArgumentError(f"weights {w.tolist()} are not on the probability simplex")
    return w


def _weighted_sum(matrices: Sequence, weights) -> np.ndarray:
    """``sum_i weights[i] * matrices[i]`` without any check on the weights."""
    out = np.zeros_like(np.asarray(matrices[0], dtype=np.float64))
    for w, A in zip(weights, matrices):
        out += w * np.asarray(A, dtype=np.float64)
    return out


def fuse(matrices: Sequence, weights) -> np.ndarray:
    """Convex combination of equally-shaped matrices.

    Used for kernels as well as for similarity, degree and Laplacian matrices.
    """
    if len(matrices) == 0:
        raise DimensionError("nothing to fuse")
    shape = np.shape(matrices[0])
    for i, A in enumerate(matrices):
        if np.shape(A) != shape:
            raise DimensionError(f"matrix {i} has shape {np.shape(A)}, expected {shape}")
    w = check_simplex(weights, len(matrices))
    return _weighted_sum(matrices, w)


def fused_feature_map(views: Sequence, alpha) -> np.ndarray:
    """Concatenate ``sqrt(alpha_i)``-scaled raw features (linear-kernel feature maps)."""
    alpha = check_simplex(alpha, len(views))
    return np.hstack([np.sqrt(a) * np.asarray(v, dtype=np.float64)
                      for a, v in zip(alpha, views)])


def feature_map_identity_check(views: Sequence, alpha, kinds=None) -> float:
    """Max deviation between the fused linear Gram and the concatenated-map Gram.

    Only linear kernels have an explicit finite feature map, so any other kind
    is rejected.
    """
    kinds = ("linear",) * len(views) if kinds is None else tuple(kinds)
    if any(k != "linear" for k in kinds):
        raise UnsupportedError("feature-map identity check needs linear kernels")
    fused = fuse([linear_gram(v) for v in views], alpha)
    phi = fused_feature_map(views, alpha)
    return float(np.max(np.abs(fused - phi @ phi.T)))
