"""Input checks for lists of per-view arrays."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .exceptions import DimensionError


def check_Xs(Xs, n_views=None, dims=None, min_samples=1):
    """Validate a list of view matrices sharing their rows.

    Each entry goes through :func:`sklearn.utils.check_array` (finite, 2-D,
    float64). ``n_views`` and ``dims`` pin the expected structure, e.g. the one
    seen during ``fit``.
    """
    if isinstance(Xs, np.ndarray) and Xs.ndim == 2:
        Xs = [Xs]
    Xs = [check_array(X, dtype=np.float64, ensure_min_samples=min_samples) for X in Xs]
    if not Xs:
        raise DimensionError("at least one view is required")
    if n_views is not None and len(Xs) != n_views:
        raise DimensionError(f"expected {n_views} views, got {len(Xs)}")
    n = Xs[0].shape[0]
    for i, X in enumerate(Xs):
        if X.shape[0] != n:
            raise DimensionError(f"view {i} has {X.shape[0]} samples, view 0 has {n}")
        if dims is not None and X.shape[1] != dims[i]:
            raise DimensionError(f"view {i} has {X.shape[1]} features, expected {dims[i]}")
    return Xs
