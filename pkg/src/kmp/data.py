"""Multiview dataset container and delimited-text I/O.

Samples are stored as rows: view ``i`` is an ``(N, D_i)`` array. Column-sample
notation used in much of the multiview literature is the transpose of this.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import ArgumentError, DimensionError, ParseError, ValidationError


@dataclass(frozen=True)
class MultiviewDataset:
    """M aligned feature matrices over a shared sample index.

    Parameters
    ----------
    views : list of ndarray
        ``views[i]`` has shape ``(N, D_i)``.
    labels : list of str, optional
        One class identifier per sample. Only evaluation code reads them.
    sample_ids : list of str, optional
        Opaque sample identifiers; defaults to ``"0", "1", ...``.
    """

    views: list
    labels: Optional[list] = None
    sample_ids: list = field(default=None)

    def __post_init__(self):
        views = [np.array(v, dtype=np.float64, copy=True) for v in self.views]
        if len(views) < 1:
            raise DimensionError("a dataset needs at least one view")
        for i, v in enumerate(views):
            if v.ndim != 2:
                raise DimensionError(f"view {i} must be 2-D, got shape {v.shape}")
            if v.shape[1] < 1:
                raise DimensionError(f"view {i} has no feature columns")
        n = views[0].shape[0]
        for i, v in enumerate(views):
            if v.shape[0] != n:
                raise DimensionError(
                    f"view {i} has {v.shape[0]} rows but view 0 has {n}")
        if n < 2:
            raise DimensionError(f"need at least 2 samples, got {n}")
        for i, v in enumerate(views):
            bad = np.argwhere(~np.isfinite(v))
            if bad.size:
                r, c = bad[0]
                raise ValidationError(
                    f"view {i} has non-finite value at row {r}, column {c}")
            v.setflags(write=False)
        labels = self.labels
        if labels is not None:
            labels = [str(x) for x in labels]
            if len(labels) != n:
                raise DimensionError(f"{len(labels)} labels for {n} samples")
        ids = self.sample_ids
        ids = [str(i) for i in range(n)] if ids is None else [str(x) for x in ids]
        if len(ids) != n:
            raise DimensionError(f"{len(ids)} sample ids for {n} samples")
        object.__setattr__(self, "views", views)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sample_ids", ids)

    @property
    def n_samples(self) -> int:
        return self.views[0].shape[0]

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def dims(self) -> tuple:
        return tuple(v.shape[1] for v in self.views)

    def subset(self, index) -> "MultiviewDataset":
        """Return the dataset restricted to the given row indices (in order)."""
        index = np.asarray(index, dtype=int)
        labels = None if self.labels is None else [self.labels[i] for i in index]
        return MultiviewDataset(
            views=[v[index] for v in self.views],
            labels=labels,
            sample_ids=[self.sample_ids[i] for i in index],
        )


def read_matrix(path) -> np.ndarray:
    """Parse a comma-separated numeric matrix.

    Lines starting with ``#`` (typically a single header line) and blank lines
    are skipped. Every numeric line must have the same number of cells.
    """
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            cells = stripped.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ParseError(
                    f"{path}: line {lineno} has {len(cells)} cells, expected {width}")
            row = []
            for col, cell in enumerate(cells):
                try:
                    row.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: cannot parse {cell.strip()!r} at row {len(rows)}, "
                        f"column {col} (line {lineno})") from None
            rows.append(row)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    arr = np.array(rows, dtype=np.float64)
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        r, c = bad[0]
        raise ValidationError(f"{path}: non-finite value at row {r}, column {c}")
    return arr


def write_matrix(path, matrix, header: Optional[str] = None) -> None:
    """Write a matrix in the format :func:`read_matrix` accepts.

    Values use ``repr`` so that a read-back is bit-exact.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header is not None:
            fh.write("# " + header + "\n")
        for row in matrix:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def read_labels(path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.rstrip("\r\n") for line in fh if line.strip()]


def write_labels(path, labels) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for label in labels:
            fh.write(f"{label}\n")


def load_views(paths: Sequence, label_path=None) -> MultiviewDataset:
    """Load one matrix file per view, plus an optional label file.

    Raises
    ------
    DimensionError
        If two files disagree on the number of rows.
    ParseError
        If a cell is not a number.
    ValidationError
        If a cell is NaN or infinite.
    """
    if not paths:
        raise ArgumentError("at least one view file is required")
    views = [read_matrix(p) for p in paths]
    for p, v in zip(paths[1:], views[1:]):
        if v.shape[0] != views[0].shape[0]:
            raise DimensionError(
                f"row-count mismatch: {os.fspath(paths[0])} has {views[0].shape[0]} "
                f"rows, {os.fspath(p)} has {v.shape[0]}")
    labels = None
    if label_path is not None:
        labels = read_labels(label_path)
        if len(labels) != views[0].shape[0]:
            raise DimensionError(
                f"{os.fspath(label_path)} has {len(labels)} labels but the views "
                f"have {views[0].shape[0]} rows")
    return MultiviewDataset(views=views, labels=labels)


def save_views(dataset: MultiviewDataset, paths: Sequence, label_path=None) -> None:
    if len(paths) != dataset.n_views:
        raise ArgumentError(f"{len(paths)} paths for {dataset.n_views} views")
    for p, v in zip(paths, dataset.views):
        write_matrix(p, v)
    if label_path is not None:
        if dataset.labels is None:
            raise ArgumentError("dataset has no labels to write")
        write_labels(label_path, dataset.labels)


def split(dataset: MultiviewDataset, train_fraction: float, seed: int):
    """Randomly partition samples into a train part and a test part.

    The permutation is drawn from ``numpy.random.default_rng(seed)``, so the
    same ``(dataset, train_fraction, seed)`` always yields the same partition.
    Both parts keep the original sample order.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ArgumentError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = dataset.n_samples
    n_train = int(round(n * train_fraction))
    if n_train < 2:
        raise ArgumentError(f"train part would have {n_train} samples; need >= 2")
    if n - n_train < 2:
        raise ArgumentError(f"test part would have {n - n_train} samples; need >= 2")
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return dataset.subset(train_idx), dataset.subset(test_idx)
