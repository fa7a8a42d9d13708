"""Trained projection model, out-of-sample embedding and persistence.

File layout (all integers unsigned 64-bit little-endian)::

    b"KMPMODEL"                 magic
    header_len, header          UTF-8 JSON: version, shapes, alpha, kernels, config
    n_bytes, block              one per matrix: P, then each training view,
    ...                         float64 little-endian, row-major
    checksum                    first 8 bytes of BLAKE2b over everything above
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import (ArgumentError, ChecksumError, CorruptModelError,
                         DimensionError, ValidationError, VersionError)
from .kernel import check_simplex, cross_kernel, gram

FORMAT_VERSION = 1
MAGIC = b"KMPMODEL"
FUSIONS = ("weighted", "geometric")
_U64 = struct.Struct("<Q")


@dataclass(frozen=True)
class ProjectionModel:
    """Projection ``P`` (N x d) over the fused training kernel.

    ``fusion="geometric"`` replaces the weighted kernel sum by the entrywise
    geometric mean (used only by the GM baseline; ``alpha`` is then uniform).
    """

    P: np.ndarray
    alpha: np.ndarray
    kinds: tuple
    sigmas: tuple
    train_views: list
    r: float = 5.0
    config: dict = field(default_factory=dict)
    fusion: str = "weighted"
    version: int = FORMAT_VERSION

    def __post_init__(self):
        P = np.array(self.P, dtype=np.float64)
        views = [np.array(v, dtype=np.float64) for v in self.train_views]
        if P.ndim != 2:
            raise DimensionError(f"P must be 2-D, got shape {P.shape}")
        if not np.all(np.isfinite(P)):
            raise ValidationError("P has non-finite entries")
        m = len(views)
        alpha = check_simplex(self.alpha, m)
        if len(self.kinds) != m or len(self.sigmas) != m:
            raise DimensionError("need one kernel kind and sigma per view")
        for i, v in enumerate(views):
            if v.ndim != 2 or v.shape[0] != P.shape[0]:
                raise DimensionError(
                    f"training view {i} has shape {v.shape}; P has {P.shape[0]} rows")
        if self.fusion not in FUSIONS:
            raise ArgumentError(f"unknown fusion {self.fusion!r}")
        for a in (P, alpha, *views):
            a.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "train_views", views)
        object.__setattr__(self, "kinds", tuple(self.kinds))
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))

    @property
    def n_samples(self) -> int:
        return self.P.shape[0]

    @property
    def n_components(self) -> int:
        return self.P.shape[1]

    @property
    def n_views(self) -> int:
        return len(self.train_views)

    @property
    def dims(self) -> tuple:
        return tuple(v.shape[1] for v in self.train_views)


def fuse_kernel_rows(rows: Sequence, alpha, fusion: str = "weighted") -> np.ndarray:
    if fusion == "geometric":
        logs = sum(np.log(r) for r in rows) / len(rows)
        return np.exp(logs)
    out = np.zeros_like(rows[0])
    for a, r in zip(alpha, rows):
        out += a * r
    return out


def embed_train(model: ProjectionModel) -> np.ndarray:
    """Training embedding ``Y = K P`` with the fused training Gram ``K``."""
    grams = [gram(k, v, s) for k, v, s in zip(model.kinds, model.train_views, model.sigmas)]
    return fuse_kernel_rows(grams, model.alpha, model.fusion) @ model.P


def _as_views(model: ProjectionModel, sample) -> list:
    if len(sample) != model.n_views:
        raise ArgumentError(f"expected {model.n_views} views, got {len(sample)}")
    views = []
    for i, (x, dim) in enumerate(zip(sample, model.dims)):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != dim:
            raise ArgumentError(
                f"view {i}: expected {dim} features per sample, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValidationError(f"view {i}: non-finite feature value")
        views.append(x)
    if len({v.shape[0] for v in views}) != 1:
        raise DimensionError("views disagree on the number of query samples")
    return views


def embed_oos(model: ProjectionModel, sample) -> np.ndarray:
    """Embed unseen samples without retraining.

    ``sample`` holds one entry per view: a feature vector (returns a
    ``d``-vector) or a ``(T, D_i)`` batch (returns ``(T, d)``).
    """
    single = all(np.ndim(x) == 1 for x in sample)
    views = _as_views(model, sample)
    rows = [cross_kernel(k, x, v, s) for k, x, v, s in
            zip(model.kinds, views, model.train_views, model.sigmas)]
    Y = fuse_kernel_rows(rows, model.alpha, model.fusion) @ model.P
    return Y[0] if single else Y


# ---------------------------------------------------------------- persistence

def _header(model: ProjectionModel) -> dict:
    return {
        "version": model.version,
        "N": model.n_samples,
        "d": model.n_components,
        "M": model.n_views,
        "dims": list(model.dims),
        "alpha": [float(a) for a in model.alpha],
        "kinds": list(model.kinds),
        "sigmas": [float(s) for s in model.sigmas],
        "r": float(model.r),
        "fusion": model.fusion,
        "config": model.config,
    }


def to_bytes(model: ProjectionModel) -> bytes:
    header = json.dumps(_header(model), sort_keys=True, allow_nan=True).encode("utf-8")
    parts = [MAGIC, _U64.pack(len(header)), header]
    for mat in (model.P, *model.train_views):
        block = np.ascontiguousarray(mat, dtype="<f8").tobytes(order="C")
        parts += [_U64.pack(len(block)), block]
    body = b"".join(parts)
    return body + hashlib.blake2b(body, digest_size=8).digest()


def save(model: ProjectionModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(model))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CorruptModelError("model file is truncated")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]


def from_bytes(buf: bytes) -> ProjectionModel:
    rd = _Reader(buf)
    if rd.take(len(MAGIC)) != MAGIC:
        raise CorruptModelError("not a kmp model file (bad magic)")
    try:
        header = json.loads(rd.take(rd.u64()).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModelError(f"unreadable model header: {exc}") from None
    version = header.get("version")
    if version != FORMAT_VERSION:
        raise VersionError(f"model format version {version}; this reader supports {FORMAT_VERSION}")
    try:
        n, d, dims = int(header["N"]), int(header["d"]), [int(x) for x in header["dims"]]
    except (KeyError, TypeError, ValueError):
        raise CorruptModelError("model header is missing shape fields") from None
    mats = []
    for rows, cols in [(n, d)] + [(n, c) for c in dims]:
        size = rd.u64()
        if size != rows * cols * 8:
            raise CorruptModelError(f"block of {size} bytes does not match shape ({rows}, {cols})")
        mats.append(np.frombuffer(rd.take(size), dtype="<f8").reshape(rows, cols).astype(np.float64))
    body_end = rd.pos
    stored = rd.take(8)
    if rd.pos != len(buf):
        raise CorruptModelError("trailing bytes after checksum")
    if hashlib.blake2b(buf[:body_end], digest_size=8).digest() != stored:
        raise ChecksumError("model file checksum mismatch")
    return ProjectionModel(P=mats[0], alpha=header["alpha"], kinds=header["kinds"],
                           sigmas=header["sigmas"], train_views=mats[1:], r=header["r"],
                           config=header["config"], fusion=header["fusion"],
                           version=version)


def load(path) -> ProjectionModel:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
