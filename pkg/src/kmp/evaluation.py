"""Evaluation harness: k-NN accuracy, AM/GM kernel baselines, synthetic data,
and cross-validated grid search."""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.model_selection import StratifiedKFold

from .data import MultiviewDataset
from .exceptions import (ArgumentError, DimensionError, KMPError,
                         StratificationError, UnsupportedError)
from .kernel import build_kernels, fuse, median_sigma
from .model import ProjectionModel, embed_oos, embed_train
from .optimizer import KMPConfig, build_graphs, projection_step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    classes: tuple
    per_class: np.ndarray
    confusion: np.ndarray
    seconds: float = 0.0
    predictions: Optional[np.ndarray] = None


def knn_classify(train_embed, train_labels, test_embed, test_labels=None,
                 k: int = 1) -> EvalResult:
    """Euclidean k-NN with majority vote.

    Vote ties go to the label that sorts first. When ``test_labels`` is
    omitted only predictions are meaningful (accuracy is ``nan``).
    """
    start = time.perf_counter()
    Xtr = np.atleast_2d(np.asarray(train_embed, dtype=np.float64))
    Xte = np.atleast_2d(np.asarray(test_embed, dtype=np.float64))
    ytr = np.asarray([str(y) for y in train_labels])
    if ytr.size != Xtr.shape[0]:
        raise DimensionError(f"{ytr.size} labels for {Xtr.shape[0]} training rows")
    if Xtr.shape[1] != Xte.shape[1]:
        raise DimensionError(f"train has {Xtr.shape[1]} columns, test has {Xte.shape[1]}")
    if not 1 <= k <= Xtr.shape[0]:
        raise ArgumentError(f"k must be in [1, {Xtr.shape[0]}], got {k}")

    classes = np.unique(ytr if test_labels is None
                        else np.concatenate([ytr, [str(y) for y in test_labels]]))
    code = {c: i for i, c in enumerate(classes)}
    ytr_idx = np.array([code[y] for y in ytr])
    dist = cdist(Xte, Xtr)
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    votes = np.zeros((Xte.shape[0], classes.size), dtype=int)
    for j in range(k):
        np.add.at(votes, (np.arange(Xte.shape[0]), ytr_idx[nearest[:, j]]), 1)
    pred_idx = np.argmax(votes, axis=1)
    predictions = classes[pred_idx]

    confusion = np.zeros((classes.size, classes.size), dtype=int)
    if test_labels is None:
        acc, per_class = float("nan"), np.full(classes.size, np.nan)
    else:
        yte_idx = np.array([code[str(y)] for y in test_labels])
        if yte_idx.size != Xte.shape[0]:
            raise DimensionError(f"{yte_idx.size} labels for {Xte.shape[0]} test rows")
        np.add.at(confusion, (yte_idx, pred_idx), 1)
        acc = float(np.trace(confusion) / confusion.sum())
        support = confusion.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            per_class = np.where(support > 0, np.diag(confusion) / support, np.nan)
    return EvalResult(accuracy=acc, classes=tuple(classes), per_class=per_class,
                      confusion=confusion, seconds=time.perf_counter() - start,
                      predictions=predictions)


# ---------------------------------------------------------------- baselines

def baseline_am(kernels: Sequence) -> np.ndarray:
    """Arithmetic-mean kernel fusion."""
    m = len(kernels)
    return fuse(kernels, np.full(m, 1.0 / m))


def baseline_gm(kernels: Sequence) -> np.ndarray:
    """Entrywise geometric mean of the kernels."""
    kernels = [np.asarray(K, dtype=np.float64) for K in kernels]
    for i, K in enumerate(kernels):
        if np.any(K <= 0):
            raise UnsupportedError(f"kernel {i} has nonpositive entries; geometric mean undefined")
    out = np.exp(sum(np.log(K) for K in kernels) / len(kernels))
    return (out + out.T) / 2.0


def fit_frozen(dataset, config: KMPConfig, fusion: str = "weighted",
               views: Optional[Sequence[int]] = None) -> ProjectionModel:
    """Single eigen-solve with uniform, frozen view weights.

    ``fusion="weighted"`` gives the arithmetic-mean baseline, ``"geometric"``
    the geometric-mean one; ``views`` restricts training to a subset (a single
    index gives a single-view kernel embedding).
    """
    all_views = dataset.views if hasattr(dataset, "views") else list(dataset)
    idx = list(range(len(all_views))) if views is None else list(views)
    sub = [all_views[i] for i in idx]
    sigmas = None if config.sigmas is None else [config.sigmas[i] for i in idx]
    cfg = replace(config, sigmas=sigmas)
    cfg.validate(n_samples=sub[0].shape[0], n_views=len(sub))
    kernels = build_kernels(sub, sigmas)
    graphs = build_graphs(sub, cfg)
    m = len(sub)
    uniform = np.full(m, 1.0 / m)
    K = baseline_gm(kernels.grams) if fusion == "geometric" else baseline_am(kernels.grams)
    L = fuse([g.L for g in graphs], uniform)
    D = fuse([g.D for g in graphs], uniform)
    P, _, _ = projection_step(K, L, D, cfg.d, cfg.ridge, cfg.rank_tol)
    return ProjectionModel(P=P, alpha=uniform, kinds=kernels.kinds, sigmas=kernels.sigmas,
                           train_views=sub, r=cfg.r, config=cfg.to_dict(), fusion=fusion)


# ---------------------------------------------------------------- synthetic data

def make_synthetic(classes: int = 3, per_class: int = 100, views: int = 2,
                   noise=0.1, seed: int = 0, dims: Optional[Sequence[int]] = None,
                   radius: float = 1.0) -> MultiviewDataset:
    """Gaussian classes around 2-D latent centres lifted into several views.

    Class centres sit evenly on a circle of ``radius``. View ``i`` maps the
    latent centre of each sample through a fixed random ``(2, D_i)`` matrix
    (entries ``N(0, 1/2)``, so lengths are preserved on average) and adds
    isotropic Gaussian noise. ``noise`` is a scalar or one value per view, in
    units of the spacing between neighbouring centres.
    """
    if classes < 2 or per_class < 2 or views < 1:
        raise ArgumentError("need classes >= 2, per_class >= 2 and views >= 1")
    dims = [10 + 5 * i for i in range(views)] if dims is None else list(dims)
    if len(dims) != views:
        raise ArgumentError(f"{len(dims)} dims for {views} views")
    noise = np.broadcast_to(np.asarray(noise, dtype=np.float64), (views,))
    rng = np.random.default_rng(seed)
    angles = 2 * np.pi * np.arange(classes) / classes
    centres = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    spacing = 2 * radius * np.sin(np.pi / classes)
    y = np.repeat(np.arange(classes), per_class)
    latent = centres[y]
    out = []
    for dim, sn in zip(dims, noise):
        lift = rng.normal(scale=np.sqrt(0.5), size=(2, dim))
        out.append(latent @ lift + rng.normal(scale=sn * spacing, size=(y.size, dim)))
    return MultiviewDataset(views=out, labels=[str(c) for c in y])


# ---------------------------------------------------------------- grid search

def _stratified_folds(labels, folds, seed):
    labels = np.asarray(labels)
    values, counts = np.unique(labels, return_counts=True)
    if np.any(counts < folds):
        small = values[np.argmin(counts)]
        raise StratificationError(
            f"class {small!r} has {counts.min()} members, fewer than {folds} folds")
    skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    return list(skf.split(np.zeros(labels.size), labels))


def cv_score(dataset, config: KMPConfig, folds: int = 10, seed: int = 0, k: int = 1,
             sigma_scale: float = 1.0) -> float:
    """Mean k-NN accuracy of KMP over stratified folds.

    ``sigma_scale`` multiplies each view's median-heuristic bandwidth, computed
    on the training folds. Folds where the fit fails score zero.
    """
    from .optimizer import fit

    if dataset.labels is None:
        raise ArgumentError("grid search needs labelled data")
    scores = []
    for tr, te in _stratified_folds(dataset.labels, folds, seed):
        train, test = dataset.subset(tr), dataset.subset(te)
        cfg = replace(config, sigmas=[sigma_scale * median_sigma(v) for v in train.views])
        try:
            model, _ = fit(train, cfg)
        except KMPError as exc:
            logger.info("config %s failed on a fold: %s", cfg, exc)
            scores.append(0.0)
            continue
        res = knn_classify(embed_train(model), train.labels,
                           embed_oos(model, test.views), test.labels, k=k)
        scores.append(res.accuracy)
    return float(np.mean(scores))


def grid_search(dataset, grids: dict, folds: int = 10, seed: int = 0,
                base: Optional[KMPConfig] = None, k: int = 1):
    """Exhaustive CV over ``r``, ``n_clusters``, ``max_atoms`` and ``sigma_scale``.

    Missing grid keys fall back to the value in ``base``. Returns the best
    configuration (first in grid order on ties) and a table of
    ``(params, mean accuracy)`` rows.
    """
    if folds < 2:
        raise ArgumentError(f"folds must be >= 2, got {folds}")
    base = base or KMPConfig(seed=seed)
    keys = ("r", "n_clusters", "max_atoms", "sigma_scale")
    unknown = set(grids) - set(keys)
    if unknown:
        raise ArgumentError(f"unknown grid keys {sorted(unknown)}")
    axes = []
    for key in keys:
        values = list(grids.get(key, [1.0 if key == "sigma_scale" else getattr(base, key)]))
        if not values:
            raise ArgumentError(f"grid for {key} is empty")
        axes.append(values)
    _stratified_folds(dataset.labels, folds, seed)

    table = []
    best_params, best_score = None, -np.inf
    for combo in itertools.product(*axes):
        params = dict(zip(keys, combo))
        cfg = replace(base, r=params["r"], n_clusters=params["n_clusters"],
                      max_atoms=params["max_atoms"])
        score = cv_score(dataset, cfg, folds, seed, k, params["sigma_scale"])
        table.append((params, score))
        if score > best_score:
            best_params, best_score = params, score
    return best_params, table
