"""Sparse l1-graph construction.

Each view is clustered with a diagonal Gaussian mixture; every sample is then
sparse-coded by orthogonal matching pursuit over the other samples of its
cluster plus an identity block that soaks up noise. Coefficient magnitudes on
the sample atoms become similarity weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .exceptions import ArgumentError, DimensionError, NumericError

VAR_FLOOR = 1e-6
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    n_clusters: int
    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray
    log_likelihood: float
    n_iter: int


@dataclass(frozen=True)
class SparseCode:
    support: np.ndarray
    coefficients: np.ndarray
    residual_norm: float
    residual_history: tuple = ()

    def dense(self, n_atoms: int) -> np.ndarray:
        out = np.zeros(n_atoms)
        out[self.support] = self.coefficients
        return out


@dataclass(frozen=True)
class SimilarityGraph:
    W: np.ndarray
    D: np.ndarray
    L: np.ndarray


# ---------------------------------------------------------------- GMM

def _kmeans_plusplus(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def _log_joint(X, means, variances, weights):
    # log(pi_g) + log N(x | mu_g, diag(var_g)), shape (n, G)
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    prec = 1.0 / variances
    quad = ((X ** 2) @ prec.T
            - 2.0 * X @ (means * prec).T
            + np.sum(means ** 2 * prec, axis=1))
    log_det = np.sum(np.log(variances), axis=1)
    return log_w - 0.5 * (X.shape[1] * np.log(2 * np.pi) + log_det + quad)


def fit_gmm(view, n_clusters: int, seed: int = 0, max_iter: int = 100,
            tol: float = 1e-6) -> ClusterAssignment:
    """Fit a diagonal-covariance Gaussian mixture by EM.

    Means are initialised by k-means++ drawn from ``seed``. A component whose
    responsibility mass vanishes is re-seeded at the worst-explained sample.
    Final labels are the arg-max responsibilities, after which every empty
    component takes over the least confident sample of a multi-member cluster,
    so each of the ``n_clusters`` labels is used whenever ``n_clusters <= N``.
    """
    X = np.asarray(view, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"view must be 2-D, got shape {X.shape}")
    n, dim = X.shape
    G = int(n_clusters)
    if not 1 <= G <= n:
        raise ArgumentError(f"n_clusters must be in [1, {n}], got {n_clusters}")
    rng = np.random.default_rng(seed)

    means = _kmeans_plusplus(X, G, rng)
    base_var = np.maximum(X.var(axis=0), VAR_FLOOR)
    variances = np.tile(base_var, (G, 1))
    weights = np.full(G, 1.0 / G)

    prev_ll = -np.inf
    ll = -np.inf
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        log_joint = _log_joint(X, means, variances, weights)
        log_norm = logsumexp(log_joint, axis=1)
        ll = float(log_norm.sum())
        if not np.isfinite(ll):
            raise NumericError(f"GMM log-likelihood became non-finite at iteration {n_iter}")
        resp = np.exp(log_joint - log_norm[:, None])

        nk = resp.sum(axis=0)
        empty = nk < 1e-10
        if np.any(empty):
            # re-seed dead components at the samples the mixture explains worst
            order = np.argsort(log_norm, kind="stable")
            for g, idx in zip(np.flatnonzero(empty), order):
                resp[:, g] = 0.0
                resp[idx] = 0.0
                resp[idx, g] = 1.0
            nk = resp.sum(axis=0)

        weights = nk / n
        means = (resp.T @ X) / nk[:, None]
        variances = (resp.T @ (X ** 2)) / nk[:, None] - means ** 2
        variances = np.maximum(variances, VAR_FLOOR)

        if abs(ll - prev_ll) < tol:
            break
        prev_ll = ll

    log_joint = _log_joint(X, means, variances, weights)
    labels = np.argmax(log_joint, axis=1)
    labels = _fill_empty_clusters(labels, log_joint, G)
    return ClusterAssignment(labels=labels, n_clusters=G, means=means,
                             variances=variances, weights=weights,
                             log_likelihood=ll, n_iter=n_iter)


def _fill_empty_clusters(labels, log_joint, G):
    labels = labels.copy()
    counts = np.bincount(labels, minlength=G)
    for g in np.flatnonzero(counts == 0):
        donors = np.flatnonzero(counts[labels] > 1)
        if donors.size == 0:
            break
        # least confident donor: smallest margin of own label over target g
        own = log_joint[donors, labels[donors]]
        idx = donors[np.argmin(own - log_joint[donors, g])]
        counts[labels[idx]] -= 1
        labels[idx] = g
        counts[g] += 1
    return labels


# ---------------------------------------------------------------- OMP

def normalize_columns(dictionary):
    """Return ``(unit-column dictionary, column norms)``.

    Raises
    ------
    ArgumentError
        If any column has zero norm.
    """
    B = np.asarray(dictionary, dtype=np.float64)
    norms = np.linalg.norm(B, axis=0)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ArgumentError(f"dictionary column {zero[0]} has zero norm")
    return B / norms, norms


def omp(target, dictionary, max_atoms: int, residual_tol: float = 1e-7) -> SparseCode:
    """Orthogonal matching pursuit.

    Columns are normalised internally; returned coefficients refer to the
    original (un-normalised) columns. Each step picks the atom with the largest
    absolute correlation to the residual (lowest index on ties), then refits all
    selected atoms by least squares. Stops after ``max_atoms`` atoms or once the
    residual norm is at most ``residual_tol``.
    """
    y = np.asarray(target, dtype=np.float64).ravel()
    B = np.asarray(dictionary, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] != y.size:
        raise DimensionError(f"dictionary shape {B.shape} does not match target length {y.size}")
    n_atoms = B.shape[1]
    if not 1 <= max_atoms <= max(n_atoms, 1):
        raise ArgumentError(f"max_atoms must be in [1, {n_atoms}], got {max_atoms}")
    if residual_tol < 0:
        raise ArgumentError("residual_tol must be nonnegative")
    Bn, norms = normalize_columns(B)

    support: list[int] = []
    coef = np.empty(0)
    residual = y.copy()
    res_norm = float(np.linalg.norm(residual))
    history = [res_norm]
    available = np.ones(n_atoms, dtype=bool)
    while len(support) < max_atoms and res_norm > residual_tol:
        corr = np.abs(Bn.T @ residual)
        corr[~available] = -1.0
        best = corr.max()
        if best <= 1e-12 * max(res_norm, 1.0):
            break
        # ties within round-off go to the lowest index
        j = int(np.flatnonzero(corr >= best * (1.0 - TIE_RTOL))[0])
        trial = support + [j]
        sub = Bn[:, trial]
        trial_coef, *_ = np.linalg.lstsq(sub, y, rcond=None)
        trial_res = y - sub @ trial_coef
        trial_norm = float(np.linalg.norm(trial_res))
        if trial_norm > res_norm:
            # selected atom is numerically dependent on the support
            break
        support, coef, residual, res_norm = trial, trial_coef, trial_res, trial_norm
        available[j] = False
        history.append(res_norm)

    support_arr = np.asarray(support, dtype=int)
    return SparseCode(support=support_arr,
                      coefficients=coef / norms[support_arr] if support else np.empty(0),
                      residual_norm=res_norm,
                      residual_history=tuple(history))


# ---------------------------------------------------------------- graph

def degree_and_laplacian(W):
    """Degree matrix and unnormalised Laplacian ``L = D - W``."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionError(f"W must be square, got shape {W.shape}")
    if np.max(np.abs(W - W.T), initial=0.0) > 1e-9:
        raise ArgumentError("W is not symmetric")
    D = np.diag(W.sum(axis=1))
    return D, D - W


def l1_weights(view, labels, max_atoms: int, residual_tol: float = 1e-7) -> np.ndarray:
    """Raw (unsymmetrised) sparse-coding weights, row ``p`` coding sample ``p``."""
    X = np.asarray(view, dtype=np.float64)
    n, dim = X.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise DimensionError(f"{labels.size} cluster labels for {n} samples")
    if max_atoms < 1:
        raise ArgumentError(f"max_atoms must be >= 1, got {max_atoms}")
    norms = np.linalg.norm(X, axis=1)
    eye = np.eye(dim)
    W = np.zeros((n, n))
    for p in range(n):
        # zero rows cannot serve as atoms
        peers = np.flatnonzero((labels == labels[p]) & (norms > 0))
        peers = peers[peers != p]
        if peers.size == 0:
            continue
        dictionary = np.hstack([X[peers].T, eye])
        budget = min(max_atoms, dictionary.shape[1])
        code = omp(X[p], dictionary, budget, residual_tol)
        on_data = code.support < peers.size
        W[p, peers[code.support[on_data]]] = np.abs(code.coefficients[on_data])
    return W


def build_l1_graph(view, clusters, max_atoms: int,
                   residual_tol: float = 1e-7) -> SimilarityGraph:
    """Symmetric l1-graph of one view restricted to GMM clusters.

    ``clusters`` is a :class:`ClusterAssignment` or a plain label array. Samples
    alone in their cluster get an all-zero row before symmetrisation.
    """
    labels = clusters.labels if isinstance(clusters, ClusterAssignment) else clusters
    W = l1_weights(view, labels, max_atoms, residual_tol)
    W = (W + W.T) / 2.0
    D, L = degree_and_laplacian(W)
    return SimilarityGraph(W=W, D=D, L=L)
