"""Alternate optimisation of the projection and the view weights.

With the view weights fixed, the projection comes from a generalized
eigenproblem on the fused pencil ``(K L K, K D K)``. With the projection fixed,
per-view trace ratios give closed-form auxiliary weights ``gamma`` (a
power-``r`` simplex problem) which are mapped back to kernel weights ``alpha``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .eig import solve_kernel_gep
from .exceptions import (ArgumentError, DegenerateObjectiveError, DimensionError,
                         NumericError)
from .graph import SimilarityGraph, build_l1_graph, fit_gmm
from .kernel import KernelSet, build_kernels, check_simplex, fuse

logger = logging.getLogger(__name__)

DEGENERATE_TRACE = 1e-14


@dataclass
class KMPConfig:
    """Hyperparameters of a fit.

    ``sigmas`` holds one RBF bandwidth per view; ``None`` entries (or ``None``
    overall) use the median pairwise distance of that view.
    """

    d: int = 10
    r: float = 5.0
    n_clusters: int = 10
    max_atoms: int = 10
    sigmas: Optional[list] = None
    ridge: float = 1e-8
    rank_tol: float = 1e-3
    max_iter: int = 50
    tol: float = 1e-6
    seed: int = 0
    residual_tol: float = 1e-7

    def validate(self, n_samples: Optional[int] = None, n_views: Optional[int] = None):
        if int(self.d) != self.d or self.d < 1:
            raise ArgumentError(f"d must be a positive integer, got {self.d}")
        if not self.r > 1:
            raise ArgumentError(f"r must exceed 1, got {self.r}")
        if int(self.n_clusters) != self.n_clusters or self.n_clusters < 1:
            raise ArgumentError(f"n_clusters must be a positive integer, got {self.n_clusters}")
        if int(self.max_atoms) != self.max_atoms or self.max_atoms < 1:
            raise ArgumentError(f"max_atoms must be a positive integer, got {self.max_atoms}")
        if self.ridge < 0:
            raise ArgumentError(f"ridge must be nonnegative, got {self.ridge}")
        if not 0 <= self.rank_tol < 1:
            raise ArgumentError(f"rank_tol must be in [0, 1), got {self.rank_tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ArgumentError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not self.tol > 0:
            raise ArgumentError(f"tol must be positive, got {self.tol}")
        if self.residual_tol < 0:
            raise ArgumentError("residual_tol must be nonnegative")
        if n_samples is not None:
            if self.d > n_samples:
                raise ArgumentError(f"d={self.d} exceeds the number of samples {n_samples}")
            if self.n_clusters > n_samples:
                raise ArgumentError(
                    f"n_clusters={self.n_clusters} exceeds the number of samples {n_samples}")
        if self.sigmas is not None:
            if n_views is not None and len(self.sigmas) != n_views:
                raise ArgumentError(f"{len(self.sigmas)} sigmas for {n_views} views")
            for s in self.sigmas:
                if s is not None and not s > 0:
                    raise ArgumentError(f"sigma must be positive, got {s}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TraceTable:
    """Per-view traces ``tr(P^T K_i L_i K_i P)`` and ``tr(P^T K_i D_i K_i P)``."""

    L: np.ndarray
    D: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        return self.L / self.D


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    f1: float
    f1_before: float
    f3: float
    alpha: tuple
    gamma: tuple
    smallest_eigenvalue: float


@dataclass
class FitReport:
    history: list = field(default_factory=list)
    converged: bool = False
    iterations_used: int = 0
    best_iteration: int = 0

    def to_log(self) -> str:
        """One ``iter,F1,F3,alpha_1,...,alpha_M`` line per iteration."""
        if not self.history:
            return ""
        m = len(self.history[0].alpha)
        lines = ["iter,F1,F3," + ",".join(f"alpha_{i + 1}" for i in range(m))]
        for rec in self.history:
            cells = [str(rec.iteration), repr(rec.f1), repr(rec.f3)]
            cells += [repr(float(a)) for a in rec.alpha]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def trace_term(P, K_i, M_k, K_j) -> float:
    """``tr(P^T K_i M_k K_j P)``."""
    return float(np.sum((K_i @ P) * (M_k @ (K_j @ P))))


def trace_table(P, grams: Sequence, graphs: Sequence[SimilarityGraph]) -> TraceTable:
    L = np.array([trace_term(P, K, g.L, K) for K, g in zip(grams, graphs)])
    D = np.array([trace_term(P, K, g.D, K) for K, g in zip(grams, graphs)])
    return TraceTable(L=L, D=D)


def trace_ratio(P, A, B) -> float:
    num = float(np.sum(P * (A @ P)))
    den = float(np.sum(P * (B @ P)))
    if den <= DEGENERATE_TRACE:
        raise DegenerateObjectiveError(f"denominator trace {den:.3g} is not positive")
    return num / den


def objective_f1(P, grams: Sequence, laplacians: Sequence, degrees: Sequence, alpha) -> float:
    """``tr(P^T K L K P) / tr(P^T K D K P)`` for the alpha-fused K, L, D."""
    alpha = check_simplex(alpha, len(grams))
    K = fuse(grams, alpha)
    L = fuse(laplacians, alpha)
    D = fuse(degrees, alpha)
    return trace_ratio(P, K @ L @ K, K @ D @ K)


def objective_f3(table: TraceTable, weights) -> float:
    """Weighted sum of per-view trace ratios."""
    w = check_simplex(weights, table.L.size)
    if np.any(table.D <= 0):
        raise DegenerateObjectiveError("a per-view denominator trace is not positive")
    return float(np.sum(w * table.L / table.D))


def _check_table(table: TraceTable):
    if np.any(table.D <= DEGENERATE_TRACE):
        i = int(np.argmin(table.D))
        raise DegenerateObjectiveError(
            f"view {i} has denominator trace {table.D[i]:.3g}; cannot update weights")
    if np.any(table.L <= DEGENERATE_TRACE):
        i = int(np.argmin(table.L))
        raise DegenerateObjectiveError(
            f"view {i} has Laplacian trace {table.L[i]:.3g}; the projection already "
            "annihilates its graph, so the weight update is undefined")


def update_gamma(table: TraceTable, r: float) -> np.ndarray:
    """Minimiser of ``sum_i gamma_i^r L_i / D_i`` over the simplex."""
    if not r > 1:
        raise ArgumentError(f"r must exceed 1, got {r}")
    _check_table(table)
    # (D/L)^(1/(r-1)) in log space, normalised stably
    logs = (np.log(table.D) - np.log(table.L)) / (r - 1.0)
    w = np.exp(logs - logs.max())
    return w / w.sum()


def update_alpha(gamma, table: TraceTable, r: float) -> np.ndarray:
    """Kernel weights with ``alpha_i^3 L_i`` proportional to ``gamma_i^r``."""
    if not r > 1:
        raise ArgumentError(f"r must exceed 1, got {r}")
    gamma = check_simplex(gamma, table.L.size)
    _check_table(table)
    with np.errstate(divide="ignore"):
        logs = (r * np.log(gamma) - np.log(table.L)) / 3.0
    w = np.exp(logs - logs.max())
    return w / w.sum()


def build_graphs(views: Sequence, config: KMPConfig) -> list:
    """One l1-graph per view.

    Every view's mixture is seeded identically, so duplicated views produce
    identical graphs.
    """
    graphs = []
    for view in views:
        clusters = fit_gmm(view, config.n_clusters, seed=config.seed)
        graphs.append(build_l1_graph(view, clusters, config.max_atoms, config.residual_tol))
    return graphs


def projection_step(K, L, D, d, ridge=1e-8, rank_tol=1e-3):
    """Eigen-solve the fused pencil; return ``(P, F1, smallest eigenvalue)``."""
    sol = solve_kernel_gep(K, L, D, d, ridge, rank_tol)
    P = sol.eigenvectors
    return P, trace_ratio(P, K @ L @ K, K @ D @ K), float(sol.eigenvalues[0])


def alternate(grams: Sequence, graphs: Sequence[SimilarityGraph], d: int, r: float,
              ridge: float = 1e-8, max_iter: int = 50, tol: float = 1e-6,
              rank_tol: float = 1e-3, alpha0=None):
    """Run the alternating loop on precomputed Grams and graphs.

    Returns ``(P, alpha, report)`` for the iterate with the smallest F1.
    """
    m = len(grams)
    if len(graphs) != m:
        raise DimensionError(f"{len(graphs)} graphs for {m} kernels")
    n = grams[0].shape[0]
    if not 1 <= d <= n:
        raise ArgumentError(f"d must be in [1, {n}], got {d}")
    alpha = np.full(m, 1.0 / m) if alpha0 is None else check_simplex(alpha0, m)
    Ls = [g.L for g in graphs]
    Ds = [g.D for g in graphs]

    report = FitReport()
    best = None
    prev_P, prev_f1 = None, None
    for it in range(1, max_iter + 1):
        K = fuse(grams, alpha)
        L = fuse(Ls, alpha)
        D = fuse(Ds, alpha)
        f1_before = float("nan")
        if prev_P is not None:
            f1_before = trace_ratio(prev_P, K @ L @ K, K @ D @ K)
        P, f1, lam0 = projection_step(K, L, D, d, ridge, rank_tol)
        if not np.isfinite(f1):
            raise NumericError(f"objective became non-finite at iteration {it}")

        table = trace_table(P, grams, graphs)
        if m == 1:
            gamma = np.ones(1)
            new_alpha = np.ones(1)
            f3 = float(table.L[0] / table.D[0])
        else:
            gamma = update_gamma(table, r)
            new_alpha = update_alpha(gamma, table, r)
            f3 = objective_f3(table, gamma)

        report.history.append(IterationRecord(
            iteration=it, f1=f1, f1_before=f1_before, f3=f3,
            alpha=tuple(float(a) for a in alpha), gamma=tuple(float(g) for g in gamma),
            smallest_eigenvalue=lam0))
        logger.debug("iter %d: F1=%.6g F3=%.6g alpha=%s", it, f1, f3, alpha)
        if best is None or f1 < best[0]:
            best = (f1, P, alpha.copy(), it)
        report.iterations_used = it

        if m == 1 or (prev_f1 is not None and abs(f1 - prev_f1) < tol * max(1.0, abs(f1))):
            report.converged = True
            break
        prev_P, prev_f1 = P, f1
        alpha = new_alpha

    _, P, alpha, report.best_iteration = best
    return P, alpha, report


def fit(dataset, config: KMPConfig):
    """Train on a :class:`~kmp.data.MultiviewDataset`.

    Returns ``(ProjectionModel, FitReport)``.
    """
    from .model import ProjectionModel

    views = dataset.views if hasattr(dataset, "views") else list(dataset)
    n = views[0].shape[0]
    config.validate(n_samples=n, n_views=len(views))
    kernels: KernelSet = build_kernels(views, config.sigmas)
    graphs = build_graphs(views, config)
    P, alpha, report = alternate(kernels.grams, graphs, config.d, config.r,
                                 config.ridge, config.max_iter, config.tol,
                                 config.rank_tol)
    model = ProjectionModel(P=P, alpha=alpha, kinds=kernels.kinds,
                            sigmas=kernels.sigmas, train_views=views,
                            r=config.r, config=config.to_dict())
    return model, report
