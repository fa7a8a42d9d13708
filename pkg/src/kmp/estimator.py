"""scikit-learn compatible wrapper around the KMP training loop."""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .model import embed_oos, embed_train
from .optimizer import KMPConfig, fit
from .validation import check_Xs


class KernelizedMultiviewProjection(TransformerMixin, BaseEstimator):
    """Unsupervised multiview embedding with fused kernels and l1-graphs.

    ``fit`` and ``transform`` take ``Xs``, a list with one
    ``(n_samples, n_features_i)`` array per view.

    Parameters
    ----------
    n_components : int, default=10
        Embedding dimension.
    r : float, default=5.0
        Exponent (> 1) controlling how evenly the views are weighted; larger
        values push the weights towards uniform.
    n_clusters : int, default=10
        Mixture components per view; sparse codes only use same-cluster samples.
    max_atoms : int, default=10
        Sparsity budget of each sample's code.
    sigmas : list of float or None, default=None
        RBF bandwidth per view; ``None`` (or a ``None`` entry) uses the median
        pairwise distance.
    ridge : float, default=1e-8
        Relative diagonal shift added to the right-hand matrix of the eigenproblem.
    rank_tol : float, default=1e-3
        Kernel eigenvalues below ``rank_tol * max`` are treated as zero.
    max_iter : int, default=50
    tol : float, default=1e-6
        Relative change of the objective that stops the alternation.
    random_state : int or None, default=None
        Seed for the mixture initialisation; ``None`` means 0.

    Attributes
    ----------
    alpha_ : ndarray of shape (n_views,)
        Learned kernel weights.
    projection_ : ndarray of shape (n_samples, n_components)
    embedding_ : ndarray of shape (n_samples, n_components)
        Embedding of the training samples.
    model_ : ProjectionModel
    report_ : FitReport
    """

    def __init__(self, n_components=10, r=5.0, n_clusters=10, max_atoms=10,
                 sigmas=None, ridge=1e-8, rank_tol=1e-3, max_iter=50, tol=1e-6,
                 random_state=None):
        self.n_components = n_components
        self.r = r
        self.n_clusters = n_clusters
        self.max_atoms = max_atoms
        self.sigmas = sigmas
        self.ridge = ridge
        self.rank_tol = rank_tol
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _config(self) -> KMPConfig:
        return KMPConfig(d=self.n_components, r=self.r, n_clusters=self.n_clusters,
                         max_atoms=self.max_atoms,
                         sigmas=None if self.sigmas is None else list(self.sigmas),
                         ridge=self.ridge, rank_tol=self.rank_tol,
                         max_iter=self.max_iter, tol=self.tol,
                         seed=0 if self.random_state is None else int(self.random_state))

    def fit(self, Xs, y=None):
        Xs = check_Xs(Xs, min_samples=2)
        self.model_, self.report_ = fit(Xs, self._config())
        self.alpha_ = self.model_.alpha
        self.projection_ = self.model_.P
        self.sigmas_ = self.model_.sigmas
        self.n_views_ = len(Xs)
        self.n_features_in_views_ = tuple(X.shape[1] for X in Xs)
        self.n_iter_ = self.report_.iterations_used
        self.embedding_ = embed_train(self.model_)
        return self

    def transform(self, Xs):
        """Embed (possibly unseen) samples with the learned projection."""
        check_is_fitted(self, "model_")
        Xs = check_Xs(Xs, n_views=self.n_views_, dims=self.n_features_in_views_)
        return embed_oos(self.model_, Xs)

    def fit_transform(self, Xs, y=None):
        return self.fit(Xs).embedding_
