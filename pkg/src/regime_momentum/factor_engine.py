"""Principal-component factor model of a return panel.

The functional API works on :class:`~regime_momentum.data_model.ReturnPanel`
objects; :class:`PCAFactorModel` wraps it as a scikit-learn transformer over
``(n_periods, n_assets)`` arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import DataError, check_matrix
from .data_model import ReturnPanel


@dataclass(frozen=True, eq=False)
class FactorModel:
    """Fitted eigen-decomposition of the sample covariance (or correlation) matrix.

    ``loadings`` is ``(n_assets, k)`` with orthonormal columns, ordered by
    descending ``eigenvalues``. ``total_variance`` is the trace of the
    decomposed matrix, so shares of retained components need not sum to one.
    """

    means: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray
    total_variance: float
    scales: np.ndarray | None = None
    asset_ids: tuple = ()

    @property
    def n_components(self):
        return self.loadings.shape[1]

    def to_json(self):
        return json.dumps(
            {
                "asset_ids": list(self.asset_ids),
                "means": self.means.tolist(),
                "eigenvalues": self.eigenvalues.tolist(),
                "total_variance": self.total_variance,
                "loadings": self.loadings.tolist(),
                "scales": None if self.scales is None else self.scales.tolist(),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            means=np.asarray(d["means"], dtype=float),
            loadings=np.asarray(d["loadings"], dtype=float),
            eigenvalues=np.asarray(d["eigenvalues"], dtype=float),
            total_variance=float(d["total_variance"]),
            scales=None if d.get("scales") is None else np.asarray(d["scales"], dtype=float),
            asset_ids=tuple(d.get("asset_ids", ())),
        )


@dataclass(frozen=True, eq=False)
class FactorScores:
    scores: np.ndarray
    normalized: bool
    dates: np.ndarray | None = None


def _fix_signs(vectors):
    """Flip each column so its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _fit_matrix(X, k, use_correlation):
    T, N = X.shape
    if T < 2:
        raise DataError("need at least two periods to estimate a covariance matrix")
    if not 1 <= k <= N:
        raise ValueError(f"component count must be in [1, {N}], got {k}")
    means = X.mean(axis=0)
    centered = X - means
    scales = None
    if use_correlation:
        scales = centered.std(axis=0, ddof=1)
        if np.any(scales == 0):
            raise DataError("constant asset: correlation PCA undefined")
        centered = centered / scales
    cov = centered.T @ centered / (T - 1)
    cov = 0.5 * (cov + cov.T)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = _fix_signs(evecs[:, order])
    return means, scales, evals, evecs, float(np.trace(cov))


def fit_pca(panel, k, use_correlation=False):
    """Eigen-decompose the sample covariance of ``panel`` and keep ``k`` components."""
    X = panel.returns.T
    means, scales, evals, evecs, total = _fit_matrix(X, k, use_correlation)
    return FactorModel(
        means=means,
        loadings=evecs[:, :k],
        eigenvalues=evals[:k],
        total_variance=total,
        scales=scales,
        asset_ids=panel.asset_ids,
    )


def explained_variance(model):
    """Per-component variance shares and their cumulative sums."""
    total = model.total_variance
    if total <= 0:
        raise DataError("panel has zero total variance")
    shares = model.eigenvalues / total
    return shares, np.cumsum(shares)


def _scores(model, X):
    centered = X - model.means
    if model.scales is not None:
        centered = centered / model.scales
    return centered @ model.loadings


def project_scores(model, panel, normalize=False):
    """Factor scores ``f_t = P'(r_t - rbar)`` for every date of ``panel``."""
    if panel.n_assets != model.loadings.shape[0]:
        raise DataError(
            f"panel has {panel.n_assets} assets, model was fitted on {model.loadings.shape[0]}"
        )
    if model.asset_ids and tuple(panel.asset_ids) != tuple(model.asset_ids):
        raise DataError("panel asset ids do not match the fitted model")
    scores = _scores(model, panel.returns.T)
    if normalize:
        scores = standardize_scores(scores)
    return FactorScores(scores=scores, normalized=normalize, dates=panel.dates)


def standardize_scores(scores):
    """Zero-mean, unit-variance columns (sample variance, ``n - 1``)."""
    scores = np.asarray(scores, dtype=float)
    if scores.shape[0] < 2:
        raise DataError("cannot standardize fewer than two score rows")
    sd = scores.std(axis=0, ddof=1)
    if np.any(sd == 0):
        raise DataError("constant factor score column")
    return (scores - scores.mean(axis=0)) / sd


def forecast_portfolio_return(scores_window, weights):
    """Composite one-step-ahead return series ``F @ pi``."""
    F = np.atleast_2d(np.asarray(scores_window, dtype=float))
    w = np.asarray(weights, dtype=float).ravel()
    if F.shape[1] != w.size:
        raise DataError(f"scores have {F.shape[1]} factors but {w.size} weights were given")
    return F @ w


def factor_portfolio_panel(model, panel):
    """Eigen-portfolio returns as a new panel (one row per factor).

    Each loading column is rescaled to unit gross exposure, so a row is the
    return of a fully invested long-short portfolio rather than of the raw
    unit-norm eigenvector.
    """
    weights = model.loadings / np.abs(model.loadings).sum(axis=0)
    rets = panel.returns.T @ weights
    ids = tuple(f"PC{i + 1}" for i in range(model.n_components))
    return ReturnPanel(panel.dates, rets.T, ids)


class PCAFactorModel(TransformerMixin, BaseEstimator):
    """scikit-learn transformer producing (optionally standardized) factor scores.

    Parameters
    ----------
    n_components : int
        Number of retained components.
    use_correlation : bool
        Decompose the correlation rather than covariance matrix.
    normalize : bool
        Standardize scores with the moments of the training scores.
    """

    def __init__(self, n_components=30, use_correlation=False, normalize=True):
        self.n_components = n_components
        self.use_correlation = use_correlation
        self.normalize = normalize

    def fit(self, X, y=None):
        X = check_matrix(X, min_rows=2)
        k = min(self.n_components, X.shape[1])
        means, scales, evals, evecs, total = _fit_matrix(X, k, self.use_correlation)
        self.model_ = FactorModel(means, evecs[:, :k], evals[:k], total, scales)
        self.components_ = evecs[:, :k].T
        self.explained_variance_ = evals[:k]
        self.explained_variance_ratio_ = evals[:k] / total
        raw = _scores(self.model_, X)
        self.score_mean_ = raw.mean(axis=0)
        self.score_std_ = raw.std(axis=0, ddof=1)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        X = check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} assets, got {X.shape[1]}")
        scores = _scores(self.model_, X)
        if self.normalize:
            scores = (scores - self.score_mean_) / self.score_std_
        return scores

    def inverse_transform(self, scores):
        check_is_fitted(self, "model_")
        scores = np.atleast_2d(np.asarray(scores, dtype=float))
        if self.normalize:
            scores = scores * self.score_std_ + self.score_mean_
        centered = scores @ self.model_.loadings.T
        if self.model_.scales is not None:
            centered = centered * self.model_.scales
        return centered + self.model_.means
