import numpy as np
import pytest
from sklearn.base import clone

from _oracles import one_factor_panel
from regime_momentum._validation import DataError
from regime_momentum.factor_engine import (
    FactorModel,
    PCAFactorModel,
    explained_variance,
    factor_portfolio_panel,
    fit_pca,
    forecast_portfolio_return,
    project_scores,
)


def test_identical_assets_rank_one(panel_factory, rng):
    x = rng.normal(0, 0.01, 200)
    model = fit_pca(panel_factory(np.vstack([x, x])), 2)
    shares, cum = explained_variance(model)
    assert shares[0] == pytest.approx(1.0, abs=1e-12)


def test_diagonal_covariance(panel_factory):
    # exact diag(4, 1) sample covariance from orthogonal +-1 patterns
    a = np.array([1, -1, 1, -1] * 10, float)
    b = np.array([1, 1, -1, -1] * 10, float)
    k = len(a) - 1
    X = 0.1 * np.vstack([2 * a * np.sqrt(k / len(a)), b * np.sqrt(k / len(a))])
    model = fit_pca(panel_factory(X), 2)
    np.testing.assert_allclose(model.eigenvalues, [0.04, 0.01], rtol=1e-12)
    np.testing.assert_allclose(np.abs(model.loadings), np.eye(2), atol=1e-12)
    shares, _ = explained_variance(model)
    np.testing.assert_allclose(shares, [0.8, 0.2], rtol=1e-12)


def test_synthetic_share_and_normalisation():
    panel, _ = one_factor_panel(n_periods=3000, seed=1)
    full = fit_pca(panel, panel.n_assets)
    shares, cum = explained_variance(full)
    assert shares[0] == pytest.approx(0.88, abs=0.02)
    assert cum[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(cum) >= -1e-15)


def test_single_component_share(panel_factory, rng):
    model = fit_pca(panel_factory(0.01 * rng.normal(size=(1, 50))), 1)
    assert explained_variance(model)[0][0] == pytest.approx(1.0)


def test_model_invariants_and_reconstruction(panel_factory, rng):
    X = 0.01 * rng.normal(size=(6, 300)) + 0.01 * rng.normal(size=(6, 1))
    panel = panel_factory(X)
    model = fit_pca(panel, 6)
    P = model.loadings
    np.testing.assert_allclose(P.T @ P, np.eye(6), atol=1e-10)
    assert np.all(np.diff(model.eigenvalues) <= 0)
    scores = project_scores(model, panel).scores
    np.testing.assert_allclose(scores.var(axis=0, ddof=1), model.eigenvalues, rtol=1e-9)
    corr = np.corrcoef(scores.T)
    assert np.max(np.abs(corr - np.eye(6))) < 1e-6
    np.testing.assert_allclose(scores @ P.T + model.means, panel.returns.T, atol=1e-8)
    idx = np.argmax(np.abs(P), axis=0)
    assert np.all(P[idx, np.arange(6)] > 0)


def test_normalised_scores(panel_factory, rng):
    panel = panel_factory(0.01 * rng.normal(size=(4, 100)))
    s = project_scores(fit_pca(panel, 3), panel, normalize=True).scores
    np.testing.assert_allclose(s.mean(axis=0), 0, atol=1e-8)
    np.testing.assert_allclose(s.var(axis=0, ddof=1), 1, atol=1e-8)


def test_single_date_projection(panel_factory, rng):
    panel = panel_factory(0.01 * rng.normal(size=(3, 50)))
    model = fit_pca(panel, 2)
    one = panel_factory(panel.returns[:, :1], ids=list(panel.asset_ids))
    assert project_scores(model, one).scores.shape == (1, 2)


def test_errors(panel_factory, rng):
    panel = panel_factory(0.01 * rng.normal(size=(3, 50)))
    with pytest.raises(ValueError):
        fit_pca(panel, 4)
    with pytest.raises(ValueError):
        fit_pca(panel, 0)
    with pytest.raises(DataError):
        fit_pca(panel_factory(0.01 * rng.normal(size=(3, 1))), 1)
    with pytest.raises(DataError):
        project_scores(fit_pca(panel, 2), panel_factory(0.01 * rng.normal(size=(2, 50))))


def test_forecast_examples():
    F = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(forecast_portfolio_return(F, [0.5, 0.5]), [1.5, 3.5])
    np.testing.assert_array_equal(forecast_portfolio_return(F, [1, 0]), F[:, 0])
    np.testing.assert_array_equal(forecast_portfolio_return(F, [0, 0]), [0, 0])
    with pytest.raises(DataError):
        forecast_portfolio_return(F, [1, 0, 0])


def test_json_round_trip(panel_factory, rng):
    model = fit_pca(panel_factory(0.01 * rng.normal(size=(4, 80))), 2)
    back = FactorModel.from_json(model.to_json())
    np.testing.assert_array_equal(back.loadings, model.loadings)
    assert back.asset_ids == model.asset_ids


def test_factor_portfolio_panel(panel_factory, rng):
    panel = panel_factory(0.01 * rng.normal(size=(5, 60)))
    fp = factor_portfolio_panel(fit_pca(panel, 3), panel)
    assert fp.asset_ids == ("PC1", "PC2", "PC3") and fp.returns.shape == (3, 60)
    model = fit_pca(panel, 3)
    for k in range(3):
        w = model.loadings[:, k] / np.sum(np.abs(model.loadings[:, k]))
        np.testing.assert_allclose(fp.returns[k], [w @ panel.returns[:, t] for t in range(60)], atol=1e-15)


def test_factor_portfolio_panel_volatile_assets(panel_factory, rng):
    # 40% daily moves: raw eigenvector weights (gross ~4.5) would wipe out the portfolio
    panel = panel_factory(np.clip(0.4 * rng.normal(size=(20, 200)) + 0.3 * rng.normal(size=(1, 200)), -0.95, 3))
    fp = factor_portfolio_panel(fit_pca(panel, 5), panel)
    assert np.all(fp.returns > -1)


def test_sklearn_transformer(rng):
    X = rng.normal(size=(200, 5))
    est = PCAFactorModel(n_components=5, normalize=True).fit(X)
    Z = est.transform(X)
    np.testing.assert_allclose(Z.std(axis=0, ddof=1), 1, atol=1e-10)
    np.testing.assert_allclose(est.inverse_transform(Z), X, atol=1e-10)
    assert clone(est).get_params() == est.get_params()
