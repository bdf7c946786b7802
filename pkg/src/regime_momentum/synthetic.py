"""Synthetic regime-driven return panels for demos and fixtures.

A single common factor follows ``r_t = lambda(D_t) h_t + sqrt(h_t) z_t`` with
``h`` driven by the one-step variance recursion and ``D`` by a two-state
chain. Each asset loads on the factor and adds Gaussian idiosyncratic noise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ._validation import as_rng, check_positive_int, check_state
from .data_model import PricePanel, ReturnPanel, compound_prices
from .regime_model import RegimePricing, TransitionMatrix, price_of_risk, simulate_chain
from .vol_models.gjr import GjrStateParams, gjr_state_step


@dataclass
class FactorPath:
    returns: np.ndarray
    variances: np.ndarray
    states: np.ndarray


def simulate_factor(state, pricing, transition, n, seed=None, d0=0, h0=None, variance_cap=1e-2):
    """Regime path, variance path and factor returns of length ``n``.

    ``variance_cap`` bounds ``h`` so explosive parameter sets still yield
    usable demo data; ``None`` disables it.
    """
    n = check_positive_int(n, "n")
    rng = as_rng(seed)
    states = simulate_chain(transition, check_state(d0, "d0"), n, rng).states
    z = rng.standard_normal(n)
    h = np.empty(n)
    h[0] = h0 if h0 is not None else (state.unconditional_variance() or state.omega / max(1e-12, 1.0 - max(state.beta, 0.0)))
    for t in range(1, n):
        nxt = gjr_state_step(h[t - 1], z[t - 1], state)
        h[t] = nxt if variance_cap is None else min(nxt, variance_cap)
    lam = np.where(states == 1, price_of_risk(pricing, 1), price_of_risk(pricing, 0))
    r = lam * h + np.sqrt(h) * z
    return FactorPath(r, h, states)


@dataclass
class SyntheticData:
    prices: PricePanel
    returns: ReturnPanel
    factor: FactorPath
    loadings: np.ndarray


def generate_panel(state, pricing, transition, n_periods=1000, n_assets=20, seed=None, noise_std=0.01,
                   loading_range=(0.5, 1.5), start="2020-01-01", variance_cap=1e-2):
    """Price panel of ``n_assets`` driven by one regime-switching factor.

    Asset returns are ``b_i r_t + noise_std * e_it``, floored just above
    ``-1`` so prices stay positive.
    """
    n_assets = check_positive_int(n_assets, "n_assets")
    rng = as_rng(seed)
    factor = simulate_factor(state, pricing, transition, n_periods, rng, variance_cap=variance_cap)
    loadings = rng.uniform(*loading_range, size=n_assets)
    noise = noise_std * rng.standard_normal((n_assets, n_periods))
    R = np.maximum(loadings[:, None] * factor.returns[None, :] + noise, -0.99)
    dates = pd.bdate_range(start, periods=n_periods + 1).values.astype("datetime64[D]")
    prices = compound_prices(R, np.full(n_assets, 100.0))
    ids = tuple(f"A{i:02d}" for i in range(n_assets))
    return SyntheticData(PricePanel(dates, prices, ids), ReturnPanel(dates[1:], R, ids), factor, loadings)


def write_prices_csv(path, panel):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("date",) + tuple(panel.asset_ids))
        for j, date in enumerate(panel.dates):
            writer.writerow((str(date)[:10],) + tuple(repr(float(v)) for v in panel.prices[:, j]))


def write_factor_csv(path, dates, factor):
    """``date, state, variance, return`` rows; doubles as a regime-label file."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("date", "state", "variance", "return"))
        for date, d, h, r in zip(dates, factor.states, factor.variances, factor.returns):
            writer.writerow((str(date)[:10], int(d), repr(float(h)), repr(float(r))))


def params_from_dict(d):
    """``(GjrStateParams, RegimePricing, TransitionMatrix)`` from a flat config block."""
    beta = float(d["beta"])
    floor = float(d.get("floor", d["omega"] if beta < 0 else 0.0))
    state = GjrStateParams(float(d["omega"]), beta, float(d["alpha"]), float(d.get("leverage", 0.0)), floor)
    pricing = RegimePricing(float(d["lambda0"]), float(d["lambda1"]))
    transition = TransitionMatrix(np.asarray(d["transition"], dtype=float))
    return state, pricing, transition


def stationary_share(states):
    return float(np.mean(np.asarray(states) == 1))
