"""Bundled parameter sets for the three momentum legs and their regime chains."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import numpy as np

from .dp_allocator import RegimeAllocationModel, UtilitySpec
from .regime_model import RegimePricing, TransitionMatrix
from .vol_models.figarch import ArfimaFigarchParams
from .vol_models.gjr import GjrStateParams

LEGS = ("winners", "losers", "momentum")


@lru_cache(maxsize=None)
def _load(name):
    return json.loads(resources.files(__package__).joinpath("data", name).read_text())


def leg_parameters(leg):
    """Raw fitted parameters for ``leg`` as a dict."""
    if leg not in LEGS:
        raise KeyError(f"unknown leg {leg!r}; expected one of {LEGS}")
    return dict(_load("leg_parameters.json")[leg])


def transition_matrix(leg):
    if leg not in LEGS:
        raise KeyError(f"unknown leg {leg!r}; expected one of {LEGS}")
    return TransitionMatrix(np.asarray(_load("transitions.json")[leg], dtype=float))


def figarch_params(leg, truncation_lag=1000):
    p = leg_parameters(leg)
    keys = ("mu", "ar", "ma", "d_mean", "omega", "alpha", "beta", "d_vol")
    return ArfimaFigarchParams(truncation_lag=truncation_lag, **{k: p[k] for k in keys})


def state_params(leg, leverage=0.0):
    """One-step variance recursion for ``leg``.

    A negative ``beta`` (winners) gets a floor at ``omega``, the smallest
    value the recursion reaches when ``beta >= 0``.
    """
    p = leg_parameters(leg)
    floor = p["omega"] if p["beta"] < 0 else 0.0
    return GjrStateParams(p["omega"], p["beta"], p["alpha"], leverage, floor)


def pricing(leg):
    p = leg_parameters(leg)
    return RegimePricing(p["lambda0"], p["lambda1"])


def allocation_model(leg, gamma=-5.0, risk_free=0.0, leverage=0.0):
    return RegimeAllocationModel(
        state_params(leg, leverage), pricing(leg), transition_matrix(leg), UtilitySpec(gamma, risk_free)
    )
