"""Run configuration and the seven pipeline stages.

Every stage reads its inputs from the output directory (or the configured
input files) and writes its artifacts back there, so each one can be rerun
on its own. Randomness for stage ``name`` comes from a substream derived
from the root seed and the stage name.
"""

from __future__ import annotations

import hashlib
import json
import warnings
import zlib
from dataclasses import dataclass
from importlib import metadata, resources
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from ._validation import DataError, NumericalError
from .data_model import (
    ReturnPanel,
    load_price_csv,
    load_regime_labels,
    summary_stats,
    to_arithmetic_returns,
)
from .dp_allocator import (
    RegimeAllocationModel,
    UtilitySpec,
    compare_leg_wealth,
    gauss_hermite_rule,
    grid_center,
    log_grid,
    policy_vs_constant_benchmarks,
    read_policy_csv,
    simulate_wealth,
    solve_bellman,
    write_policy_csv,
)
from .factor_engine import explained_variance, factor_portfolio_panel, fit_pca
from .fixtures import LEGS, allocation_model
from .frontier import build_scenarios, cvar_frontier, mv_frontier, rank_correlation_to_gaussian
from .momentum_engine import RebalanceSchedule, SelectionRule, run_backtest, scheme_comparison
from .regime_model import TransitionMatrix, estimate_transitions, hmm_fit
from .risk_metrics import RatioSpec, rolling_ratio
from .synthetic import generate_panel, params_from_dict, write_factor_csv, write_prices_csv
from .vol_models.garch import arma_garch_fit, arma_garch_filter
from .vol_models.nig import nig_fit_moments

SCHEMA_VERSION = 1
STAGES = ("ingest", "pca", "backtest", "regimes", "dp", "simulate", "frontier")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class StageError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


DEFAULTS = {
    "inputs": {},
    "ingest": {"missing": "drop-row", "assets": None},
    "pca": {"n_components": 5, "use_correlation": False},
    "backtest": {
        "universe": "factors",
        "schedules": [[10, 10], [15, 10], [20, 10]],
        "rules": [{"kind": "starr", "level_gamma": 0.99}, {"kind": "sharpe"}],
        "quantile": 0.25,
        "turnover_cap": 0.04,
        "cost_bps": 0.0,
        "rolling_window": 252,
    },
    "regimes": {"source": "hmm"},
    "dp": {"leg": "momentum", "transition": "fixture", "gamma": -5.0, "risk_free": 0.0,
           "horizon": 504, "n_h": 200, "n_quad": 41, "pi_search": 101},
    "simulate": {"n_paths": 2000, "constants": [0.0, 0.25, 0.5, 0.75, 1.0], "compare_legs": True},
    "frontier": {"max_assets": 5, "n_scenarios": 10000, "n_points": 50, "levels": [0.95, 0.99], "risk_free": 0.0},
}


def substream(seed, name):
    """Generator for stage ``name`` derived from the root seed."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))


@dataclass
class RunConfig:
    blocks: dict
    seed: int
    base_dir: Path
    out_dir: Path

    def block(self, name):
        return self.blocks[name]

    def input_path(self, key):
        value = self.blocks["inputs"].get(key)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p


def _merge(defaults, given):
    out = {}
    for key, val in defaults.items():
        if isinstance(val, dict):
            sub = given.get(key, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"config block {key!r} must be an object")
            merged = dict(val)
            merged.update(sub)
            out[key] = merged
        else:
            out[key] = given.get(key, val)
    for key in given:
        if key not in out:
            out[key] = given[key]
    return out


def bundled_demo_config():
    return json.loads(resources.files(__package__).joinpath("data", "demo_config.json").read_text())


def load_config(path=None, out_dir=None, seed=None, raw=None):
    """Parse and validate a run configuration.

    ``raw`` bypasses the file read (used for the bundled demo). Command-line
    ``seed`` and ``out_dir`` override the file.
    """
    if raw is None:
        if path is None:
            raise ConfigError("no configuration given")
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        base = p.parent
    else:
        base = Path.cwd()
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {raw.get('schema_version')!r}; expected {SCHEMA_VERSION}")
    blocks = _merge(DEFAULTS, raw)
    root_seed = seed if seed is not None else raw.get("seed", 0)
    if not isinstance(root_seed, int) or root_seed < 0 or root_seed >= 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {root_seed!r}")
    out = Path(out_dir if out_dir is not None else raw.get("output_dir", "artifacts"))
    if not out.is_absolute():
        out = (base if out_dir is None else Path.cwd()) / out
    cfg = RunConfig(blocks, root_seed, base, out)
    validate(cfg)
    return cfg


def _rules(block):
    q = float(block["quantile"])
    try:
        return [SelectionRule(RatioSpec.from_dict(r), q) for r in block["rules"]]
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"backtest.rules: {exc}") from exc


def _schedules(block):
    try:
        return [RebalanceSchedule(int(f), int(h)) for f, h in block["schedules"]]
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"backtest.schedules: {exc}") from exc


def validate(cfg):
    """Check every block against module invariants before any computation."""
    b = cfg.blocks
    prices = cfg.input_path("prices")
    if prices is None and "synthetic" not in b:
        raise ConfigError("config needs inputs.prices or a synthetic block")
    if prices is not None and not prices.is_file():
        raise ConfigError(f"input file not found: {prices}")
    labels = cfg.input_path("regimes")
    if labels is not None and not labels.is_file():
        raise ConfigError(f"input file not found: {labels}")
    if "synthetic" in b:
        try:
            params_from_dict(_synthetic_params(b["synthetic"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"synthetic: {exc}") from exc
    if b["ingest"]["missing"] not in ("drop-row", "forward-fill"):
        raise ConfigError("ingest.missing must be 'drop-row' or 'forward-fill'")
    if int(b["pca"]["n_components"]) < 1:
        raise ConfigError("pca.n_components must be positive")
    bt = b["backtest"]
    if bt["universe"] not in ("factors", "assets"):
        raise ConfigError("backtest.universe must be 'factors' or 'assets'")
    _rules(bt)
    _schedules(bt)
    if float(bt["turnover_cap"]) < 0 or float(bt["cost_bps"]) < 0:
        raise ConfigError("backtest.turnover_cap and cost_bps must be non-negative")
    if b["regimes"]["source"] not in ("hmm", "labels"):
        raise ConfigError("regimes.source must be 'hmm' or 'labels'")
    if b["regimes"]["source"] == "labels" and labels is None:
        raise ConfigError("regimes.source='labels' requires inputs.regimes")
    dp = b["dp"]
    if dp["leg"] not in LEGS:
        raise ConfigError(f"dp.leg must be one of {LEGS}")
    if dp["transition"] not in ("fixture", "estimated"):
        raise ConfigError("dp.transition must be 'fixture' or 'estimated'")
    try:
        UtilitySpec(float(dp["gamma"]), float(dp["risk_free"]))
    except ValueError as exc:
        raise ConfigError(f"dp: {exc}") from exc
    for key in ("horizon", "n_h", "n_quad", "pi_search"):
        if int(dp[key]) < (3 if key == "pi_search" else 1):
            raise ConfigError(f"dp.{key} is too small")
    if int(b["simulate"]["n_paths"]) < 2:
        raise ConfigError("simulate.n_paths must be at least 2")
    fr = b["frontier"]
    if int(fr["n_scenarios"]) < 100:
        raise ConfigError("frontier.n_scenarios must be at least 100")
    if any(not 0.5 <= float(lv) < 1 for lv in fr["levels"]):
        raise ConfigError("frontier.levels must lie in [0.5, 1)")


def _synthetic_params(block):
    leg = block.get("leg")
    base = {}
    if leg is not None:
        m = allocation_model(leg)
        base = {"omega": m.state.omega, "alpha": m.state.alpha, "beta": m.state.beta,
                "lambda0": m.pricing.lambda0, "lambda1": m.pricing.lambda1,
                "transition": m.transition.p.tolist()}
    base.update({k: v for k, v in block.items() if k in ("omega", "alpha", "beta", "leverage", "floor",
                                                           "lambda0", "lambda1", "transition")})
    return base


# --------------------------------------------------------------------------
# artifact helpers


def _write_frame(path, frame):
    frame.to_csv(path, index=False, lineterminator="\n")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _panel_to_csv(path, panel):
    frame = pd.DataFrame(panel.returns.T, columns=panel.asset_ids)
    frame.insert(0, "date", [str(d)[:10] for d in panel.dates])
    _write_frame(path, frame)


def _panel_from_csv(path):
    if not Path(path).is_file():
        raise DataError(f"missing artifact: {path}")
    frame = pd.read_csv(path)
    dates = pd.to_datetime(frame["date"], format="ISO8601").values
    return ReturnPanel(dates, frame.drop(columns="date").to_numpy(dtype=float).T, tuple(frame.columns[1:]))


def _require(path):
    if not Path(path).is_file():
        raise DataError(f"missing artifact: {path}")
    return Path(path)


# --------------------------------------------------------------------------
# stages


def stage_ingest(cfg):
    out = cfg.out_dir
    prices_path = cfg.input_path("prices")
    written = []
    if prices_path is None:
        syn = cfg.block("synthetic")
        state, pricing, transition = params_from_dict(_synthetic_params(syn))
        data = generate_panel(
            state, pricing, transition,
            n_periods=int(syn.get("n_periods", 1000)), n_assets=int(syn.get("n_assets", 20)),
            seed=substream(cfg.seed, "synthetic"), noise_std=float(syn.get("noise_std", 0.01)),
            variance_cap=syn.get("variance_cap", 1e-2),
        )
        prices_path = out / "synthetic_prices.csv"
        write_prices_csv(prices_path, data.prices)
        write_factor_csv(out / "synthetic_regimes.csv", data.returns.dates, data.factor)
        written += ["synthetic_prices.csv", "synthetic_regimes.csv"]
    ing = cfg.block("ingest")
    prices = load_price_csv(prices_path, assets=ing.get("assets"), missing=ing["missing"])
    returns = to_arithmetic_returns(prices)
    _panel_to_csv(out / "returns.csv", returns)
    rows = []
    for i, asset in enumerate(returns.asset_ids):
        s = summary_stats(returns.returns[i])
        rows.append({"series": asset, "Mean": s.mean, "Std. Dev.": s.std_dev, "Skewness": s.skewness, "Kurtosis": s.kurtosis})
    _write_frame(out / "summary.csv", pd.DataFrame(rows))
    return written + ["returns.csv", "summary.csv"]


def stage_pca(cfg):
    out = cfg.out_dir
    panel = _panel_from_csv(out / "returns.csv")
    blk = cfg.block("pca")
    k = min(int(blk["n_components"]), panel.n_assets)
    model = fit_pca(panel, k, use_correlation=bool(blk["use_correlation"]))
    (out / "factor_model.json").write_text(model.to_json())
    shares, cum = explained_variance(model)
    _write_frame(out / "explained_variance.csv", pd.DataFrame({
        "component": [f"PC{i + 1}" for i in range(k)],
        "eigenvalue": model.eigenvalues, "share": shares, "cumulative": cum,
    }))
    _panel_to_csv(out / "factor_returns.csv", factor_portfolio_panel(model, panel))
    return ["factor_model.json", "explained_variance.csv", "factor_returns.csv"]


def _universe(cfg):
    name = "factor_returns.csv" if cfg.block("backtest")["universe"] == "factors" else "returns.csv"
    return _panel_from_csv(cfg.out_dir / name)


def stage_backtest(cfg):
    out = cfg.out_dir
    blk = cfg.block("backtest")
    panel = _universe(cfg)
    rules, schedules = _rules(blk), _schedules(blk)
    cap, cost = float(blk["turnover_cap"]), float(blk["cost_bps"])
    table = scheme_comparison(panel, schedules, rules, cap, cost)
    _write_frame(out / "scheme_comparison.csv", table)
    written = ["scheme_comparison.csv"]
    primary = run_backtest(panel, schedules[0], rules[0], cap, cost)
    primary.write_csv(out / "backtest_wealth.csv")
    (out / "backtest_trades.json").write_text(primary.to_json() + "\n")
    written += ["backtest_wealth.csv", "backtest_trades.json"]

    legs = pd.DataFrame({
        "date": [str(d)[:10] for d in primary.dates[1:]],
        "winners": np.diff(primary.wealth_winners) / primary.wealth_winners[:-1],
        "losers": np.diff(primary.wealth_losers) / primary.wealth_losers[:-1],
        "spread": np.diff(primary.wealth_spread),
    })
    _write_frame(out / "leg_returns.csv", legs)
    written.append("leg_returns.csv")

    window = int(blk["rolling_window"])
    spread = legs["spread"].to_numpy()
    if spread.size >= window:
        cols = {}
        ends = None
        for rule in rules:
            ends, scores = rolling_ratio(spread, rule.spec, window, dates=legs["date"].to_numpy())
            cols[rule.spec.label] = scores
        frame = pd.DataFrame(cols)
        frame.insert(0, "date", ends)
        _write_frame(out / "rolling_ratios.csv", frame.replace([np.inf, -np.inf], np.nan))
        written.append("rolling_ratios.csv")
    return written


def stage_regimes(cfg):
    out = cfg.out_dir
    blk = cfg.block("regimes")
    legs = pd.read_csv(_require(out / "leg_returns.csv"))
    info = {"source": blk["source"]}
    if blk["source"] == "labels":
        dates, states = load_regime_labels(cfg.input_path("regimes"))
        prob = states.astype(float)
    else:
        x = legs["spread"].to_numpy(dtype=float)
        res = hmm_fit(x)
        states, prob = res.viterbi.states, res.smoothed[:, 1]
        dates = legs["date"].to_numpy()
        info.update(means=res.means, variances=res.variances, hmm_transition=res.transition.p,
                    converged=res.converged, identifiable=res.identifiable, loglik=res.loglik)
    tm = estimate_transitions(states, smoothing=True)
    info["transition"] = tm.p
    _write_frame(out / "regimes.csv", pd.DataFrame({"date": [str(d)[:10] for d in dates], "state": states, "p_state1": prob}))
    _write_json(out / "transition.json", info)
    return ["regimes.csv", "transition.json"]


def _dp_model(cfg):
    blk = cfg.block("dp")
    base = allocation_model(blk["leg"], float(blk["gamma"]), float(blk["risk_free"]))
    if blk["transition"] == "estimated":
        info = json.loads(_require(cfg.out_dir / "transition.json").read_text())
        base = RegimeAllocationModel(base.state, base.pricing, TransitionMatrix(np.asarray(info["transition"])), base.utility)
    return base


def stage_dp(cfg):
    out = cfg.out_dir
    blk = cfg.block("dp")
    model = _dp_model(cfg)
    grid = log_grid(grid_center(model.state), int(blk["n_h"]))
    sol = solve_bellman(model, grid, int(blk["horizon"]), gauss_hermite_rule(int(blk["n_quad"])), int(blk["pi_search"]))
    write_policy_csv(out / "policy.csv", sol)
    _write_json(out / "policy_meta.json", sol.metadata())
    return ["policy.csv", "policy_meta.json"]


def stage_simulate(cfg):
    out = cfg.out_dir
    blk = cfg.block("simulate")
    meta = json.loads(_require(out / "policy_meta.json").read_text())
    model = RegimeAllocationModel.from_dict(meta["model"])
    policy, _ = read_policy_csv(_require(out / "policy.csv"))
    rng = substream(cfg.seed, "simulate")
    seeds = rng.integers(0, 2**63, size=3)
    n_paths = int(blk["n_paths"])
    ens = simulate_wealth(model, policy, 1.0, None, 0, n_paths, int(seeds[0]))
    qs = ens.quantile_paths()
    _write_frame(out / "wealth_quantiles.csv", pd.DataFrame(
        {"t": np.arange(policy.horizon + 1), **{f"q{int(round(100 * q)):02d}": v for q, v in qs.items()}}))
    arms = policy_vs_constant_benchmarks(model, policy, tuple(blk["constants"]), n_paths, int(seeds[1]))
    _write_frame(out / "benchmarks.csv", pd.DataFrame([{
        "arm": a.label, "mean_utility": a.mean_utility, "std_error": a.std_error,
        "diff_vs_policy": a.diff_vs_policy, "diff_std_error": a.diff_std_error, "dominated": a.dominated,
    } for a in arms]))
    summary = ens.summary()
    written = ["wealth_quantiles.csv", "benchmarks.csv"]
    if blk.get("compare_legs", True):
        dp = cfg.block("dp")
        models = {leg: allocation_model(leg, float(dp["gamma"]), float(dp["risk_free"])) for leg in LEGS}
        legs = compare_leg_wealth(models, policy.horizon, n_paths, int(seeds[2]), int(dp["n_h"]),
                                  quad=gauss_hermite_rule(int(dp["n_quad"])))
        cols = {"t": np.arange(policy.horizon + 1)}
        for leg, rec in legs["legs"].items():
            for q, path in rec["quantiles"].items():
                cols[f"{leg}_q{int(round(100 * float(q))):02d}"] = path
        _write_frame(out / "wealth_legs.csv", pd.DataFrame(cols))
        summary["legs"] = {k: v["summary"] for k, v in legs["legs"].items()}
        summary["momentum_outperforms"] = legs["momentum_outperforms"]
        written.append("wealth_legs.csv")
    _write_json(out / "wealth_summary.json", summary)
    return written + ["wealth_summary.json"]


def _scenario_inputs(panel, max_assets):
    params, resid = [], []
    for i in range(min(max_assets, panel.n_assets)):
        x = panel.returns[i]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            arma, _ = arma_garch_fit(x)
            eps, h = arma_garch_filter(x, arma)
        z = eps / np.sqrt(h)
        try:
            nig = nig_fit_moments(z)
        except (DataError, ValueError):
            nig = None
        params.append((arma, nig))
        resid.append(z)
    return params, np.column_stack(resid)


def stage_frontier(cfg):
    out = cfg.out_dir
    blk = cfg.block("frontier")
    panel = _universe(cfg)
    params, resid = _scenario_inputs(panel, int(blk["max_assets"]))
    ids = panel.asset_ids[: len(params)]
    corr = rank_correlation_to_gaussian(resid)
    sc = build_scenarios(params, int(blk["n_scenarios"]), substream(cfg.seed, "frontier"), corr, asset_ids=ids)
    rf = float(blk["risk_free"])
    n_points = int(blk["n_points"])
    written = []
    mv = mv_frontier(sc, n_points, rf)
    mv.write_csv(out / "frontier_mv.csv", ids)
    written.append("frontier_mv.csv")
    for level in blk["levels"]:
        curve = cvar_frontier(sc, float(level), n_points, rf)
        name = f"frontier_cvar{int(round(100 * float(level)))}.csv"
        curve.write_csv(out / name, ids)
        written.append(name)
    _write_json(out / "scenario_params.json", {
        "assets": list(ids),
        "arma_garch": [p[0].to_dict() for p in params],
        "nig": [p[1].to_dict() if p[1] is not None else None for p in params],
        "copula_correlation": corr,
        "ridge": mv.flags.get("ridge"),
    })
    return written + ["scenario_params.json"]


STAGE_FUNCS = {
    "ingest": stage_ingest, "pca": stage_pca, "backtest": stage_backtest, "regimes": stage_regimes,
    "dp": stage_dp, "simulate": stage_simulate, "frontier": stage_frontier,
}


def run_stage(cfg, name):
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return STAGE_FUNCS[name](cfg)
    except (ConfigError, StageError):
        raise
    except (DataError, NumericalError, ValueError, ArithmeticError, OSError) as exc:
        raise StageError(name, exc) from exc


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _versions():
    out = {"regime_momentum": __version__}
    for pkg in ("numpy", "scipy", "pandas", "scikit-learn"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def run_pipeline(cfg):
    """Run all stages in order and write ``manifest.json``; returns the manifest."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    inputs = {}
    for key in ("prices", "regimes"):
        p = cfg.input_path(key)
        if p is not None:
            inputs[key] = _sha256(p)
    stages = []
    for name in STAGES:
        files = run_stage(cfg, name)
        stages.append({"name": name, "artifacts": {f: _sha256(cfg.out_dir / f) for f in files}})
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "config_sha256": hashlib.sha256(json.dumps(cfg.blocks, sort_keys=True, default=str).encode()).hexdigest(),
        "inputs_sha256": inputs,
        "stages": stages,
        "versions": _versions(),
    }
    _write_json(cfg.out_dir / "manifest.json", manifest)
    return manifest
