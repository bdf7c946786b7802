"""Report tables and plot-ready series assembled from pipeline artifacts."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pandas as pd

from ._validation import DataError
from .momentum_engine import BEST_MARKER

MOMENT_COLUMNS = ["series", "Mean", "Std. Dev.", "Skewness", "Kurtosis"]
WEALTH_COLUMNS = ["rule", "scheme", "winners", "losers", "spread", "benchmark", "best"]

# artifact -> report file (copied verbatim)
PASSTHROUGH = {
    "rolling_ratios.csv": "rolling_ratios.csv",
    "wealth_quantiles.csv": "wealth_paths_policy.csv",
    "wealth_legs.csv": "wealth_paths_legs.csv",
    "frontier_mv.csv": "frontier_mv.csv",
    "frontier_cvar95.csv": "frontier_cvar95.csv",
    "frontier_cvar99.csv": "frontier_cvar99.csv",
}
REQUIRED = ("summary.csv", "scheme_comparison.csv", "wealth_quantiles.csv", "frontier_mv.csv")


def final_wealth_table(comparison):
    """Pivot the scheme comparison to one row per (rule, scheme) with the dagger column."""
    wide = comparison.pivot_table(index=["rule", "scheme"], columns="leg", values="final_wealth", sort=False)
    wide = wide.reset_index()
    best = comparison[comparison["best"] == BEST_MARKER][["rule", "scheme"]]
    marks = set(map(tuple, best.to_numpy()))
    wide["best"] = [BEST_MARKER if (r, s) in marks else "" for r, s in zip(wide["rule"], wide["scheme"])]
    return wide[WEALTH_COLUMNS]


def moments_table(comparison):
    """Per-scheme moments of holding-period returns by leg."""
    cols = ["rule", "scheme", "leg", "mean", "std_dev", "skewness", "kurtosis"]
    return comparison[cols]


def build_report(results_dir, report_dir=None):
    """Write the report tables into ``results_dir/report`` and return an index dict."""
    src = Path(results_dir)
    dst = Path(report_dir) if report_dir is not None else src / "report"
    for name in REQUIRED:
        if not (src / name).is_file():
            raise DataError(f"missing artifact: {src / name}")
    dst.mkdir(parents=True, exist_ok=True)
    written = {}

    summary = pd.read_csv(src / "summary.csv")
    summary[MOMENT_COLUMNS].to_csv(dst / "table_asset_moments.csv", index=False, lineterminator="\n")
    written["table_asset_moments.csv"] = MOMENT_COLUMNS

    comparison = pd.read_csv(src / "scheme_comparison.csv", keep_default_na=False)
    fw = final_wealth_table(comparison)
    fw.to_csv(dst / "table_final_wealth.csv", index=False, lineterminator="\n")
    written["table_final_wealth.csv"] = WEALTH_COLUMNS
    mt = moments_table(comparison)
    mt.to_csv(dst / "table_holding_moments.csv", index=False, lineterminator="\n")
    written["table_holding_moments.csv"] = list(mt.columns)

    for name, target in PASSTHROUGH.items():
        if (src / name).is_file():
            shutil.copyfile(src / name, dst / target)
            written[target] = list(pd.read_csv(dst / target, nrows=0).columns)

    index = {
        name: {"columns": cols, "rows": int(len(pd.read_csv(dst / name, keep_default_na=False)))}
        for name, cols in sorted(written.items())
    }
    (dst / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
    return index
