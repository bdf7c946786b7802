"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure, 1 anything else. Failures print one JSON object to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ._validation import DataError
from .pipeline import (
    STAGES,
    ConfigError,
    StageError,
    bundled_demo_config,
    load_config,
    run_pipeline,
    run_stage,
    substream,
)
from .report import build_report

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4


def _exit_code(exc):
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, ArithmeticError):
        return EXIT_NUMERIC
    if isinstance(exc, (DataError, FileNotFoundError, ValueError)):
        return EXIT_DATA
    return EXIT_OTHER


def _config(args):
    if args.config is None and args.demo:
        return load_config(raw=bundled_demo_config(), out_dir=args.out, seed=args.seed)
    if args.config is None:
        raise ConfigError("--config is required (or pass --demo)")
    return load_config(args.config, out_dir=args.out, seed=args.seed)


def _cmd_stage(args):
    cfg = _config(args)
    files = run_stage(cfg, args.verb)
    return {"stage": args.verb, "out": str(cfg.out_dir), "artifacts": files}


def _cmd_pipeline(args):
    cfg = _config(args)
    manifest = run_pipeline(cfg)
    return {"out": str(cfg.out_dir), "stages": [s["name"] for s in manifest["stages"]]}


def _cmd_report(args):
    if args.out is None:
        raise ConfigError("--out must point at a results directory")
    index = build_report(args.out)
    return {"report": str(Path(args.out) / "report"), "files": sorted(index)}


def _cmd_synthetic(args):
    from .synthetic import generate_panel, params_from_dict, write_factor_csv, write_prices_csv
    from .pipeline import _panel_to_csv, _synthetic_params

    if args.config is not None:
        cfg = load_config(args.config, out_dir=args.out, seed=args.seed)
        block, seed, out = cfg.blocks.get("synthetic", {"leg": "momentum"}), cfg.seed, cfg.out_dir
    else:
        block, seed = {"leg": "momentum"}, args.seed or 0
        out = Path(args.out or "synthetic")
    try:
        state, pricing, transition = params_from_dict(_synthetic_params(block))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"synthetic: {exc}") from exc
    out.mkdir(parents=True, exist_ok=True)
    data = generate_panel(state, pricing, transition, int(block.get("n_periods", 1000)),
                          int(block.get("n_assets", 20)), substream(seed, "synthetic"),
                          float(block.get("noise_std", 0.01)), variance_cap=block.get("variance_cap", 1e-2))
    write_prices_csv(out / "synthetic_prices.csv", data.prices)
    _panel_to_csv(out / "synthetic_returns.csv", data.returns)
    write_factor_csv(out / "synthetic_regimes.csv", data.returns.dates, data.factor)
    return {"out": str(out), "artifacts": ["synthetic_prices.csv", "synthetic_returns.csv", "synthetic_regimes.csv"]}


def build_parser():
    parser = argparse.ArgumentParser(prog="regime-momentum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    helps = {
        "ingest": "load prices, write returns and moment tables",
        "pca": "fit the factor model and write eigen-portfolio returns",
        "backtest": "run formation/holding backtests",
        "regimes": "estimate the regime path and transition matrix",
        "dp": "solve the allocation dynamic programme",
        "simulate": "simulate wealth under the solved policy",
        "frontier": "build scenario frontiers",
        "report": "assemble tables and plot data from a results directory",
        "synthetic": "generate a synthetic regime-driven price panel",
        "pipeline": "run every stage and write a manifest",
    }
    for verb, text in helps.items():
        p = sub.add_parser(verb, help=text)
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
        p.add_argument("--demo", action="store_true", help="use the bundled synthetic demo configuration")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {verb: _cmd_stage for verb in STAGES}
    handlers.update(pipeline=_cmd_pipeline, report=_cmd_report, synthetic=_cmd_synthetic)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {args.seed}")
        result = handlers[args.verb](args)
    except Exception as exc:  # every failure becomes a JSON error and an exit code
        stage = exc.stage if isinstance(exc, StageError) else None
        cause = exc.cause if isinstance(exc, StageError) else exc
        payload = {"error": type(cause).__name__, "message": str(cause), "verb": args.verb}
        if stage is not None:
            payload["stage"] = stage
        print(json.dumps(payload), file=sys.stderr)
        return _exit_code(cause)
    print(json.dumps(result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
