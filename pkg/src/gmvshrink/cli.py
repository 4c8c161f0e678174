"""``gmvshrink`` command-line entry point.

Subcommands: ``estimate``, ``simulate``, ``backtest``, ``curves``.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
degeneracy. Failures print a JSON object to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import curves
from .backtest import BACKTEST_ESTIMATORS, BacktestConfig, run_backtest
from .errors import ConfigurationError, GMVError
from .estimators import TargetPortfolio, bona_fide_shrinkage
from .io import (
    config_hash,
    file_sha256,
    load_config,
    provenance,
    read_returns_csv,
    write_csv,
    write_json,
)
from .simulation import SimulationConfig, run_monte_carlo

log = logging.getLogger("gmvshrink")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigurationError(f"expected a comma-separated list of numbers, got {text!r}") from None


def parse_c_grid(spec: str) -> list[float]:
    """Comma-separated values and/or ``start:stop:count`` ranges (inclusive)."""
    grid = []
    for piece in spec.split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            if ":" in piece:
                start, stop, count = piece.split(":")
                grid.extend(np.linspace(float(start), float(stop), int(count)).tolist())
            else:
                grid.append(float(piece))
        except ValueError:
            raise ConfigurationError(f"bad c-grid element {piece!r}") from None
    if not grid:
        raise ConfigurationError("empty c-grid")
    if any(c == 1.0 for c in grid):
        raise ConfigurationError("c-grid must exclude c = 1 (singular point)")
    if any(c <= 0 for c in grid):
        raise ConfigurationError("c-grid values must be positive")
    return grid


def _parse_target(spec: str | None, p: int) -> TargetPortfolio:
    if spec is None or spec == "naive":
        return TargetPortfolio.naive(p)
    weights = _float_list(spec)
    if len(weights) != p:
        raise ConfigurationError(f"--target has {len(weights)} weights but the data has {p} assets")
    return TargetPortfolio(np.array(weights), "custom")


def _write_manifest(args, out: Path, cfg_hash: str, extra=None):
    manifest = {
        "command": args.command,
        "config_path": str(args.config) if args.config else None,
        "output_dir": str(out),
        "seed": args.seed,
        "version": __version__,
        "config_hash": cfg_hash,
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _output_dir(args) -> Path:
    out = Path(args.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out}: {exc}") from exc
    return out


def cmd_estimate(args) -> int:
    assets, _, Y = read_returns_csv(args.returns_csv)
    target = _parse_target(args.target, len(assets))
    est = bona_fide_shrinkage(Y, target)
    cfg = {"returns_sha256": file_sha256(args.returns_csv), "target": target.weights.tolist()}
    h = config_hash(cfg)
    meta = provenance(args.seed, h)
    out = _output_dir(args)
    p, n = Y.shape
    payload = {"assets": assets, "p": p, "n": n, **est.as_dict()}
    write_json(out / "estimate.json", meta, payload)
    rows = zip(assets, est.weights, est.traditional, target.weights)
    write_csv(out / "weights.csv", meta, ["asset", "weight", "traditional", "target"], rows)
    _write_manifest(args, out, h)
    print(json.dumps({k: payload[k] for k in ("alpha_hat", "r_hat_b", "c_ratio", "regime")}))
    return 0


def _require_seed(args, cfg: dict):
    if args.seed is not None:
        cfg["seed"] = args.seed
    if cfg.get("seed") is None:
        raise ConfigurationError(f"{args.command} needs --seed (or 'seed' in the config file)")
    args.seed = int(cfg["seed"])


def cmd_simulate(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    for key in ("scenario", "distribution", "repetitions", "target"):
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    if args.c is not None:
        cfg["c_target"] = args.c
    if args.estimators:
        cfg["estimators"] = args.estimators.split(",")
    if args.p_schedule:
        pairs = []
        for item in args.p_schedule.split(","):
            try:
                p, n = item.split("x")
                pairs.append([int(p), int(n)])
            except ValueError:
                raise ConfigurationError(f"bad --p-schedule item {item!r}; use PxN") from None
        cfg["p_schedule"] = pairs
    _require_seed(args, cfg)
    config = SimulationConfig.from_dict(cfg)
    cfg_dict = config.as_dict()
    h = config_hash(cfg_dict)
    out = _output_dir(args)
    report = run_monte_carlo(config, threads=args.threads)
    meta = provenance(config.seed, h)
    for cell in report.cells:
        tag = f"p{cell.p}_n{cell.n}"
        cell_meta = {**meta, "p": cell.p, "n": cell.n}
        write_csv(
            out / f"losses_{tag}.csv",
            cell_meta,
            ["estimator", "repetition", "relative_loss"],
            ((est, r, x) for est in config.estimators for r, x in enumerate(cell.losses[est])),
        )
        write_csv(
            out / f"ecdf_{tag}.csv",
            cell_meta,
            ["estimator", "loss_value", "cdf"],
            ((est, v, F) for est in config.estimators for v, F in cell.ecdf(est).points()),
        )
    write_csv(out / "summary.csv", meta, ["estimator", "p", "n", "mean_loss"], report.summary_rows())
    _write_manifest(args, out, h, {"config": cfg_dict})
    for est, p, n, m in report.summary_rows():
        print(f"{est:>18s} p={p:<4d} n={n:<5d} mean relative loss {m:.4f}")
    return 0


def cmd_backtest(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    for key in ("window_n", "portfolio_p", "num_portfolios"):
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    if args.estimators:
        cfg["estimators"] = args.estimators.split(",")
    _require_seed(args, cfg)
    for key in ("window_n", "portfolio_p"):
        if key not in cfg:
            raise ConfigurationError(f"backtest needs {key} (flag or config key)")
    config = BacktestConfig.from_dict(cfg)
    assets, dates, R = read_returns_csv(args.returns_csv)
    cfg_dict = {**config.as_dict(), "returns_sha256": file_sha256(args.returns_csv)}
    h = config_hash(cfg_dict)
    out = _output_dir(args)
    report = run_backtest(R, config, threads=args.threads)
    meta = provenance(config.seed, h)
    if dates:
        meta["oos_first_date"] = dates[config.window_n]
        meta["oos_last_date"] = dates[-1]
    for metric in ("oos_variance", "oos_sharpe"):
        values = getattr(report, metric)
        write_csv(
            out / f"{metric}.csv",
            meta,
            ["estimator", "draw_index", "value"],
            ((est, d, x) for est in config.estimators for d, x in enumerate(values[est])),
        )
        write_csv(
            out / f"ecdf_{metric}.csv",
            meta,
            ["estimator", "value", "cdf"],
            ((est, v, F) for est in config.estimators for v, F in report.ecdf(metric, est).points()),
        )
    write_csv(
        out / "draws.csv",
        meta,
        ["draw_index", "assets"],
        ((d, " ".join(assets[i] for i in idx)) for d, idx in enumerate(report.draws)),
    )
    _write_manifest(args, out, h, {"config": cfg_dict})
    for est in config.estimators:
        v = report.oos_variance[est]
        s = report.oos_sharpe[est]
        print(f"{est:>14s} median oos variance {np.median(v):.6g}  median Sharpe {np.nanmedian(s):.4f}")
    return 0


def cmd_curves(args) -> int:
    grid = parse_c_grid(args.c_grid)
    rows = curves(grid, args.r_b)
    cfg = {"c_grid": grid, "r_b": args.r_b}
    h = config_hash(cfg)
    out = _output_dir(args)
    cols = ["c", "alpha", "rel_loss_traditional", "rel_loss_gse", "variance_ratio"]
    write_csv(out / "curves.csv", provenance(args.seed, h), cols, ([r[c] for c in cols] for r in rows))
    _write_manifest(args, out, h)
    print(",".join(cols))
    for r in rows:
        print(",".join(f"{r[c]:.6g}" for c in cols))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="64-bit RNG seed (required for simulate/backtest)")
    common.add_argument("--output-dir", default=".", help="directory for output files")
    common.add_argument("--threads", type=int, default=1, help="worker threads (0 = auto)")
    common.add_argument("--config", default=None, help="YAML/JSON configuration file")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gmvshrink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common], help="bona fide shrinkage weights for a returns CSV")
    p.add_argument("returns_csv")
    p.add_argument("--target", default=None, help="'naive' (default) or comma-separated weights summing to 1")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo study of estimator losses")
    p.add_argument("--scenario", default=None)
    p.add_argument("--c", type=float, default=None, help="target concentration ratio p/n")
    p.add_argument("--p-schedule", default=None, help="comma-separated PxN pairs, e.g. 9x18,18x36")
    p.add_argument("--distribution", default=None, help="gaussian or student_t(DF)")
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--estimators", default=None)
    p.add_argument("--target", default=None, help="naive or gmv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("backtest", parents=[common], help="rolling-window backtest on a returns CSV")
    p.add_argument("returns_csv")
    p.add_argument("--window-n", dest="window_n", type=int, default=None)
    p.add_argument("--portfolio-p", dest="portfolio_p", type=int, default=None)
    p.add_argument("--num-portfolios", dest="num_portfolios", type=int, default=None)
    p.add_argument("--estimators", default=None, help=f"subset of {','.join(BACKTEST_ESTIMATORS)}")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("curves", parents=[common], help="asymptotic limit curves as CSV")
    p.add_argument("--c-grid", required=True, help="e.g. 0.1,0.5,0.9 or 0.05:0.95:19,1.05:5:40")
    p.add_argument("--r-b", dest="r_b", type=float, default=1.0, help="limit relative loss of the target")
    p.set_defaults(func=cmd_curves)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except GMVError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        print(json.dumps(err), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
