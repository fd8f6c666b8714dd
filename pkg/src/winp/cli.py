"""Command-line front end: ``winp run`` and ``winp sweep``.

Exit codes: 0 success, 2 configuration/usage error, 3 undelivered slices,
4 structural or internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from winp import export, orchestrator
from winp.errors import ConfigError, InfeasibleError, WinpError
from winp.orchestrator import ExperimentConfig

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4

_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_INT_FIELDS = {"K", "feature_dim", "cores", "subcarriers", "T", "seed", "replications"}
_LIST_FIELDS = {"token_sizes", "compression", "rate_range", "jitter_range", "speed_jitter_range"}
_MAP_FIELDS = {"op_coefficients", "bw_base"}


def _coerce(name, value):
    if name in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer, got {value!r}", field=name)
        return value
    if name in _LIST_FIELDS:
        if not isinstance(value, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
            raise ConfigError(f"{name} must be a list of numbers", field=name)
        if name == "token_sizes" and not all(isinstance(x, int) for x in value):
            raise ConfigError("token_sizes must be integers", field=name)
        return list(value)
    if name in _MAP_FIELDS:
        if not isinstance(value, dict):
            raise ConfigError(f"{name} must be an object keyed by operator kind", field=name)
        base = _FIELDS[name].default_factory()
        unknown = set(value) - set(base)
        if unknown:
            raise ConfigError(f"{name} has unknown operator kinds {sorted(unknown)}", field=name)
        base.update(value)
        return base
    if name == "mode":
        if value not in orchestrator.MODES:
            raise ConfigError(f"mode must be one of {orchestrator.MODES}, got {value!r}", field=name)
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}", field=name)
    return float(value)


def parse_config(path=None, overrides=None):
    """Build an :class:`ExperimentConfig` from a JSON file and/or a dict of overrides.

    Missing keys take the defaults; unknown keys, wrong types, vector lengths
    that disagree with ``K`` and out-of-range values raise :class:`ConfigError`.
    """
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
    doc = {**doc, **(overrides or {})}
    unknown = sorted(set(doc) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}", field=unknown[0])
    return ExperimentConfig(**{k: _coerce(k, v) for k, v in doc.items()})


def _summary_line(metrics):
    line = (
        f"mode={metrics['mode']} makespan={metrics['makespan_ms']:.3f}ms "
        f"comm={metrics['comm_ms']:.3f}ms compute={metrics['compute_ms']:.3f}ms"
    )
    if "gain_pct" in metrics:
        line += f" gain_pct={metrics['gain_pct']:+.2f}"
    return line


def _write_run(out, result, paired=None):
    out.mkdir(parents=True, exist_ok=True)
    metrics = orchestrator.compute_metrics(result, paired)
    metrics["config"] = result.config.to_dict()
    (out / "metrics.json").write_text(export.metrics_json(metrics))
    (out / "schedule.jsonl").write_text(export.schedule_jsonl(result))
    (out / "allocation.csv").write_text(export.allocation_csv(result))
    (out / "bandwidth.csv").write_text(export.bandwidth_csv(result))
    return metrics


def cmd_run(args, cfg):
    out = Path(args.out)
    if args.mode == "BOTH":
        rtfs, pacs = orchestrator.run_paired(cfg)
        for res, other in ((rtfs, pacs), (pacs, rtfs)):
            print(_summary_line(_write_run(out / res.mode, res, other)))
    else:
        res = orchestrator.run_experiment(cfg, mode=args.mode)
        print(_summary_line(_write_run(out, res)))
    return EXIT_OK


def _parse_values(dimension, text):
    try:
        if dimension in ("token_vector", "compression_vector"):
            vecs = [[float(x) for x in part.split(",")] for part in text.split(";") if part.strip()]
            if dimension == "token_vector":
                vecs = [[int(x) if x.is_integer() else x for x in v] for v in vecs]
            return vecs
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse --values {text!r}: {exc}", field="values") from exc
    if dimension in ("cores", "subcarriers"):
        if not all(v.is_integer() for v in vals):
            raise ConfigError(f"{dimension} values must be integers", field="values")
        vals = [int(v) for v in vals]
    return vals


SWEEP_COLUMNS = ["dimension", "value", "seed", "mode", "feasible", "makespan_ms", "t_start_ms", "comm_ms", "compute_ms", "config_hash", "error"]
SUMMARY_COLUMNS = ["n_seeds", "n_feasible", "rtfs_mean_ms", "rtfs_std_ms", "pacs_mean_ms", "pacs_std_ms", "gain_mean_pct", "gain_std_pct"]


def cmd_sweep(args, cfg):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    comment = f"config_hash={cfg.config_hash} seed={cfg.seed}"
    if args.grid == "table3":
        rows, summary = orchestrator.table3_grid(cfg, args.seeds, jobs=args.jobs)
        keys = ["token_vector", "compression_vector"]
        (out / "table3.csv").write_text(export.rows_csv(rows, keys + SWEEP_COLUMNS[2:], comment))
        (out / "table3_summary.csv").write_text(export.rows_csv(summary, keys + SUMMARY_COLUMNS, comment))
    else:
        if not args.dimension or args.values is None:
            raise ConfigError("sweep needs --dimension and --values (or --grid table3)", field="dimension")
        values = _parse_values(args.dimension, args.values)
        if not values:
            raise ConfigError("--values is empty", field="values")
        for v in values:
            orchestrator.apply_dimension(cfg, args.dimension, v)
        rows = orchestrator.sweep(cfg, args.dimension, values, args.seeds, jobs=args.jobs)
        summary = orchestrator.summarize(rows)
        keys = ["dimension", "value"]
        (out / "sweep.csv").write_text(export.rows_csv(rows, SWEEP_COLUMNS, comment))
        (out / "summary.csv").write_text(export.rows_csv(summary, keys + SUMMARY_COLUMNS, comment))
    for rec in summary:
        label = " ".join(f"{k}={rec[k]}" for k in keys)
        print(
            f"{label} rtfs={rec['rtfs_mean_ms']:.2f}±{rec['rtfs_std_ms']:.2f}ms "
            f"pacs={rec['pacs_mean_ms']:.2f}±{rec['pacs_std_ms']:.2f}ms gain={rec['gain_mean_pct']:+.2f}% "
            f"feasible={rec['n_feasible']}/{rec['n_seeds']}"
        )
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config; missing keys take default values")
    common.add_argument("--seed", type=int, help="master seed (default: $WINP_SEED, then the config's seed)")
    common.add_argument("--out", default="out", help="output directory")

    parser = argparse.ArgumentParser(prog="winp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="single or paired run with trace exports")
    run.add_argument("--mode", choices=["RTFS", "PACS", "BOTH"], default=None)

    sw = sub.add_parser("sweep", parents=[common], help="paired RTFS/PACS parameter sweep")
    sw.add_argument("--dimension", choices=sorted(orchestrator.DIMENSIONS))
    sw.add_argument("--values", help="comma list; vector dimensions use ';' between vectors")
    sw.add_argument("--seeds", type=int, default=None, help="number of seeds per cell")
    sw.add_argument("--grid", choices=["table3"], help="run the 5x5 token/compression grid")
    sw.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        elif os.environ.get("WINP_SEED"):
            try:
                overrides["seed"] = int(os.environ["WINP_SEED"])
            except ValueError:
                raise ConfigError(f"WINP_SEED must be an integer, got {os.environ['WINP_SEED']!r}", field="seed")
        if getattr(args, "mode", None) in orchestrator.MODES:
            overrides["mode"] = args.mode
        cfg = parse_config(args.config, overrides)
        if args.command == "run":
            args.mode = args.mode or cfg.mode
            return cmd_run(args, cfg)
        if args.seeds is None:
            args.seeds = cfg.replications
        if args.seeds < 1 or args.jobs < 1:
            raise ConfigError("--seeds and --jobs must be >= 1", field="seeds")
        return cmd_sweep(args, cfg)
    except ConfigError as exc:
        print(f"winp: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"winp: infeasible: unfinished slices {exc.unfinished}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except WinpError as exc:
        print(f"winp: error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
