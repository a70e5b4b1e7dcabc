"""Command-line front end: ``towsync run | sweep | analyze``.

``run`` executes one simulation and writes trace.csv, summary.json,
manifest.json and figures into the output directory.  ``sweep`` runs a grid
of configurations times a seed range, one subdirectory per run, and
aggregates sweep.csv plus an overview figure.  ``analyze`` recomputes a
summary (plus phases.csv and figures) from an existing trace.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .engine import (
    CONFIG_KEYS,
    ConfigError,
    SimConfig,
    config_from_dict,
    config_to_dict,
    run,
)
from .traceio import (
    build_manifest,
    build_summary,
    json_text,
    read_trace_csv,
    write_json,
    write_phases_csv,
    write_trace_csv,
)

LIST_VALUED_KEYS = ("channel_probs", "initial_phases")


def _parse_set_entry(entry: str) -> tuple[str, object]:
    if "=" not in entry:
        raise ConfigError(f"--set expects KEY=VALUE, got {entry!r}")
    key, raw = entry.split("=", 1)
    key = key.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not text.strip():
        return {}
    try:
        values = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return values


def parse_config(
    path=None, set_entries=(), seed=None, steps=None
) -> SimConfig:
    """Defaults, then config file, then --set overrides, then dedicated flags."""
    values = _load_config_file(path) if path else {}
    for entry in set_entries:
        key, value = _parse_set_entry(entry)
        values[key] = value
    if seed is not None:
        values["seed"] = seed
    if steps is not None:
        values["steps"] = steps
    return config_from_dict(values)


def _is_axis(key: str, value) -> bool:
    if not isinstance(value, list):
        return False
    if key in LIST_VALUED_KEYS:
        return bool(value) and all(isinstance(v, list) for v in value)
    return True


def expand_grid(set_entries) -> list[dict]:
    """Cross product of --set axes; a JSON list on a scalar key is an axis,
    a list of lists on a list-valued key is an axis."""
    fixed: dict = {}
    axes: dict = {}
    for entry in set_entries:
        key, value = _parse_set_entry(entry)
        if _is_axis(key, value):
            if not value:
                raise ConfigError(f"--set {key} axis must not be empty")
            axes[key] = value
        else:
            fixed[key] = value
    if not axes:
        return [dict(fixed)]
    keys = sorted(axes)
    points = []
    for combo in itertools.product(*(axes[k] for k in keys)):
        point = dict(fixed)
        point.update(dict(zip(keys, combo)))
        points.append(point)
    return points


def execute_run(
    config: SimConfig, out_dir: Path, figures: bool = True, created_by: str = "run"
) -> dict:
    """Run one simulation and write its full output bundle; returns the summary."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records: list = []
    run(config, sinks=(records.extend,))
    write_trace_csv(out_dir / "trace.csv", records)
    summary = build_summary(records, config)
    write_json(out_dir / "summary.json", summary)
    outputs = {"trace": "trace.csv", "summary": "summary.json", "figures": []}
    if figures and records:
        from . import plots

        plots.save_phase_raster(records, out_dir / "phases.png")
        outputs["figures"].append("phases.png")
        plots.save_channel_usage(
            summary["throughput"]["per_channel_success_counts"],
            out_dir / "channels.png",
        )
        outputs["figures"].append("channels.png")
    write_json(
        out_dir / "manifest.json",
        build_manifest(config, outputs, created_by, __version__),
    )
    return summary


def _metrics_row(run_name: str, config: SimConfig, summary: dict) -> dict:
    row = {"run": run_name}
    cfg_dict = config_to_dict(config)
    for key in CONFIG_KEYS:
        value = cfg_dict[key]
        row[key] = json.dumps(value) if isinstance(value, list) else value
    tp = summary.get("throughput")
    group = summary.get("group_report")
    lock = summary.get("lock")
    row["mean_success_per_step"] = tp["mean_success_per_step"] if tp else None
    row["collision_rate"] = tp["collision_rate"] if tp else None
    row["group_count"] = group["group_count"] if group else None
    gap = group["min_intergroup_gap"] if group else None
    row["min_intergroup_gap"] = math.inf if group and gap is None else gap
    row["lock_drift"] = lock["max_pairwise_drift"] if lock else None
    row["status"] = "ok"
    row["error"] = ""
    return row


SWEEP_COLUMNS = (
    ["run", *CONFIG_KEYS]
    + ["mean_success_per_step", "collision_rate", "group_count"]
    + ["min_intergroup_gap", "lock_drift", "status", "error"]
)


def _sweep_task(task: tuple) -> dict:
    run_name, config, run_dir, figures = task
    try:
        summary = execute_run(config, Path(run_dir), figures=figures, created_by="sweep")
        return _metrics_row(run_name, config, summary)
    except Exception:
        row = {key: None for key in SWEEP_COLUMNS}
        row.update(run=run_name, seed=config.seed, status="failed",
                   error=traceback.format_exc(limit=1).strip().replace("\n", " | "))
        return row


def cmd_run(args) -> int:
    config = parse_config(args.config, args.set or (), args.seed, args.steps)
    summary = execute_run(config, Path(args.out), figures=not args.no_figures)
    tp = summary["throughput"]
    group = summary["group_report"]
    if tp is None:
        print(f"run complete: 0 steps recorded -> {args.out}")
    else:
        print(
            f"run complete: seed={config.seed} steps={summary['steps_recorded']} "
            f"mean_success/step={tp['mean_success_per_step']:.4f} "
            f"groups={group['group_count']} -> {args.out}"
        )
    return 0


def cmd_sweep(args) -> int:
    base_file_values = _load_config_file(args.config) if args.config else {}
    points = expand_grid(args.set or ())
    base_seed = args.seed if args.seed is not None else base_file_values.get("seed", 0)
    seeds = [base_seed + i for i in range(args.seeds)]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = []
    for point_idx, point in enumerate(points):
        for seed in seeds:
            values = dict(base_file_values)
            values.update(point)
            values["seed"] = seed
            if args.steps is not None:
                values["steps"] = args.steps
            config = config_from_dict(values)
            run_name = f"run{point_idx:03d}_seed{seed}"
            tasks.append((run_name, config, str(out_dir / run_name), args.figures))

    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(task) for task in tasks]

    with open(out_dir / "sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in SWEEP_COLUMNS})

    ok_rows = [r for r in rows if r["status"] == "ok"]
    if ok_rows:
        from . import plots

        plots.save_sweep_overview(rows, out_dir / "sweep.png")
    failed = len(rows) - len(ok_rows)
    print(f"sweep complete: {len(ok_rows)} ok, {failed} failed -> {out_dir / 'sweep.csv'}")
    return 1 if failed else 0


def _config_for_trace(args, trace_path: Path) -> SimConfig:
    if args.config:
        return parse_config(args.config, args.set or ())
    manifest_path = trace_path.parent / "manifest.json"
    if not manifest_path.exists():
        raise ConfigError(
            f"no --config given and no manifest.json next to {trace_path}; "
            "cannot recover the run configuration"
        )
    manifest = json.loads(manifest_path.read_text())
    values = dict(manifest["config"])
    for entry in args.set or ():
        key, value = _parse_set_entry(entry)
        values[key] = value
    return config_from_dict(values)


def cmd_analyze(args) -> int:
    trace_path = Path(args.trace)
    records = read_trace_csv(trace_path)
    config = _config_for_trace(args, trace_path)
    out_dir = Path(args.out) if args.out else trace_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = build_summary(records, config)
    write_json(out_dir / "summary.json", summary)
    write_phases_csv(out_dir / "phases.csv", records)
    outputs = {"trace": str(trace_path), "summary": "summary.json",
               "phases": "phases.csv", "figures": []}
    if not args.no_figures and records:
        from . import plots

        plots.save_phase_raster(records, out_dir / "phases.png")
        outputs["figures"].append("phases.png")
        plots.save_channel_usage(
            summary["throughput"]["per_channel_success_counts"],
            out_dir / "channels.png",
        )
        outputs["figures"].append("channels.png")
    write_json(
        out_dir / "manifest.json",
        build_manifest(config, outputs, "analyze", __version__),
    )
    print(f"analyze complete: {summary['steps_recorded']} steps -> {out_dir / 'summary.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="towsync",
        description="Tug-of-war channel selection with self-organizing phase scheduling.",
    )
    parser.add_argument("--version", action="version", version=f"towsync {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one simulation run")
    run_p.add_argument("--config", help="JSON config file (flat keys)")
    run_p.add_argument("--seed", type=int, help="override the master seed")
    run_p.add_argument("--steps", type=int, help="override the step count")
    run_p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a config grid times a seed range")
    sweep_p.add_argument("--config", help="JSON config file (flat keys)")
    sweep_p.add_argument("--seed", type=int, help="first seed of the range")
    sweep_p.add_argument("--seeds", type=int, default=1, help="number of seeds per grid point")
    sweep_p.add_argument("--steps", type=int, help="override the step count")
    sweep_p.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="fixed override, or an axis when the value is a JSON list")
    sweep_p.add_argument("--out", required=True, help="output directory")
    sweep_p.add_argument("--workers", type=int, default=1, help="concurrent runs")
    sweep_p.add_argument("--figures", action="store_true",
                         help="also render per-run figures")
    sweep_p.set_defaults(func=cmd_sweep)

    an_p = sub.add_parser("analyze", help="recompute reports from a trace file")
    an_p.add_argument("trace", help="path to a trace.csv")
    an_p.add_argument("--config", help="JSON config file (else manifest.json next to the trace)")
    an_p.add_argument("--set", action="append", metavar="KEY=VALUE",
                      help="override one config key (repeatable)")
    an_p.add_argument("--out", help="output directory (default: the trace's directory)")
    an_p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    an_p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
