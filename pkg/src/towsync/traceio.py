"""Trace and report file formats: delimited traces, JSON summaries, manifests.

Floats are serialized with ``repr`` so files round-trip bit-exactly;
re-analyzing a written trace reproduces the original summary byte for byte.
Angles are radians in trace.csv and degrees in phases.csv.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .analysis import (
    GroupReport,
    check_conclusions,
    detect_groups,
    pairwise_lock_drift,
    throughput_summary,
)
from .engine import SimConfig, StepRecord, config_to_dict

TRACE_HEADER = "t,node,phase,channel,collided,success,reward,gated"
PHASES_HEADER = "t,node,phase_deg"

DEFAULT_LOCK_WINDOW = 1000


def trace_csv_text(records: Sequence[StepRecord]) -> str:
    """Render records as CSV text, one row per node per step."""
    lines = [TRACE_HEADER]
    lines.extend(
        f"{r.t},{r.node},{r.phase_before!r},{r.channel},"
        f"{int(r.collided)},{int(r.success)},{r.reward!r},{int(r.gated)}"
        for r in records
    )
    lines.append("")
    return "\n".join(lines)


def write_trace_csv(path, records: Sequence[StepRecord]) -> None:
    Path(path).write_text(trace_csv_text(records))


def read_trace_csv(path) -> list[StepRecord]:
    """Parse a trace file, validating the schema column by column."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"{path}: empty trace file")
    header = lines[0]
    if header != TRACE_HEADER:
        got = header.split(",")
        want = TRACE_HEADER.split(",")
        for pos, name in enumerate(want):
            if pos >= len(got) or got[pos] != name:
                found = got[pos] if pos < len(got) else "<missing>"
                raise ValueError(
                    f"{path}: trace schema mismatch at column {pos + 1}: "
                    f"expected {name!r}, found {found!r}"
                )
        raise ValueError(f"{path}: trace schema mismatch: extra columns {got[len(want):]}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 8:
            raise ValueError(f"{path}:{lineno}: expected 8 fields, found {len(parts)}")
        records.append(
            StepRecord(
                t=int(parts[0]),
                node=int(parts[1]),
                phase_before=float(parts[2]),
                channel=int(parts[3]),
                collided=bool(int(parts[4])),
                success=bool(int(parts[5])),
                reward=float(parts[6]),
                gated=bool(int(parts[7])),
            )
        )
    return records


def phases_csv_text(records: Sequence[StepRecord]) -> str:
    """Per-step node phases in degrees, ready for stripe-style raster plots."""
    lines = [PHASES_HEADER]
    lines.extend(
        f"{r.t},{r.node},{math.degrees(r.phase_before)!r}" for r in records
    )
    lines.append("")
    return "\n".join(lines)


def write_phases_csv(path, records: Sequence[StepRecord]) -> None:
    Path(path).write_text(phases_csv_text(records))


def _json_safe(value: float) -> Optional[float]:
    return None if value is None or math.isinf(value) else value


def _group_report_dict(report: GroupReport) -> dict:
    return {
        "group_count": report.group_count,
        "groups": [list(g) for g in report.groups],
        "group_centers": list(report.group_centers),
        "min_intergroup_gap": _json_safe(report.min_intergroup_gap),
        "channels_per_group": (
            None
            if report.channels_per_group is None
            else [list(g) for g in report.channels_per_group]
        ),
        "threshold": report.threshold,
    }


def _lock_dict(records: Sequence[StepRecord], config: SimConfig, report: GroupReport) -> Optional[dict]:
    steps = len(records) // config.node_count
    window_steps = min(DEFAULT_LOCK_WINDOW, steps)
    if window_steps < 2:
        return None
    m = config.node_count
    tail = records[-window_steps * m :]
    window = np.fromiter(
        (r.phase_before for r in tail), dtype=float, count=window_steps * m
    ).reshape(window_steps, m)
    drift = pairwise_lock_drift(window)
    group_of = {}
    for gidx, members in enumerate(report.groups):
        for node in members:
            group_of[node] = gidx
    cross = [
        float(drift[i, j])
        for i in range(m)
        for j in range(i + 1, m)
        if group_of[i] != group_of[j]
    ]
    return {
        "window_steps": window_steps,
        "max_pairwise_drift": float(drift.max()),
        "min_cross_group_drift": min(cross) if cross else None,
    }


def build_summary(records: Sequence[StepRecord], config: SimConfig) -> dict:
    """Assemble the run summary computed purely from the trace and config.

    Both the run and analyze commands call this on the same inputs, which is
    what makes re-analysis reproduce a run's summary exactly.
    """
    summary = {
        "config": config_to_dict(config),
        "seed": config.seed,
        "steps_recorded": 0,
        "throughput": None,
        "group_report": None,
        "lock": None,
        "conclusions": None,
    }
    if not records:
        return summary
    m = config.node_count
    if len(records) % m != 0:
        raise ValueError(
            f"trace holds {len(records)} rows, not a multiple of node_count={m}"
        )
    tp = throughput_summary(records, config)
    final = records[-m:]
    report = detect_groups(
        [r.phase_before for r in final],
        config.influence_radius,
        selections=[r.channel for r in final],
    )
    enough, spaced = check_conclusions(
        report, config.node_count, config.channel_count, config.influence_radius
    )
    summary.update(
        steps_recorded=len(records) // m,
        throughput={
            "mean_success_per_step": tp.mean_success_per_step,
            "collision_rate": tp.collision_rate,
            "per_channel_success_counts": list(tp.per_channel_success_counts),
            "capacity_bound": tp.capacity_bound,
        },
        group_report=_group_report_dict(report),
        lock=_lock_dict(records, config, report),
        conclusions={"enough_groups": enough, "groups_spaced": spaced},
    )
    return summary


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(json_text(obj))


def build_manifest(
    config: SimConfig, outputs: dict, created_by: str, version: str
) -> dict:
    """Provenance record tying every output file to one (config, seed) pair."""
    return {
        "tool": "towsync",
        "version": version,
        "created_by": created_by,
        "seeds": [config.seed],
        "config": config_to_dict(config),
        "outputs": outputs,
    }
