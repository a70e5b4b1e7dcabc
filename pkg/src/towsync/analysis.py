"""Post-run metrics: phase clustering, lock drift, throughput, capacity bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import TWO_PI, signed_difference_array, wrap_phase


@dataclass(frozen=True)
class GroupReport:
    """Synchronization groups detected at one instant.

    ``groups`` partitions the node indices; members chain around the circle
    at gaps below the threshold, adjacent groups are separated by at least
    the threshold.  ``min_intergroup_gap`` is math.inf for a single group.
    ``channels_per_group`` is None when no selections were supplied.
    """

    groups: tuple[tuple[int, ...], ...]
    group_centers: tuple[float, ...]
    min_intergroup_gap: float
    channels_per_group: Optional[tuple[tuple[int, ...], ...]]
    threshold: float

    @property
    def group_count(self) -> int:
        return len(self.groups)


@dataclass(frozen=True)
class ThroughputSummary:
    """Aggregate transmission statistics over a trace."""

    mean_success_per_step: float
    collision_rate: float
    per_channel_success_counts: tuple[int, ...]
    capacity_bound: float


def _circular_mean(angles: np.ndarray) -> float:
    return wrap_phase(math.atan2(float(np.sin(angles).sum()), float(np.cos(angles).sum())))


def detect_groups(phases, threshold: float, selections=None) -> GroupReport:
    """Single-linkage clustering on the circle.

    Sorted neighbors (including the wraparound pair) merge when their gap is
    strictly below ``threshold``; a cut happens at every gap >= threshold.
    If every gap is below the threshold the whole population is one group
    covering the circle.  ``selections`` optionally attaches the channels the
    members held, as a sorted tuple per group.
    """
    theta = np.asarray(phases, dtype=float)
    if theta.size == 0:
        raise ValueError("cannot detect groups in an empty phase list")
    if not threshold > 0.0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    m = theta.size
    order = np.argsort(theta, kind="stable")
    sorted_theta = theta[order]

    if m == 1:
        members = ((int(order[0]),),)
        cuts = np.empty(0, dtype=int)
        gaps = np.empty(0)
    else:
        gaps = np.empty(m)
        gaps[:-1] = sorted_theta[1:] - sorted_theta[:-1]
        gaps[-1] = (sorted_theta[0] + TWO_PI) - sorted_theta[-1]
        cuts = np.flatnonzero(gaps >= threshold)
        if cuts.size == 0:
            members = (tuple(sorted(int(i) for i in order)),)
        else:
            # walk the circle starting just after the last cut, closing a
            # group at every cut gap
            begin = (int(cuts[-1]) + 1) % m
            clusters: list[tuple[int, ...]] = []
            current: list[int] = []
            for offset in range(m):
                pos = (begin + offset) % m
                current.append(int(order[pos]))
                if gaps[pos] >= threshold:
                    clusters.append(tuple(sorted(current)))
                    current = []
            members = tuple(clusters)

    centers = tuple(_circular_mean(theta[list(group)]) for group in members)
    # a lone group has no neighbor to be separated from, even when it does
    # not cover the whole circle
    min_gap = float(gaps[cuts].min()) if len(members) > 1 else math.inf
    channels = None
    if selections is not None:
        sel = list(selections)
        if len(sel) != m:
            raise ValueError("selections must have one entry per phase")
        channels = tuple(tuple(sorted(int(sel[i]) for i in group)) for group in members)
    return GroupReport(members, centers, min_gap, channels, float(threshold))


def check_conclusions(
    report: GroupReport, node_count: int, channel_count: int, influence_radius: float
) -> tuple[bool, bool]:
    """(enough groups, groups spaced out): group count >= ceil(M/N), and every
    inter-group gap above the influence radius (vacuously true for one group)."""
    required = -(-node_count // channel_count)
    count_ok = report.group_count >= required
    spacing_ok = report.min_intergroup_gap > influence_radius
    return count_ok, spacing_ok


def pairwise_lock_drift(phase_window) -> np.ndarray:
    """Spread (max minus min) of each pair's phase difference over a window.

    ``phase_window`` is (steps, nodes).  Difference series are measured on
    the circle relative to their first sample, so a pair locked near the
    +-pi seam is not reported as drifting by a full turn.  Returns an (M, M)
    symmetric matrix with zeros on the diagonal.
    """
    window = np.asarray(phase_window, dtype=float)
    if window.ndim != 2 or window.shape[0] < 2:
        raise ValueError("phase window must be (steps, nodes) with at least 2 steps")
    diffs = signed_difference_array(window[:, None, :] - window[:, :, None])
    recentered = signed_difference_array(diffs - diffs[0])
    return recentered.max(axis=0) - recentered.min(axis=0)


def lock_metric(phase_window) -> float:
    """Largest pairwise drift in the window; 0 means a rigid rotating pattern."""
    drift = pairwise_lock_drift(phase_window)
    return float(drift.max())


def capacity_bound(influence_radius: float, channels) -> float:
    """Estimated maximum simultaneous successful transmissions per step.

    The circle holds 2*pi/radius non-interfering phase slots, each worth the
    summed channel probabilities.
    """
    if not influence_radius > 0.0:
        raise ValueError(f"influence_radius must be positive, got {influence_radius}")
    probs = getattr(channels, "probs", channels)
    return (TWO_PI / influence_radius) * math.fsum(probs)


def throughput_summary(trace: Sequence, config) -> ThroughputSummary:
    """Aggregate a full trace of step records into transmission statistics."""
    if not trace:
        raise ValueError("cannot summarize an empty trace")
    steps = len({rec.t for rec in trace})
    successes = 0
    collisions = 0
    per_channel = [0] * config.channel_count
    for rec in trace:
        if rec.success:
            successes += 1
            per_channel[rec.channel] += 1
        if rec.collided:
            collisions += 1
    return ThroughputSummary(
        mean_success_per_step=successes / steps,
        collision_rate=collisions / len(trace),
        per_channel_success_counts=tuple(per_channel),
        capacity_bound=capacity_bound(config.influence_radius, config.channel_probs),
    )
