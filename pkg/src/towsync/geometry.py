"""Circular-phase arithmetic for oscillator nodes living on [0, 2*pi).

Phases are plain floats in radians.  "Wrapped" means reduced into
[0, 2*pi); most functions assume wrapped inputs and say so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GeometryParams:
    """Per-step phase advance, interaction radius and coupling strength.

    The default configuration keeps the advance equal to the radius, so a
    node sweeps exactly one influence sector per step.
    """

    phase_increment: float = math.pi / 4
    influence_radius: float = math.pi / 4
    coupling: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.phase_increment <= math.pi:
            raise ValueError(
                f"phase_increment must lie in (0, pi], got {self.phase_increment}"
            )
        if not 0.0 < self.influence_radius <= math.pi:
            raise ValueError(
                f"influence_radius must lie in (0, pi], got {self.influence_radius}"
            )
        if not self.coupling >= 0.0:
            raise ValueError(f"coupling must be non-negative, got {self.coupling}")


def wrap_phase(raw: float) -> float:
    """Reduce a finite angle into [0, 2*pi)."""
    if not math.isfinite(raw):
        raise ValueError(f"phase must be finite, got {raw!r}")
    wrapped = raw % TWO_PI
    # x % TWO_PI can round up to exactly TWO_PI for tiny negative x
    return 0.0 if wrapped == TWO_PI else wrapped


def wrap_phases(raw: np.ndarray) -> np.ndarray:
    """Array version of :func:`wrap_phase`."""
    arr = np.asarray(raw, dtype=float)
    if not np.isfinite(arr).all():
        raise ValueError("phases must be finite")
    wrapped = arr % TWO_PI
    wrapped[wrapped == TWO_PI] = 0.0
    return wrapped


def signed_phase_difference(a: float, b: float) -> float:
    """Signed shortest rotation carrying ``a`` onto ``b``, in (-pi, pi].

    Both arguments must be wrapped.
    """
    d = b - a
    if d > math.pi:
        d -= TWO_PI
    elif d <= -math.pi:
        d += TWO_PI
    return d


def signed_difference_array(d: np.ndarray) -> np.ndarray:
    """Map raw differences of wrapped phases (in (-2*pi, 2*pi)) to (-pi, pi]."""
    return np.where(d > math.pi, d - TWO_PI, np.where(d <= -math.pi, d + TWO_PI, d))


def circular_distance(a: float, b: float) -> float:
    """Shortest angular distance between two wrapped phases, in [0, pi]."""
    return abs(signed_phase_difference(a, b))


def neighbors_within(i: int, phases, radius: float) -> set[int]:
    """Indices of nodes strictly closer than ``radius`` to node ``i``.

    Node ``i`` itself is never a member; the boundary is excluded.
    """
    if not 0 <= i < len(phases):
        raise IndexError(f"node index {i} out of range for {len(phases)} phases")
    me = phases[i]
    return {
        j
        for j, p in enumerate(phases)
        if j != i and circular_distance(me, p) < radius
    }


def interaction_force(
    theta_i: float, theta_j: float, same_channel: bool, coupling: float
) -> float:
    """Additive phase nudge exerted on ``theta_i`` by a neighbor at ``theta_j``.

    Same-channel neighbors push the phases apart (de-synchronize), nodes on
    different channels pull together (synchronize).  The magnitude never
    exceeds ``coupling``.
    """
    force = coupling * math.sin(signed_phase_difference(theta_i, theta_j))
    return -force if same_channel else force


def at_interaction_gate(theta: float, phase_increment: float) -> bool:
    """True when a wrapped phase sits in the sector [0, phase_increment).

    A lone node advancing by ``phase_increment`` per step enters this sector
    exactly once per revolution, which is what makes the neighbor interaction
    fire once per cycle rather than every step.
    """
    return 0.0 <= theta < phase_increment
