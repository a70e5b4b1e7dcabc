"""Stochastic reward channels and the same-channel interference rule.

A transmission succeeds when the channel's Bernoulli lottery wins AND no
other node transmits on the same channel within the influence radius.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import TWO_PI


@dataclass(frozen=True)
class ChannelSet:
    """The N reward channels and their success probabilities."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.probs) < 1:
            raise ValueError("a channel set needs at least one channel")
        if any(not 0.0 <= p <= 1.0 for p in self.probs):
            raise ValueError(f"channel probabilities must lie in [0, 1], got {self.probs}")

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class TransmissionOutcome:
    """What happened to one node's transmission in one step."""

    node: int
    channel: int
    collided: bool
    bernoulli_win: bool
    success: bool

    def __post_init__(self) -> None:
        if self.success != (self.bernoulli_win and not self.collided):
            raise ValueError("success must equal bernoulli_win AND NOT collided")


def find_collisions(phases, selections, influence_radius: float) -> np.ndarray:
    """Boolean flag per node: does another node reuse its channel nearby?

    Node i collides iff some j != i selected the same channel with circular
    distance below ``influence_radius`` (strict).  Different channels never
    collide, and same-channel nodes farther apart do not interfere.
    """
    theta = np.asarray(phases, dtype=float)
    sel = np.asarray(selections)
    if theta.shape != sel.shape:
        raise ValueError(
            f"phases and selections must have equal length, got {theta.size} and {sel.size}"
        )
    dist = np.abs(theta[None, :] - theta[:, None])
    np.minimum(dist, TWO_PI - dist, out=dist)
    same = sel[None, :] == sel[:, None]
    # the diagonal is always within radius and same-channel, so a node is
    # collided exactly when the count of matches exceeds its self-match
    return ((dist < influence_radius) & same).sum(axis=1) > 1


def draw_wins(selections, channels: ChannelSet, rng: np.random.Generator) -> np.ndarray:
    """One independent Bernoulli draw per node, consumed in node order."""
    sel = np.asarray(selections)
    if sel.size and (sel.min() < 0 or sel.max() >= len(channels)):
        raise IndexError(
            f"channel selection out of range for {len(channels)} channels"
        )
    uniforms = rng.random(sel.size)
    return uniforms < np.asarray(channels.probs)[sel]


def draw_outcomes(
    selections, collided, channels: ChannelSet, rng: np.random.Generator
) -> list[TransmissionOutcome]:
    """Resolve every node's transmission for one step.

    The channel lottery is drawn for every node, collided or not, so the
    random stream consumed does not depend on the collision pattern; the
    success bit is then masked by the collision flag.
    """
    sel = list(selections)
    coll = list(collided)
    if len(coll) != len(sel):
        raise ValueError(
            f"selections and collided must have equal length, got {len(sel)} and {len(coll)}"
        )
    wins = draw_wins(sel, channels, rng)
    return [
        TransmissionOutcome(
            node=i,
            channel=int(sel[i]),
            collided=bool(coll[i]),
            bernoulli_win=bool(wins[i]),
            success=bool(wins[i] and not coll[i]),
        )
        for i in range(len(sel))
    ]
