"""Per-node tug-of-war bandit: displacements, argmax selection, decaying memory.

Each node keeps one score per channel.  Scores are turned into displacements
by subtracting the mean of the other channels' scores (so the total is
conserved, hence "tug of war"), perturbed by noise, and the largest
displacement wins the step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

OMEGA_MODES = ("fixed", "oracle", "online")


@dataclass
class BanditState:
    """One node's learning state over N channels."""

    q_values: np.ndarray
    play_counts: np.ndarray
    success_counts: np.ndarray
    last_selection: Optional[int] = None

    def __post_init__(self) -> None:
        self.q_values = np.asarray(self.q_values, dtype=float)
        self.play_counts = np.asarray(self.play_counts, dtype=np.int64)
        self.success_counts = np.asarray(self.success_counts, dtype=np.int64)
        n = self.q_values.size
        if self.play_counts.size != n or self.success_counts.size != n:
            raise ValueError("q_values, play_counts and success_counts must have equal length")
        if not np.isfinite(self.q_values).all():
            raise ValueError("q_values must be finite")
        if (self.play_counts < 0).any() or (self.success_counts < 0).any():
            raise ValueError("counters must be non-negative")
        if (self.success_counts > self.play_counts).any():
            raise ValueError("success_counts cannot exceed play_counts")

    @classmethod
    def fresh(cls, n_channels: int) -> "BanditState":
        """Symmetric zero state: no scores, no history."""
        return cls(
            q_values=np.zeros(n_channels),
            play_counts=np.zeros(n_channels, dtype=np.int64),
            success_counts=np.zeros(n_channels, dtype=np.int64),
        )

    @property
    def n_channels(self) -> int:
        return self.q_values.size


@dataclass(frozen=True)
class OmegaPolicy:
    """How the failure penalty is chosen.

    ``fixed`` uses ``fixed_value`` as-is, ``oracle`` derives the penalty from
    the true channel probabilities, ``online`` re-estimates it every step
    from each node's own play/success counts.  ``group_size_hint`` shifts the
    oracle from the two best channels to ranks hint and hint+1, which suits a
    node that has to share its phase slot with hint-1 others.
    """

    mode: str = "online"
    fixed_value: float = 0.0
    group_size_hint: Optional[int] = None

    def __post_init__(self) -> None:
        if self.mode not in OMEGA_MODES:
            raise ValueError(f"omega mode must be one of {OMEGA_MODES}, got {self.mode!r}")
        if self.mode == "fixed" and not self.fixed_value >= 0.0:
            raise ValueError(f"fixed omega must be non-negative, got {self.fixed_value}")
        if self.group_size_hint is not None and self.group_size_hint < 1:
            raise ValueError(f"group_size_hint must be >= 1, got {self.group_size_hint}")


def displacements(q_values: Sequence[float], noise: Sequence[float]) -> list[float]:
    """Tug-of-war displacement per channel.

    Each channel's score is measured against the mean of all the other
    channels' scores, then perturbed: with zero noise the displacements sum
    to zero, so one channel can only rise by pulling the others down.
    """
    n = len(q_values)
    if n < 2:
        raise ValueError(f"displacements need at least two channels, got {n}")
    if len(noise) != n:
        raise ValueError(f"noise must have one entry per channel ({n}), got {len(noise)}")
    return [
        q_values[k] - sum(q_values[l] for l in range(n) if l != k) / (n - 1) + noise[k]
        for k in range(n)
    ]


def select_channel(x_values: Sequence[float], rng: np.random.Generator) -> int:
    """Index of the largest displacement; ties are broken uniformly at random."""
    if len(x_values) == 0:
        raise ValueError("cannot select from an empty displacement vector")
    best = max(x_values)
    winners = [k for k, x in enumerate(x_values) if x == best]
    if len(winners) == 1:
        return winners[0]
    return winners[int(rng.integers(len(winners)))]


def reward_value(success: bool, omega: float) -> float:
    """+1 for a successful transmission, -omega for a failed one."""
    return 1.0 if success else -omega


def memory_update(
    state: BanditState, selected: int, reward: float, alpha: float
) -> BanditState:
    """Decay every score by ``alpha`` and add the observed reward to the played channel.

    Unplayed channels receive no reward term, they only decay.  The success
    counter increments exactly when the reward is positive: the reward scheme
    emits +1 on success and -omega <= 0 on failure.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"memory alpha must lie in [0, 1], got {alpha}")
    if not 0 <= selected < state.n_channels:
        raise IndexError(
            f"channel {selected} out of range for {state.n_channels} channels"
        )
    q = alpha * state.q_values
    q[selected] += reward
    plays = state.play_counts.copy()
    plays[selected] += 1
    successes = state.success_counts.copy()
    if reward > 0.0:
        successes[selected] += 1
    return BanditState(q, plays, successes, last_selection=selected)


def _penalty_from_gamma(gamma: float) -> float:
    return gamma / (2.0 - gamma)


def omega_oracle(
    channel_probs: Sequence[float], group_size_hint: Optional[int] = None
) -> float:
    """Failure penalty derived from the true channel probabilities.

    gamma sums the two best probabilities; with a group-size hint it sums the
    probabilities at ranks hint and hint+1 instead.  Returns gamma / (2 - gamma).
    """
    n = len(channel_probs)
    if n < 2:
        raise ValueError(f"need at least two channels, got {n}")
    if any(not 0.0 <= p <= 1.0 for p in channel_probs):
        raise ValueError("channel probabilities must lie in [0, 1]")
    ranked = sorted(channel_probs, reverse=True)
    if group_size_hint is None:
        gamma = ranked[0] + ranked[1]
    else:
        if not 1 <= group_size_hint <= n - 1:
            raise ValueError(
                f"group_size_hint must lie in [1, {n - 1}], got {group_size_hint}"
            )
        gamma = ranked[group_size_hint - 1] + ranked[group_size_hint]
    return _penalty_from_gamma(gamma)


def omega_online(state: BanditState) -> float:
    """Failure penalty estimated from observed counts.

    Per-channel success probabilities are estimated with add-one/add-two
    smoothing, (successes + 1) / (plays + 2), so unplayed channels sit at 0.5
    and no division by zero can occur; the two largest estimates play the
    role of the two best true probabilities.
    """
    if state.n_channels < 2:
        raise ValueError("online penalty needs at least two channels")
    estimates = (state.success_counts + 1) / (state.play_counts + 2)
    top_two = np.partition(estimates, estimates.size - 2)[-2:]
    gamma = float(top_two[0] + top_two[1])
    return _penalty_from_gamma(gamma)
