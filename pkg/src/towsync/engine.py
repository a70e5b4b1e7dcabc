"""Discrete-time simulation engine: select, transmit, learn, advance phases.

One step runs four stages in a fixed order: (a) every node draws per-channel
noise and selects a channel by tug-of-war displacement, (b) transmissions are
resolved against the interference rule, (c) rewards update the per-node
memories, (d) all phases advance synchronously from the pre-step snapshot.
The push/pull interaction is a pairwise event: it fires once per revolution,
between nodes that are both inside the gate sector and within the influence
radius of each other, which is when their transmissions overlap in time.

Randomness comes from four named substreams spawned from the master seed, in
spawn order: initialization, noise, bernoulli, tie-break.  Per step the
engine consumes, in order: M*N noise uniforms (node-major), one tie-break
integer per node with a tied argmax (ascending node order), then M bernoulli
uniforms (ascending node order).  The initialization stream is consumed only
when initial phases are drawn uniformly.  Identical (config, seed) pairs
therefore reproduce identical traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

from .analysis import ThroughputSummary, capacity_bound
from .bandit import BanditState, OmegaPolicy, omega_oracle
from .environment import find_collisions
from .geometry import TWO_PI, signed_phase_difference, wrap_phases


class ConfigError(ValueError):
    """Raised when a simulation configuration is inconsistent."""


DEFAULT_CHANNEL_PROBS = (0.1, 0.2, 0.3, 0.4, 0.5)

UNIFORM_RANDOM = "uniform-random"


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one simulation run.

    Defaults give the stock desk-scale scenario: ten nodes over five channels
    with success probabilities 0.1..0.5, advance and influence radius both
    pi/4, coupling 0.5, memory 0.95, noise amplitude 0.1, and the failure
    penalty estimated online by each node.
    """

    node_count: int = 10
    channel_count: int = 5
    phase_increment: float = math.pi / 4
    influence_radius: float = math.pi / 4
    coupling: float = 0.5
    memory_alpha: float = 0.95
    noise_amplitude: float = 0.1
    channel_probs: tuple[float, ...] = DEFAULT_CHANNEL_PROBS
    omega_policy: OmegaPolicy = field(default_factory=OmegaPolicy)
    steps: int = 10_000
    seed: int = 0
    initial_phases: Union[str, tuple[float, ...]] = UNIFORM_RANDOM

    def __post_init__(self) -> None:
        object.__setattr__(self, "channel_probs", tuple(self.channel_probs))
        if not isinstance(self.initial_phases, str):
            object.__setattr__(self, "initial_phases", tuple(self.initial_phases))
        self._validate()

    def _validate(self) -> None:
        if not isinstance(self.node_count, int) or self.node_count < 1:
            raise ConfigError(f"node_count must be a positive integer, got {self.node_count!r}")
        if not isinstance(self.channel_count, int) or self.channel_count < 2:
            raise ConfigError(f"channel_count must be an integer >= 2, got {self.channel_count!r}")
        if len(self.channel_probs) != self.channel_count:
            raise ConfigError(
                f"channel_probs must have channel_count={self.channel_count} entries, "
                f"got {len(self.channel_probs)}"
            )
        if any(not 0.0 <= p <= 1.0 for p in self.channel_probs):
            raise ConfigError(f"channel_probs entries must lie in [0, 1], got {self.channel_probs}")
        if not 0.0 < self.phase_increment <= math.pi:
            raise ConfigError(f"phase_increment must lie in (0, pi], got {self.phase_increment}")
        if not 0.0 < self.influence_radius <= math.pi:
            raise ConfigError(f"influence_radius must lie in (0, pi], got {self.influence_radius}")
        if not self.coupling >= 0.0:
            raise ConfigError(f"coupling must be non-negative, got {self.coupling}")
        if not 0.0 <= self.memory_alpha <= 1.0:
            raise ConfigError(f"memory_alpha must lie in [0, 1], got {self.memory_alpha}")
        if not self.noise_amplitude >= 0.0:
            raise ConfigError(f"noise_amplitude must be non-negative, got {self.noise_amplitude}")
        if not isinstance(self.omega_policy, OmegaPolicy):
            raise ConfigError("omega_policy must be an OmegaPolicy")
        hint = self.omega_policy.group_size_hint
        if hint is not None and hint > self.channel_count - 1:
            raise ConfigError(
                f"omega_policy.group_size_hint must be <= channel_count-1={self.channel_count - 1}, "
                f"got {hint}"
            )
        if not isinstance(self.steps, int) or self.steps < 0:
            raise ConfigError(f"steps must be a non-negative integer, got {self.steps!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if isinstance(self.initial_phases, str):
            if self.initial_phases != UNIFORM_RANDOM:
                raise ConfigError(
                    f"initial_phases must be {UNIFORM_RANDOM!r} or a list of angles, "
                    f"got {self.initial_phases!r}"
                )
        else:
            if len(self.initial_phases) != self.node_count:
                raise ConfigError(
                    f"initial_phases must have node_count={self.node_count} entries, "
                    f"got {len(self.initial_phases)}"
                )
            if any(not 0.0 <= p < TWO_PI for p in self.initial_phases):
                raise ConfigError("initial_phases entries must lie in [0, 2*pi)")

    def resolved_omega(self) -> Optional[float]:
        """Constant penalty for fixed/oracle policies, None when online."""
        policy = self.omega_policy
        if policy.mode == "fixed":
            return policy.fixed_value
        if policy.mode == "oracle":
            return omega_oracle(self.channel_probs, policy.group_size_hint)
        return None


class StepRecord(NamedTuple):
    """One node's observation row for one step."""

    t: int
    node: int
    phase_before: float
    channel: int
    collided: bool
    success: bool
    reward: float
    gated: bool


@dataclass
class WorldState:
    """The evolving simulation state.

    ``phases`` is (M,), the learning arrays are (M, N); ``last_selection``
    holds -1 for nodes that have not transmitted yet.  The three generators
    are live substreams; consuming them outside :func:`step` breaks
    reproducibility.
    """

    t: int
    phases: np.ndarray
    q_values: np.ndarray
    play_counts: np.ndarray
    success_counts: np.ndarray
    last_selection: np.ndarray
    rng_noise: np.random.Generator
    rng_bernoulli: np.random.Generator
    rng_tiebreak: np.random.Generator
    omega_const: Optional[float]

    @property
    def bandits(self) -> list[BanditState]:
        """Per-node views of the learning arrays (shared memory, not copies)."""
        return [
            BanditState(
                self.q_values[i],
                self.play_counts[i],
                self.success_counts[i],
                last_selection=int(s) if s >= 0 else None,
            )
            for i, s in enumerate(self.last_selection)
        ]


def _spawn_streams(seed: int) -> tuple[np.random.Generator, ...]:
    children = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.Generator(np.random.PCG64(c)) for c in children)


def init_world(config: SimConfig) -> WorldState:
    """Fresh world at t=0: zero scores, phases explicit or drawn uniformly."""
    rng_init, rng_noise, rng_bernoulli, rng_tiebreak = _spawn_streams(config.seed)
    m, n = config.node_count, config.channel_count
    if config.initial_phases == UNIFORM_RANDOM:
        phases = wrap_phases(rng_init.uniform(0.0, TWO_PI, m))
    else:
        phases = np.array(config.initial_phases, dtype=float)
    return WorldState(
        t=0,
        phases=phases,
        q_values=np.zeros((m, n)),
        play_counts=np.zeros((m, n), dtype=np.int64),
        success_counts=np.zeros((m, n), dtype=np.int64),
        last_selection=np.full(m, -1, dtype=np.int64),
        rng_noise=rng_noise,
        rng_bernoulli=rng_bernoulli,
        rng_tiebreak=rng_tiebreak,
        omega_const=config.resolved_omega(),
    )


def step(world: WorldState, config: SimConfig) -> tuple[WorldState, list[StepRecord]]:
    """Advance the world by one time step; mutates ``world`` and returns it.

    The phase move is synchronous: every force is evaluated against the
    pre-step phases and this step's selections, then all nodes move at once.
    Score totals and the interaction sum accumulate in ascending index order
    and the coupling multiplies the accumulated interaction sum once, so the
    arithmetic reproduces a plain per-node evaluation of the update rules
    exactly, float for float.
    """
    m, n = config.node_count, config.channel_count
    theta = world.phases
    q = world.q_values

    # (a) per-channel noise, tug-of-war displacements, argmax selection
    noise = world.rng_noise.uniform(
        -config.noise_amplitude, config.noise_amplitude, (m, n)
    )
    # per-row score total accumulated in ascending channel order; each
    # channel is measured against (total - own) / (n - 1)
    total = q[:, 0] + q[:, 1]
    for l in range(2, n):
        total = total + q[:, l]
    x = q - (total[:, None] - q) / (n - 1) + noise
    row_max = x.max(axis=1)
    sel = x.argmax(axis=1)
    tied_rows = np.flatnonzero((x == row_max[:, None]).sum(axis=1) > 1)
    for i in tied_rows:
        winners = np.flatnonzero(x[i] == row_max[i])
        sel[i] = winners[int(world.rng_tiebreak.integers(winners.size))]

    # (b) interference and channel lotteries
    collided = find_collisions(theta, sel, config.influence_radius)
    probs = np.asarray(config.channel_probs)
    win = world.rng_bernoulli.random(m) < probs[sel]
    success = win & ~collided

    # (c) penalty, rewards, memory decay and counters
    if world.omega_const is not None:
        omega = np.full(m, world.omega_const)
    else:
        estimates = (world.success_counts + 1) / (world.play_counts + 2)
        top_two = np.partition(estimates, n - 2, axis=1)[:, n - 2 :]
        gamma = top_two[:, 0] + top_two[:, 1]
        omega = gamma / (2.0 - gamma)
    reward = np.where(success, 1.0, -omega)
    rows = np.arange(m)
    q *= config.memory_alpha
    q[rows, sel] += reward
    world.play_counts[rows, sel] += 1
    world.success_counts[rows, sel] += success
    world.last_selection[:] = sel

    # (d) synchronous phase update from the pre-step snapshot; the coupling
    # multiplies the interaction sum once, accumulated in ascending j order
    gated = theta < config.phase_increment
    new_theta = theta + config.phase_increment
    if gated.sum() > 1:
        coupling = config.coupling
        radius = config.influence_radius
        for i in np.flatnonzero(gated):
            theta_i = theta[i]
            sel_i = sel[i]
            acc = 0.0
            for j in range(m):
                if j == i or not gated[j]:
                    continue
                d = signed_phase_difference(theta_i, theta[j])
                if abs(d) < radius:
                    acc += math.sin(d) if sel[j] == sel_i else -math.sin(d)
            new_theta[i] = (theta_i + config.phase_increment) - coupling * acc
    new_theta %= TWO_PI
    new_theta[new_theta == TWO_PI] = 0.0

    t_now = world.t
    phase_list = theta.tolist()
    sel_list = sel.tolist()
    collided_list = collided.tolist()
    success_list = success.tolist()
    reward_list = reward.tolist()
    gated_list = gated.tolist()
    records = [
        StepRecord(
            t_now,
            i,
            phase_list[i],
            sel_list[i],
            collided_list[i],
            success_list[i],
            reward_list[i],
            gated_list[i],
        )
        for i in range(m)
    ]

    world.phases = new_theta
    world.t = t_now + 1
    return world, records


def run(config: SimConfig, sinks=()) -> tuple[WorldState, Optional[ThroughputSummary]]:
    """Run ``config.steps`` steps from a fresh world, streaming records to sinks.

    Each sink is a callable receiving the per-step list of records.  Returns
    the final world and a throughput summary accumulated on the fly (None
    when steps == 0).  Output is bitwise reproducible for identical
    (config, seed) within this implementation.
    """
    world = init_world(config)
    successes = 0
    collisions = 0
    per_channel = [0] * config.channel_count
    total_records = 0
    for _ in range(config.steps):
        world, records = step(world, config)
        for sink in sinks:
            try:
                sink(records)
            except Exception as exc:
                raise RuntimeError(
                    f"trace sink failed at step {world.t - 1}: {exc}"
                ) from exc
        total_records += len(records)
        for rec in records:
            if rec.success:
                successes += 1
                per_channel[rec.channel] += 1
            if rec.collided:
                collisions += 1
    if config.steps == 0:
        return world, None
    summary = ThroughputSummary(
        mean_success_per_step=successes / config.steps,
        collision_rate=collisions / total_records,
        per_channel_success_counts=tuple(per_channel),
        capacity_bound=capacity_bound(config.influence_radius, config.channel_probs),
    )
    return world, summary


def config_to_dict(config: SimConfig) -> dict:
    """Flat JSON-ready mapping mirroring the config file schema."""
    return {
        "node_count": config.node_count,
        "channel_count": config.channel_count,
        "phase_increment": config.phase_increment,
        "influence_radius": config.influence_radius,
        "coupling": config.coupling,
        "memory_alpha": config.memory_alpha,
        "noise_amplitude": config.noise_amplitude,
        "channel_probs": list(config.channel_probs),
        "omega_mode": config.omega_policy.mode,
        "omega_fixed_value": config.omega_policy.fixed_value,
        "omega_group_size_hint": config.omega_policy.group_size_hint,
        "steps": config.steps,
        "seed": config.seed,
        "initial_phases": (
            config.initial_phases
            if isinstance(config.initial_phases, str)
            else list(config.initial_phases)
        ),
    }


CONFIG_KEYS = tuple(config_to_dict(SimConfig()).keys())

_POLICY_KEYS = ("omega_mode", "omega_fixed_value", "omega_group_size_hint")


def config_from_dict(values: dict) -> SimConfig:
    """Build a validated SimConfig from flat keys; unknown keys are rejected."""
    unknown = sorted(set(values) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    merged = config_to_dict(SimConfig())
    merged.update(values)
    policy_kwargs = {}
    if merged["omega_mode"] is not None:
        policy_kwargs["mode"] = merged["omega_mode"]
    if merged["omega_fixed_value"] is not None:
        policy_kwargs["fixed_value"] = merged["omega_fixed_value"]
    policy_kwargs["group_size_hint"] = merged["omega_group_size_hint"]
    try:
        policy = OmegaPolicy(**policy_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    kwargs = {k: merged[k] for k in CONFIG_KEYS if k not in _POLICY_KEYS}
    kwargs["omega_policy"] = policy
    if isinstance(kwargs["channel_probs"], list):
        kwargs["channel_probs"] = tuple(kwargs["channel_probs"])
    if isinstance(kwargs["initial_phases"], list):
        kwargs["initial_phases"] = tuple(kwargs["initial_phases"])
    return SimConfig(**kwargs)
