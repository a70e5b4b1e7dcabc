"""Tug-of-war channel selection with self-organizing phase scheduling.

Nodes on a time circle advance their phases each step, pick reward channels
with tug-of-war bandit dynamics, collide when reusing a channel within the
influence radius, and push (same channel) or pull (different channel) each
other's phases once per revolution.  The package provides the simulation
engine, analysis metrics and a CLI (``towsync run | sweep | analyze``).
"""

from .analysis import (
    GroupReport,
    ThroughputSummary,
    capacity_bound,
    check_conclusions,
    detect_groups,
    lock_metric,
    pairwise_lock_drift,
    throughput_summary,
)
from .bandit import (
    BanditState,
    OmegaPolicy,
    displacements,
    memory_update,
    omega_online,
    omega_oracle,
    reward_value,
    select_channel,
)
from .engine import (
    ConfigError,
    SimConfig,
    StepRecord,
    WorldState,
    config_from_dict,
    config_to_dict,
    init_world,
    run,
    step,
)
from .environment import ChannelSet, TransmissionOutcome, draw_outcomes, find_collisions
from .geometry import (
    TWO_PI,
    GeometryParams,
    at_interaction_gate,
    circular_distance,
    interaction_force,
    neighbors_within,
    signed_phase_difference,
    wrap_phase,
    wrap_phases,
)

__version__ = "0.1.0"

__all__ = [
    "BanditState",
    "ChannelSet",
    "ConfigError",
    "GeometryParams",
    "GroupReport",
    "OmegaPolicy",
    "SimConfig",
    "StepRecord",
    "ThroughputSummary",
    "TransmissionOutcome",
    "TWO_PI",
    "WorldState",
    "at_interaction_gate",
    "capacity_bound",
    "check_conclusions",
    "circular_distance",
    "config_from_dict",
    "config_to_dict",
    "detect_groups",
    "displacements",
    "draw_outcomes",
    "find_collisions",
    "init_world",
    "interaction_force",
    "lock_metric",
    "memory_update",
    "neighbors_within",
    "omega_online",
    "omega_oracle",
    "pairwise_lock_drift",
    "reward_value",
    "run",
    "select_channel",
    "signed_phase_difference",
    "step",
    "throughput_summary",
    "wrap_phase",
    "wrap_phases",
    "__version__",
]
