"""Interval-training timeline and spawn scheduling.

The seven-minute session alternates 30 s low-intensity and 90 s sprint
blocks three times, then closes with a 60 s cooldown that reuses the
low-intensity spawn parameters.  Phase windows are left-closed and
right-open, so a boundary instant already belongs to the next phase.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .world import EntityKind

__all__ = [
    "SESSION_DURATION",
    "PhaseKind",
    "ProtocolPhase",
    "SpawnParams",
    "SpawnModulation",
    "IDENTITY_MODULATION",
    "LOW_INTENSITY_SPAWN",
    "SPRINT_SPAWN",
    "KIND_MIX",
    "LANE_HALF_WIDTH",
    "SpawnEvent",
    "phase_at",
    "sprint_windows",
    "spawn_params",
    "sample_kind",
    "next_spawn",
]

SESSION_DURATION = 420.0

MODULATION_MIN = 0.5
MODULATION_MAX = 2.0

# Entities spawn laterally offset up to half a metre either side of centre.
LANE_HALF_WIDTH = 0.5


class PhaseKind(Enum):
    LOW = "low"
    SPRINT = "sprint"
    COOLDOWN = "cooldown"
    ENDED = "ended"


@dataclass(frozen=True, slots=True)
class ProtocolPhase:
    kind: PhaseKind
    index: int
    elapsed: float


# (start, end, kind, index) with [start, end) windows.
_TIMELINE: tuple[tuple[float, float, PhaseKind, int], ...] = (
    (0.0, 30.0, PhaseKind.LOW, 0),
    (30.0, 120.0, PhaseKind.SPRINT, 0),
    (120.0, 150.0, PhaseKind.LOW, 1),
    (150.0, 240.0, PhaseKind.SPRINT, 1),
    (240.0, 270.0, PhaseKind.LOW, 2),
    (270.0, 360.0, PhaseKind.SPRINT, 2),
    (360.0, 420.0, PhaseKind.COOLDOWN, 0),
)


def sprint_windows() -> tuple[tuple[float, float], ...]:
    """The three sprint [start, end) windows, in order."""
    return tuple(
        (start, end) for start, end, kind, _ in _TIMELINE if kind is PhaseKind.SPRINT
    )


def phase_at(t: float) -> ProtocolPhase:
    """Map a session time to its phase; total for every t >= 0."""
    if t < 0.0:
        raise ValueError(f"session time must be non-negative, got {t}")
    for start, end, kind, index in _TIMELINE:
        if start <= t < end:
            return ProtocolPhase(kind, index, t - start)
    return ProtocolPhase(PhaseKind.ENDED, 0, t - SESSION_DURATION)


@dataclass(frozen=True, slots=True)
class SpawnParams:
    interval: float
    speed: float


LOW_INTENSITY_SPAWN = SpawnParams(interval=0.8, speed=5.7)
SPRINT_SPAWN = SpawnParams(interval=0.5, speed=8.0)


@dataclass(frozen=True)
class SpawnModulation:
    """Difficulty scaling applied on top of the phase base parameters.

    Both scales are clamped to [0.5, 2.0] so modulated parameters can
    never leave [base/2, base*2].
    """

    interval_scale: float = 1.0
    speed_scale: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "interval_scale",
            min(MODULATION_MAX, max(MODULATION_MIN, self.interval_scale)),
        )
        object.__setattr__(
            self,
            "speed_scale",
            min(MODULATION_MAX, max(MODULATION_MIN, self.speed_scale)),
        )


IDENTITY_MODULATION = SpawnModulation(1.0, 1.0)


def spawn_params(phase: ProtocolPhase,
                 modulation: SpawnModulation = IDENTITY_MODULATION) -> SpawnParams | None:
    """Spawn cadence and speed in force during ``phase``.

    A higher interval_scale spawns more often (the base interval is divided
    by it); a higher speed_scale moves entities faster.  Returns None once
    the session has ended: the no-spawn signal.
    """
    if phase.kind is PhaseKind.ENDED:
        return None
    base = SPRINT_SPAWN if phase.kind is PhaseKind.SPRINT else LOW_INTENSITY_SPAWN
    return SpawnParams(
        interval=base.interval / modulation.interval_scale,
        speed=base.speed * modulation.speed_scale,
    )


# Cumulative kind mix; sampled with a single uniform draw walked in this order.
KIND_MIX: tuple[tuple[EntityKind, float], ...] = (
    (EntityKind.RED_VIRUS, 0.35),
    (EntityKind.BLUE_VIRUS, 0.35),
    (EntityKind.FLAT_CELL, 0.20),
    (EntityKind.RIGHT_TILT_CELL, 0.05),
    (EntityKind.LEFT_TILT_CELL, 0.05),
)


def sample_kind(rng: random.Random) -> EntityKind:
    """Draw an entity kind from the fixed mix using one uniform."""
    u = rng.random()
    cumulative = 0.0
    for kind, weight in KIND_MIX:
        cumulative += weight
        if u < cumulative:
            return kind
    return KIND_MIX[-1][0]


@dataclass(frozen=True, slots=True)
class SpawnEvent:
    time: float
    kind: EntityKind
    speed: float
    lane_offset: float


def next_spawn(rng: random.Random, now: float, params: SpawnParams) -> SpawnEvent:
    """Schedule the spawn that follows ``now`` under ``params``.

    Consumes exactly two draws, kind then lane, so the stream layout is
    stable for replay.  The first spawn of a session comes from calling
    this with now = 0.0: nothing spawns at t = 0 itself.
    """
    kind = sample_kind(rng)
    lane = rng.uniform(-LANE_HALF_WIDTH, LANE_HALF_WIDTH)
    return SpawnEvent(
        time=now + params.interval,
        kind=kind,
        speed=params.speed,
        lane_offset=lane,
    )
