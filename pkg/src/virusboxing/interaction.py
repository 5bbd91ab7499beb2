"""Pose-driven player input: jabs, targeting, and weave classification.

A jab is recognised from hand kinematics alone: the windowed hand speed
must cross the 1 m/s threshold from below, with a short per-hand
refractory so one punch cannot double-fire.  What the jab hits depends on
the empowerment state and the targeting policy; ducking under cells is
classified from the head position against a per-player calibration.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .world import Entity, EntityKind, VIRUS_KINDS, WorldState

__all__ = [
    "JAB_SPEED_THRESHOLD",
    "JAB_REFRACTORY",
    "VELOCITY_WINDOW",
    "MELEE_RADIUS",
    "PRECISE_RAY_TOLERANCE",
    "Hand",
    "PoseSample",
    "Calibration",
    "PoseClass",
    "TargetingMode",
    "TargetingRange",
    "TargetingPolicy",
    "JabEvent",
    "HitKind",
    "HitResult",
    "CellOutcome",
    "hand_velocity",
    "JabDetector",
    "detect_jab",
    "resolve_jab",
    "classify_weave_pose",
    "resolve_cell_pass",
    "load_pose_trace",
    "dump_pose_trace",
]

# Hand speed at or above this, reached from below, registers a jab.
JAB_SPEED_THRESHOLD = 1.0
# Per-hand dead time after a registered jab.
JAB_REFRACTORY = 0.25
# Finite-difference window for hand speed.
VELOCITY_WINDOW = 0.1
# Non-empowered punches connect only within arm's reach of the hand.
MELEE_RADIUS = 0.45
# Empowered precise targeting: the jab ray must pass this close to the centre.
PRECISE_RAY_TOLERANCE = 0.25

Vec3 = tuple[float, float, float]


class Hand(Enum):
    LEFT = "left"
    RIGHT = "right"


# Red viruses answer to the right hand, blue to the left.
HAND_FOR_VIRUS = {
    EntityKind.RED_VIRUS: Hand.RIGHT,
    EntityKind.BLUE_VIRUS: Hand.LEFT,
}


@dataclass(frozen=True, slots=True)
class PoseSample:
    """One 50 Hz tracker frame: head, both hands, and held buttons."""

    time: float
    head: Vec3
    left_hand: Vec3
    right_hand: Vec3
    buttons: frozenset[str] = frozenset()

    def hand(self, which: Hand) -> Vec3:
        return self.left_hand if which is Hand.LEFT else self.right_hand


@dataclass(frozen=True)
class Calibration:
    """Per-player reference captured standing upright at session start."""

    standing_head_height: float = 1.70
    squat_ratio: float = 0.75
    lean_threshold: float = 0.20


class PoseClass(Enum):
    STANDING = "standing"
    SQUAT = "squat"
    SQUAT_LEAN_LEFT = "squat_lean_left"
    SQUAT_LEAN_RIGHT = "squat_lean_right"


class TargetingMode(Enum):
    PRECISE = "precise"
    ROUGH = "rough"


class TargetingRange(Enum):
    SHORT = "short"
    MEDIUM = "medium"
    LONG = "long"


RANGE_METRES = {
    TargetingRange.SHORT: 5.0,
    TargetingRange.MEDIUM: 10.0,
    TargetingRange.LONG: 15.0,
}


@dataclass(frozen=True)
class TargetingPolicy:
    mode: TargetingMode = TargetingMode.ROUGH
    range: TargetingRange = TargetingRange.LONG

    @property
    def range_m(self) -> float:
        return RANGE_METRES[self.range]


@dataclass(frozen=True, slots=True)
class JabEvent:
    time: float
    hand: Hand
    hand_speed: float
    hand_pos: Vec3
    direction: Vec3


class HitKind(Enum):
    DESTROYED = "destroyed"
    WRONG_HAND = "wrong_hand"
    NO_TARGET = "no_target"


@dataclass(frozen=True, slots=True)
class HitResult:
    kind: HitKind
    entity_id: int | None = None


class CellOutcome(Enum):
    AVOIDED = "avoided"
    COLLIDED = "collided"


def hand_velocity(samples: Sequence[tuple[float, Vec3]]) -> tuple[float, Vec3]:
    """Backward finite difference across a sample window.

    Returns (speed, unit direction); an under-filled window or zero
    displacement yields speed 0 and a null direction.
    """
    if len(samples) < 2:
        return 0.0, (0.0, 0.0, 0.0)
    t0, p0 = samples[0]
    t1, p1 = samples[-1]
    elapsed = t1 - t0
    if elapsed <= 0.0:
        return 0.0, (0.0, 0.0, 0.0)
    dx = p1[0] - p0[0]
    dy = p1[1] - p0[1]
    dz = p1[2] - p0[2]
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    if dist == 0.0:
        return 0.0, (0.0, 0.0, 0.0)
    return dist / elapsed, (dx / dist, dy / dist, dz / dist)


class JabDetector:
    """Streaming threshold-crossing detector over both hands.

    Feed pose samples in time order; each call returns the jabs that fire
    on that frame (left hand reported before right).
    """

    def __init__(self, window: float = VELOCITY_WINDOW,
                 threshold: float = JAB_SPEED_THRESHOLD,
                 refractory: float = JAB_REFRACTORY) -> None:
        self.window = window
        self.threshold = threshold
        self.refractory = refractory
        self._history: dict[Hand, list[tuple[float, Vec3]]] = {
            Hand.LEFT: [],
            Hand.RIGHT: [],
        }
        self._prev_speed = {Hand.LEFT: 0.0, Hand.RIGHT: 0.0}
        self._last_fire = {Hand.LEFT: -math.inf, Hand.RIGHT: -math.inf}

    def update(self, sample: PoseSample) -> list[JabEvent]:
        events: list[JabEvent] = []
        now = sample.time
        horizon = now - self.window - 1e-9
        for hand in (Hand.LEFT, Hand.RIGHT):
            history = self._history[hand]
            history.append((now, sample.hand(hand)))
            while history and history[0][0] < horizon:
                history.pop(0)
            speed, direction = hand_velocity(history)
            rising = speed >= self.threshold and self._prev_speed[hand] < self.threshold
            clear = now - self._last_fire[hand] >= self.refractory - 1e-9
            if rising and clear:
                self._last_fire[hand] = now
                events.append(
                    JabEvent(
                        time=now,
                        hand=hand,
                        hand_speed=speed,
                        hand_pos=sample.hand(hand),
                        direction=direction,
                    )
                )
            self._prev_speed[hand] = speed
        return events


def detect_jab(stream: Iterable[PoseSample], **kwargs: float) -> JabEvent | None:
    """First jab found in a pose stream, or None."""
    detector = JabDetector(**kwargs)
    for sample in stream:
        events = detector.update(sample)
        if events:
            return events[0]
    return None


def _dist3(a: Vec3, b: Vec3) -> float:
    return math.sqrt(
        (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2
    )


def _ray_passes(origin: Vec3, direction: Vec3, centre: Vec3,
                tolerance: float) -> bool:
    """True if the forward ray comes within ``tolerance`` of ``centre``."""
    ox = centre[0] - origin[0]
    oy = centre[1] - origin[1]
    oz = centre[2] - origin[2]
    along = ox * direction[0] + oy * direction[1] + oz * direction[2]
    if along < 0.0:
        return False
    px = ox - along * direction[0]
    py = oy - along * direction[1]
    pz = oz - along * direction[2]
    return math.sqrt(px * px + py * py + pz * pz) <= tolerance


def resolve_jab(jab: JabEvent, world: WorldState, policy: TargetingPolicy,
                empowered: bool = False) -> HitResult:
    """Decide what a registered jab hits.

    Without empowerment the punch must physically reach a virus (melee
    radius around the hand).  Empowered rough targeting takes the nearest
    colour-matched virus inside the policy range; precise targeting
    additionally requires the jab ray to pass close to the virus centre.
    Candidates of only the wrong colour report WRONG_HAND and leave the
    virus in flight.
    """
    matching: list[tuple[float, int, Entity]] = []
    off_colour: list[tuple[float, int, Entity]] = []
    for entity in world.in_flight:
        if entity.kind not in VIRUS_KINDS:
            continue
        if empowered:
            distance = entity.position
            if distance > policy.range_m:
                continue
            if policy.mode is TargetingMode.PRECISE and not _ray_passes(
                jab.hand_pos, jab.direction, entity.centre(), PRECISE_RAY_TOLERANCE
            ):
                continue
        else:
            distance = _dist3(jab.hand_pos, entity.centre())
            if distance > MELEE_RADIUS:
                continue
        bucket = matching if HAND_FOR_VIRUS[entity.kind] is jab.hand else off_colour
        bucket.append((distance, entity.id, entity))
    if matching:
        _, _, target = min(matching, key=lambda item: (item[0], item[1]))
        return HitResult(HitKind.DESTROYED, target.id)
    if off_colour:
        return HitResult(HitKind.WRONG_HAND)
    return HitResult(HitKind.NO_TARGET)


def classify_weave_pose(sample: PoseSample, calibration: Calibration) -> PoseClass:
    """Squat plus lean classification from the head position alone.

    Leaning without squatting still counts as standing: cells only respect
    a duck.
    """
    head_x, head_y, _ = sample.head
    if head_y > calibration.squat_ratio * calibration.standing_head_height:
        return PoseClass.STANDING
    if head_x > calibration.lean_threshold:
        return PoseClass.SQUAT_LEAN_RIGHT
    if head_x < -calibration.lean_threshold:
        return PoseClass.SQUAT_LEAN_LEFT
    return PoseClass.SQUAT


# Poses that clear each cell geometry.
AVOIDING_POSES = {
    EntityKind.FLAT_CELL: frozenset(
        {PoseClass.SQUAT, PoseClass.SQUAT_LEAN_LEFT, PoseClass.SQUAT_LEAN_RIGHT}
    ),
    EntityKind.RIGHT_TILT_CELL: frozenset({PoseClass.SQUAT_LEAN_RIGHT}),
    EntityKind.LEFT_TILT_CELL: frozenset({PoseClass.SQUAT_LEAN_LEFT}),
}


def resolve_cell_pass(cell: Entity, pose: PoseClass) -> CellOutcome:
    """Outcome when a cell reaches the player plane under ``pose``."""
    try:
        avoiding = AVOIDING_POSES[cell.kind]
    except KeyError:
        raise ValueError(f"entity {cell.id} is not a cell: {cell.kind}") from None
    return CellOutcome.AVOIDED if pose in avoiding else CellOutcome.COLLIDED


def dump_pose_trace(samples: Iterable[PoseSample]) -> str:
    """Serialise samples one JSON object per line, fields in declared order."""
    lines = []
    for s in samples:
        record = {
            "time": s.time,
            "head": list(s.head),
            "left_hand": list(s.left_hand),
            "right_hand": list(s.right_hand),
            "buttons": sorted(s.buttons),
        }
        lines.append(json.dumps(record, separators=(",", ":")))
    return "\n".join(lines) + ("\n" if lines else "")


def load_pose_trace(text: str) -> list[PoseSample]:
    """Parse a JSON-lines pose trace produced by :func:`dump_pose_trace`."""
    samples = []
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        samples.append(
            PoseSample(
                time=float(record["time"]),
                head=tuple(record["head"]),
                left_hand=tuple(record["left_hand"]),
                right_hand=tuple(record["right_hand"]),
                buttons=frozenset(record.get("buttons", ())),
            )
        )
    return samples
