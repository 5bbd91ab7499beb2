"""Synthetic players: skill profiles and 50 Hz pose-stream generation.

A profile reacts to each spawn with a scripted plan.  Viruses get a jab
plan: the hand (sometimes the wrong one), a punch speed drawn from a
truncated normal, and an aim point blurred by per-axis error.  Cells get
a weave plan held around the predicted crossing step, or nothing when the
reliability draw fails.

Jab choreography is built so the detector fires on the intended tick: the
hand repositions below the jab threshold, holds still for one full
velocity window, then strikes at the drawn speed.  With a clean window the
crossing lands ``ceil(window / (dt * speed))`` ticks into the strike, so
the strike is scheduled backwards from the desired detection tick.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable

from .interaction import (
    Calibration,
    HAND_FOR_VIRUS,
    Hand,
    JAB_REFRACTORY,
    PoseClass,
    PoseSample,
    TargetingPolicy,
    VELOCITY_WINDOW,
)
from .protocol import PhaseKind
from .world import Entity, EntityKind, FLIGHT_HEIGHT, arrival_time

__all__ = [
    "EmpowerPolicy",
    "PlayerProfile",
    "JabPlan",
    "WeavePlan",
    "SyntheticPlayer",
    "plan_reaction",
    "generate_stream",
    "load_profile",
    "builtin_profiles",
]

Vec3 = tuple[float, float, float]

# Resting hand positions either side of the chest.
GUARD_LEFT: Vec3 = (-0.18, 1.35, 0.30)
GUARD_RIGHT: Vec3 = (0.18, 1.35, 0.30)

# Sub-threshold motion caps: repositioning and retracting must never fire
# the jab detector on their own.
REPOSITION_SPEED = 0.9
RETRACT_SPEED = 0.7

# Melee punches are timed for the instant the virus reaches arm's length.
CONTACT_REACH = 0.45

# A weave pose is held from well before the predicted crossing step until
# just after it, absorbing one-step prediction error either way.
WEAVE_LEAD_TICKS = 15
WEAVE_LAG_TICKS = 5

# Head drop/lean margins past the calibration thresholds.
SQUAT_DEPTH_MARGIN = 0.05
LEAN_MARGIN = 0.05

# Slowest strike worth scripting: cap the detection-lead tick count.
_MAX_STRIKE_TICKS = 25


class EmpowerPolicy(Enum):
    ACTIVATE_IMMEDIATELY = "activate_immediately"
    NEVER = "never"
    DURING_SPRINT_ONLY = "during_sprint_only"


@dataclass(frozen=True)
class PlayerProfile:
    name: str
    reaction_time: float
    punch_speed_mean: float
    punch_speed_sd: float
    aim_error_sd: float
    correct_hand_prob: float
    weave_reliability: float
    empower_policy: EmpowerPolicy
    effort: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "reaction_time": self.reaction_time,
            "punch_speed_mean": self.punch_speed_mean,
            "punch_speed_sd": self.punch_speed_sd,
            "aim_error_sd": self.aim_error_sd,
            "correct_hand_prob": self.correct_hand_prob,
            "weave_reliability": self.weave_reliability,
            "empower_policy": self.empower_policy.value,
            "effort": self.effort,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlayerProfile":
        return cls(
            name=str(data["name"]),
            reaction_time=float(data["reaction_time"]),
            punch_speed_mean=float(data["punch_speed_mean"]),
            punch_speed_sd=float(data["punch_speed_sd"]),
            aim_error_sd=float(data["aim_error_sd"]),
            correct_hand_prob=float(data["correct_hand_prob"]),
            weave_reliability=float(data["weave_reliability"]),
            empower_policy=EmpowerPolicy(data["empower_policy"]),
            effort=float(data["effort"]),
        )

    def validate(self) -> None:
        if self.reaction_time < 0:
            raise ValueError(f"reaction_time must be >= 0, got {self.reaction_time}")
        if self.punch_speed_mean < 0 or self.punch_speed_sd < 0:
            raise ValueError("punch speed mean and sd must be >= 0")
        if self.aim_error_sd < 0:
            raise ValueError(f"aim_error_sd must be >= 0, got {self.aim_error_sd}")
        for label, p in (
            ("correct_hand_prob", self.correct_hand_prob),
            ("weave_reliability", self.weave_reliability),
        ):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{label} must lie in [0, 1], got {p}")
        if not 0.0 < self.effort <= 1.0:
            raise ValueError(f"effort must lie in (0, 1], got {self.effort}")


def builtin_profiles() -> list[str]:
    """Names of the profiles shipped with the package."""
    pkg = resources.files(__package__) / "profiles"
    return sorted(p.name[: -len(".json")] for p in pkg.iterdir()
                  if p.name.endswith(".json"))


def load_profile(name_or_path: str) -> PlayerProfile:
    """Load a shipped profile by name, or any profile from a JSON path."""
    candidate = resources.files(__package__) / "profiles" / f"{name_or_path}.json"
    if candidate.is_file():
        data = json.loads(candidate.read_text())
    else:
        path = Path(name_or_path)
        if not path.is_file():
            raise FileNotFoundError(
                f"no such profile: {name_or_path!r} "
                f"(built-ins: {', '.join(builtin_profiles())})"
            )
        data = json.loads(path.read_text())
    profile = PlayerProfile.from_dict(data)
    profile.validate()
    return profile


@dataclass(frozen=True, slots=True)
class JabPlan:
    entity_id: int
    hand: Hand
    strike_tick: int
    speed: float
    aim: Vec3
    ranged: bool
    seq: int = 0


@dataclass(frozen=True, slots=True)
class WeavePlan:
    entity_id: int
    pose: PoseClass
    cross_tick: int


_AVOIDANCE_POSE = {
    EntityKind.FLAT_CELL: PoseClass.SQUAT,
    EntityKind.RIGHT_TILT_CELL: PoseClass.SQUAT_LEAN_RIGHT,
    EntityKind.LEFT_TILT_CELL: PoseClass.SQUAT_LEAN_LEFT,
}


def _other_hand(hand: Hand) -> Hand:
    return Hand.LEFT if hand is Hand.RIGHT else Hand.RIGHT


def plan_reaction(profile: PlayerProfile, entity: Entity, rng: random.Random, *,
                  now_tick: int, dt: float = 0.02,
                  policy: TargetingPolicy = TargetingPolicy(),
                  empowered_until: float | None = None,
                  seq: int = 0) -> JabPlan | WeavePlan | None:
    """Scripted reaction to one spawn.

    Draw order per virus is fixed (hand, speed, three aim axes) and per
    cell is one reliability draw, so replay streams stay aligned whatever
    the plan turns into.
    """
    now_t = now_tick * dt
    if entity.is_virus:
        u_hand = rng.random()
        speed = max(0.0, rng.normalvariate(profile.punch_speed_mean,
                                           profile.punch_speed_sd))
        err_x = rng.normalvariate(0.0, profile.aim_error_sd)
        err_y = rng.normalvariate(0.0, profile.aim_error_sd)
        err_z = rng.normalvariate(0.0, profile.aim_error_sd)
        correct = HAND_FOR_VIRUS[entity.kind]
        hand = correct if u_hand < profile.correct_hand_prob else _other_hand(correct)

        # Empowered play punches as soon as the virus is inside the policy
        # range; otherwise wait for melee reach, anticipating the arrival.
        enter = entity.spawn_time + max(
            0.0, (entity.spawn_z - policy.range_m) / entity.speed
        )
        strike_t = max(enter + profile.reaction_time, now_t + dt)
        strike_tick = math.ceil(strike_t / dt - 1e-9)
        ranged = empowered_until is not None and strike_tick * dt < empowered_until
        if not ranged:
            reach_t = entity.spawn_time + (
                (entity.spawn_z - CONTACT_REACH) / entity.speed
            )
            strike_t = max(reach_t, now_t + profile.reaction_time, now_t + dt)
            strike_tick = math.ceil(strike_t / dt - 1e-9)
        aim_time = strike_tick * dt
        z_pred = entity.spawn_z - entity.speed * (aim_time - entity.spawn_time)
        aim = (
            entity.lane_offset + err_x,
            FLIGHT_HEIGHT + err_y,
            z_pred + err_z,
        )
        return JabPlan(entity.id, hand, strike_tick, speed, aim, ranged, seq)

    if rng.random() >= profile.weave_reliability:
        return None
    cross_tick = math.ceil(arrival_time(entity) / dt - 1e-9) - 1
    return WeavePlan(entity.id, _AVOIDANCE_POSE[entity.kind], cross_tick)


def _lerp(a: Vec3, b: Vec3, f: float) -> Vec3:
    return (
        a[0] + f * (b[0] - a[0]),
        a[1] + f * (b[1] - a[1]),
        a[2] + f * (b[2] - a[2]),
    )


def _dist(a: Vec3, b: Vec3) -> float:
    return math.sqrt(
        (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2
    )


def _strike_ticks(speed: float, dt: float) -> int:
    """Ticks from strike start until the windowed speed reaches the strike
    speed's detection point, assuming a still hand beforehand."""
    if speed <= 0.0:
        return 1
    return min(_MAX_STRIKE_TICKS, math.ceil(VELOCITY_WINDOW / (dt * speed) - 1e-9))


class _HandTrack:
    """Piecewise-linear future trajectory for one hand.

    Pending jab plans are kept sorted by strike tick and the knot chain is
    rebuilt on every insertion; a new plan whose choreography cannot
    coexist with a pending one preempts it (highest seq wins).
    """

    def __init__(self, guard: Vec3, dt: float) -> None:
        self.guard = guard
        self.dt = dt
        self.knots: list[tuple[float, Vec3]] = [(0.0, guard)]
        self.plans: list[JabPlan] = []
        self._ptr = 0

    def position_at(self, t: float) -> Vec3:
        knots = self.knots
        i = self._ptr
        last = len(knots) - 1
        while i < last and knots[i + 1][0] <= t:
            i += 1
        self._ptr = i
        t0, p0 = knots[i]
        if i == last or t <= t0:
            return p0
        t1, p1 = knots[i + 1]
        return _lerp(p0, p1, (t - t0) / (t1 - t0))

    def add(self, plan: JabPlan, now_tick: int) -> None:
        self.plans = [p for p in self.plans if p.strike_tick > now_tick]
        self.plans.append(plan)
        self.plans.sort(key=lambda p: (p.strike_tick, p.seq))
        survivors: list[JabPlan] = []
        for p in self.plans:
            keep = True
            while survivors and self._conflicts(survivors[-1], p):
                if p.seq > survivors[-1].seq:
                    survivors.pop()
                else:
                    keep = False
                    break
            if keep:
                survivors.append(p)
        self.plans = survivors
        self._rebuild(now_tick)

    def _conflicts(self, first: JabPlan, second: JabPlan) -> bool:
        spacing = (second.strike_tick - first.strike_tick) * self.dt
        if spacing < JAB_REFRACTORY - 1e-9:
            return True
        # The later strike's hold window must start after the earlier
        # strike has finished.
        prep = _strike_ticks(second.speed, self.dt) * self.dt + VELOCITY_WINDOW
        return spacing < prep - 1e-9

    def _append(self, knots: list[tuple[float, Vec3]], t: float,
                pos: Vec3) -> None:
        if t > knots[-1][0] + 1e-12:
            knots.append((t, pos))

    def _rebuild(self, now_tick: int) -> None:
        now_t = now_tick * self.dt
        pos_now = self.position_at(now_t)
        knots: list[tuple[float, Vec3]] = [(now_t, pos_now)]
        t_free, p_free = now_t, pos_now
        for plan in self.plans:
            k = _strike_ticks(plan.speed, self.dt)
            strike_end_t = plan.strike_tick * self.dt
            strike_start = max(t_free, strike_end_t - k * self.dt)
            hold_start = max(t_free, strike_start - VELOCITY_WINDOW)

            if plan.ranged:
                launch = p_free
            else:
                d_strike = plan.speed * (strike_end_t - strike_start)
                gap = _dist(p_free, plan.aim)
                if gap > d_strike:
                    launch = _lerp(p_free, plan.aim, (gap - d_strike) / gap)
                else:
                    launch = p_free
            avail = hold_start - t_free
            need = _dist(p_free, launch)
            if need > 1e-12 and avail > 0.0:
                duration = need / REPOSITION_SPEED
                if duration <= avail:
                    self._append(knots, t_free + duration, launch)
                else:
                    launch = _lerp(p_free, launch,
                                   avail * REPOSITION_SPEED / need)
                    self._append(knots, hold_start, launch)
            else:
                launch = p_free
            self._append(knots, strike_start, launch)

            if plan.speed > 0.0 and strike_end_t > strike_start:
                gap = _dist(launch, plan.aim)
                if gap > 1e-12:
                    direction = _lerp((0.0, 0.0, 0.0),
                                      (plan.aim[0] - launch[0],
                                       plan.aim[1] - launch[1],
                                       plan.aim[2] - launch[2]), 1.0 / gap)
                else:
                    direction = (0.0, 0.0, 1.0)
                travel = plan.speed * (strike_end_t - strike_start)
                end_pos = (
                    launch[0] + travel * direction[0],
                    launch[1] + travel * direction[1],
                    launch[2] + travel * direction[2],
                )
                self._append(knots, strike_end_t, end_pos)
                t_free, p_free = strike_end_t, end_pos
            else:
                t_free, p_free = strike_start, launch
        back = _dist(p_free, self.guard)
        if back > 1e-12:
            self._append(knots, t_free + back / RETRACT_SPEED, self.guard)
        self.knots = knots
        self._ptr = 0


@dataclass(slots=True)
class _WeaveWindow:
    start: int
    end: int
    cross_tick: int
    pose: PoseClass
    entity_id: int
    tilted: bool


_BUTTON_A = frozenset({"A"})
_NO_BUTTONS: frozenset[str] = frozenset()


class SyntheticPlayer:
    """Streaming pose generator driven by per-spawn plans."""

    def __init__(self, profile: PlayerProfile, calibration: Calibration,
                 rng: random.Random, *, dt: float = 0.02,
                 policy: TargetingPolicy = TargetingPolicy()) -> None:
        profile.validate()
        self.profile = profile
        self.calibration = calibration
        self.rng = rng
        self.dt = dt
        self.policy = policy
        self._seq = 0
        self._hands = {
            Hand.LEFT: _HandTrack(GUARD_LEFT, dt),
            Hand.RIGHT: _HandTrack(GUARD_RIGHT, dt),
        }
        height = calibration.standing_head_height
        squat_y = (calibration.squat_ratio - SQUAT_DEPTH_MARGIN) * height
        lean_x = calibration.lean_threshold + LEAN_MARGIN
        self._head_for = {
            PoseClass.STANDING: (0.0, height, 0.0),
            PoseClass.SQUAT: (0.0, squat_y, 0.0),
            PoseClass.SQUAT_LEAN_LEFT: (-lean_x, squat_y, 0.0),
            PoseClass.SQUAT_LEAN_RIGHT: (lean_x, squat_y, 0.0),
        }
        self._weaves: list[_WeaveWindow] = []
        self._active: list[_WeaveWindow] = []
        self._wptr = 0

    def observe_spawn(self, entity: Entity, now_tick: int,
                      empowered_until: float | None) -> None:
        """React to a spawn: draw the plan and schedule its motion."""
        plan = plan_reaction(
            self.profile, entity, self.rng,
            now_tick=now_tick, dt=self.dt, policy=self.policy,
            empowered_until=empowered_until, seq=self._seq,
        )
        self._seq += 1
        self.inject(plan, now_tick)

    def inject(self, plan: JabPlan | WeavePlan | None, now_tick: int) -> None:
        if plan is None:
            return
        if isinstance(plan, JabPlan):
            self._hands[plan.hand].add(plan, now_tick)
            return
        window = _WeaveWindow(
            start=plan.cross_tick - WEAVE_LEAD_TICKS,
            end=plan.cross_tick + WEAVE_LAG_TICKS,
            cross_tick=plan.cross_tick,
            pose=plan.pose,
            entity_id=plan.entity_id,
            tilted=plan.pose is not PoseClass.SQUAT,
        )
        # Windows always start in the future, so insertion stays in the
        # unconsumed tail and the activation pointer remains valid.
        self._weaves.append(window)
        i = len(self._weaves) - 1
        while i > 0 and self._weaves[i - 1].start > window.start:
            self._weaves[i] = self._weaves[i - 1]
            i -= 1
        self._weaves[i] = window

    def _pose_requirement(self, tick: int) -> PoseClass:
        weaves = self._weaves
        while self._wptr < len(weaves) and weaves[self._wptr].start <= tick:
            self._active.append(weaves[self._wptr])
            self._wptr += 1
        if not self._active:
            return PoseClass.STANDING
        self._active = [w for w in self._active if w.end >= tick]
        best: _WeaveWindow | None = None
        best_key = None
        for w in self._active:
            key = (not w.tilted, abs(tick - w.cross_tick), w.entity_id)
            if best_key is None or key < best_key:
                best, best_key = w, key
        if best is None:
            return PoseClass.STANDING
        # A tilted duck also clears flat cells, so it can stand in for a
        # plain squat, never the other way round.
        return best.pose

    def sample(self, tick: int, phase_kind: PhaseKind) -> PoseSample:
        t = tick * self.dt
        head = self._head_for[self._pose_requirement(tick)]
        left = self._hands[Hand.LEFT].position_at(t)
        right = self._hands[Hand.RIGHT].position_at(t)
        policy = self.profile.empower_policy
        if policy is EmpowerPolicy.NEVER:
            buttons = _NO_BUTTONS
        elif policy is EmpowerPolicy.DURING_SPRINT_ONLY:
            buttons = _BUTTON_A if phase_kind is PhaseKind.SPRINT else _NO_BUTTONS
        else:
            buttons = _BUTTON_A
        return PoseSample(t, head, left, right, buttons)


def generate_stream(profile: PlayerProfile,
                    plans: Iterable[JabPlan | WeavePlan | None],
                    ticks: int, *, dt: float = 0.02,
                    calibration: Calibration | None = None,
                    policy: TargetingPolicy = TargetingPolicy(),
                    phase_kind: PhaseKind = PhaseKind.LOW) -> list[PoseSample]:
    """Realise a fixed set of plans as a standalone 50 Hz pose stream."""
    player = SyntheticPlayer(
        profile, calibration or Calibration(), random.Random(0),
        dt=dt, policy=policy,
    )
    for plan in plans:
        player.inject(plan, 0)
    return [player.sample(tick, phase_kind) for tick in range(ticks)]
