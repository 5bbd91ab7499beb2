"""Deterministic session loop, replay logs, and batch execution.

One session is 420 s at 50 Hz.  Every tick runs the same stage order:
phase lookup, controller update, spawning, player sampling, empowerment
bookkeeping, jab resolution, world advance with crossing resolution, then
physiology integration.  All randomness flows through one seeded
generator shared by the spawner and the synthetic player, so a seed plus
a config fully determines the log, byte for byte.

After the protocol ends the loop keeps resolving whatever is still in
flight (no spawns, no physiology, no activations) so that every spawned
entity reaches a terminal state and the conservation checks in the
summary hold exactly.
"""
from __future__ import annotations

import hashlib
import json
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .interaction import (
    Calibration,
    CellOutcome,
    HitKind,
    JabDetector,
    TargetingPolicy,
    classify_weave_pose,
    resolve_cell_pass,
    resolve_jab,
)
from .physiology import (
    DEFAULT_PID_GAINS,
    HEART_PRESETS,
    HeartRateParams,
    PhysioState,
    PidController,
    apply_modulation,
    hr_step,
    kcal_step,
    modulated_intensity,
)
from .playersim import PlayerProfile, SyntheticPlayer
from .progression import (
    ProgressionState,
    SummaryMetrics,
    activate_empowerment,
    is_empowered,
    on_cell_avoided,
    on_cell_collided,
    on_virus_destroyed,
    on_virus_missed,
    on_wrong_hand,
    summary,
    tick_empowerment,
)
from .protocol import (
    IDENTITY_MODULATION,
    PhaseKind,
    SESSION_DURATION,
    next_spawn,
    phase_at,
    spawn_params,
)
from .world import EntityStatus, WorldState, advance

__all__ = [
    "LOG_VERSION",
    "SessionConfig",
    "SessionResult",
    "TraceRow",
    "HeaderMismatchError",
    "ReplayReport",
    "config_digest",
    "run_session",
    "run_many",
    "metrics_from_log",
    "replay_verify",
]

LOG_VERSION = "1"

DEFAULT_SETPOINT = 150.0

# Upper bound on post-protocol ticks needed to flush the world: the
# slowest possible entity (5.7 m/s halved by modulation) covers the full
# corridor in well under this.
_DRAIN_TICK_CAP = 2000


@dataclass(frozen=True)
class SessionConfig:
    seed: int
    profile: PlayerProfile
    targeting: TargetingPolicy = TargetingPolicy()
    heart: HeartRateParams = HEART_PRESETS["regular"]
    pid_enabled: bool = True
    pid_gains: tuple[float, float, float] = DEFAULT_PID_GAINS
    hr_setpoint: float = DEFAULT_SETPOINT
    calibration: Calibration = Calibration()
    dt: float = 0.02
    duration: float = SESSION_DURATION

    def validate(self) -> None:
        self.profile.validate()
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.duration <= 0.0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        ticks = self.duration / self.dt
        if abs(ticks - round(ticks)) > 1e-9:
            raise ValueError(
                f"duration {self.duration} is not a whole number of "
                f"{self.dt} s steps"
            )
        if self.hr_setpoint <= 0.0:
            raise ValueError(f"hr_setpoint must be positive, got {self.hr_setpoint}")
        if self.heart.hr_rest >= self.heart.hr_max:
            raise ValueError("hr_rest must be below hr_max")


def config_digest(config: SessionConfig) -> str:
    """Hash of everything that shapes a run except the seed."""
    payload = {
        "version": LOG_VERSION,
        "dt": config.dt,
        "duration": config.duration,
        "profile": config.profile.to_dict(),
        "targeting": {
            "mode": config.targeting.mode.value,
            "range": config.targeting.range.value,
        },
        "heart": {
            "hr_rest": config.heart.hr_rest,
            "hr_max": config.heart.hr_max,
            "tau_rise": config.heart.tau_rise,
            "tau_decay": config.heart.tau_decay,
        },
        "pid": {
            "enabled": config.pid_enabled,
            "gains": list(config.pid_gains),
            "setpoint": config.hr_setpoint,
        },
        "calibration": {
            "standing_head_height": config.calibration.standing_head_height,
            "squat_ratio": config.calibration.squat_ratio,
            "lean_threshold": config.calibration.lean_threshold,
        },
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _fmt(value: object) -> str:
    # bool is an int subclass: test it first.
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, int):
        return str(value)
    if value is None:
        return "null"
    return json.dumps(value)


def _row(*pairs: tuple[str, object]) -> str:
    """One log line with a fixed key order, floats at six decimals."""
    body = ",".join(f"{json.dumps(key)}:{_fmt(val)}" for key, val in pairs)
    return "{" + body + "}"


@dataclass(frozen=True, slots=True)
class TraceRow:
    t: float
    hr: float
    kcal: float
    phase: str
    energy: int
    empowered: bool


@dataclass(frozen=True)
class SessionResult:
    config: SessionConfig
    digest: str
    metrics: SummaryMetrics
    lines: tuple[str, ...]
    trace: tuple[TraceRow, ...]

    def write_log(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.lines) + "\n", encoding="utf-8")


def run_session(config: SessionConfig,
                log_path: str | Path | None = None) -> SessionResult:
    """Run one full session and return its metrics, log, and trace."""
    config.validate()
    dt = config.dt
    gameplay_ticks = round(config.duration / dt)
    ticks_per_second = max(1, round(1.0 / dt))

    rng = random.Random(config.seed)
    world = WorldState()
    prog = ProgressionState()
    physio = PhysioState(hr=config.heart.hr_rest)
    player = SyntheticPlayer(
        config.profile, config.calibration, rng,
        dt=dt, policy=config.targeting,
    )
    detector = JabDetector()
    kp, ki, kd = config.pid_gains
    pid = PidController(kp=kp, ki=ki, kd=kd) if config.pid_enabled else None
    modulation = IDENTITY_MODULATION

    digest = config_digest(config)
    lines: list[str] = [
        _row(("type", "header"), ("version", LOG_VERSION),
             ("seed", config.seed), ("config", digest)),
    ]
    trace: list[TraceRow] = []
    viruses_spawned = 0
    cells_spawned = 0

    def log_hr(t: float, phase_kind: PhaseKind) -> None:
        hr_now = round(physio.hr, 6)
        kcal_now = round(physio.kcal, 6)
        row = TraceRow(t, hr_now, kcal_now, phase_kind.value,
                       prog.energy, is_empowered(prog, t))
        trace.append(row)
        lines.append(_row(
            ("type", "hr"), ("t", t), ("hr", hr_now), ("kcal", kcal_now),
            ("phase", row.phase), ("energy", row.energy),
            ("empowered", row.empowered),
        ))

    def log_phase(t: float, kind: PhaseKind, index: int) -> None:
        lines.append(_row(("type", "phase"), ("t", t),
                          ("phase", kind.value), ("index", index)))

    def resolve_crossings(crossings, sample, t: float) -> None:
        nonlocal pose_cache
        for entity in crossings:
            if entity.is_virus:
                world.retire(entity, EntityStatus.MISSED)
                on_virus_missed(prog)
                lines.append(_row(
                    ("type", "cross"), ("t", t), ("id", entity.id),
                    ("status", "missed"),
                ))
                continue
            if pose_cache is None:
                pose_cache = classify_weave_pose(sample, config.calibration)
            outcome = resolve_cell_pass(entity, pose_cache)
            if outcome is CellOutcome.AVOIDED:
                world.retire(entity, EntityStatus.PASSED)
                on_cell_avoided(prog)
            else:
                world.retire(entity, EntityStatus.COLLIDED)
                on_cell_collided(prog)
            lines.append(_row(
                ("type", "cross"), ("t", t), ("id", entity.id),
                ("status", outcome.value), ("pose", pose_cache.value),
            ))

    def resolve_jabs(sample, t: float) -> None:
        for jab in detector.update(sample):
            empowered = is_empowered(prog, t)
            result = resolve_jab(jab, world, config.targeting, empowered)
            if result.kind is HitKind.DESTROYED:
                target = world.entities[result.entity_id]
                world.retire(target, EntityStatus.DESTROYED)
                on_virus_destroyed(prog, t)
            elif result.kind is HitKind.WRONG_HAND:
                on_wrong_hand(prog)
            lines.append(_row(
                ("type", "jab"), ("t", t), ("hand", jab.hand.value),
                ("outcome", result.kind.value), ("entity", result.entity_id),
                ("speed", jab.hand_speed),
            ))

    phase = phase_at(0.0)
    prev_phase = (phase.kind, phase.index)
    log_phase(0.0, phase.kind, phase.index)
    pending = next_spawn(rng, 0.0, spawn_params(phase, modulation))

    for k in range(gameplay_ticks):
        t = k * dt
        phase = phase_at(t)
        if (phase.kind, phase.index) != prev_phase:
            prev_phase = (phase.kind, phase.index)
            log_phase(t, phase.kind, phase.index)
        if k % ticks_per_second == 0:
            log_hr(t, phase.kind)

        if pid is not None and phase.kind is PhaseKind.SPRINT:
            modulation = apply_modulation(
                pid.step(config.hr_setpoint, physio.hr, dt)
            )
        else:
            modulation = IDENTITY_MODULATION

        while pending.time <= t + 1e-9:
            entity = world.spawn(pending.kind, pending.time,
                                 pending.lane_offset, pending.speed)
            if entity.is_virus:
                viruses_spawned += 1
            else:
                cells_spawned += 1
            lines.append(_row(
                ("type", "spawn"), ("t", pending.time), ("id", entity.id),
                ("kind", entity.kind.value), ("lane", entity.lane_offset),
                ("speed", entity.speed),
            ))
            player.observe_spawn(entity, k, prog.empowered_until)
            pending = next_spawn(rng, pending.time,
                                 spawn_params(phase, modulation))

        sample = player.sample(k, phase.kind)
        pose_cache = None

        resolve_jabs(sample, t)
        resolve_crossings(advance(world, dt), sample, t)

        if tick_empowerment(prog, t):
            lines.append(_row(("type", "empower"), ("t", t),
                              ("action", "end"), ("until", None)))
        if activate_empowerment(prog, t, "A" in sample.buttons) is None:
            lines.append(_row(("type", "empower"), ("t", t),
                              ("action", "start"),
                              ("until", prog.empowered_until)))

        kcal_step(physio, dt)
        hr_step(
            physio,
            modulated_intensity(phase.kind, config.profile.effort, modulation),
            config.heart, dt,
        )

    t_end = gameplay_ticks * dt
    phase = phase_at(t_end)
    log_phase(t_end, phase.kind, phase.index)
    log_hr(t_end, phase.kind)

    # Flush the remaining traffic so every entity reaches a terminal
    # state.  The protocol is over: nothing spawns, physiology and the
    # controller are frozen, and no empowerment can start.
    k = gameplay_ticks
    t_final = t_end
    while world.in_flight and k < gameplay_ticks + _DRAIN_TICK_CAP:
        k += 1
        t_final = k * dt
        sample = player.sample(k, PhaseKind.ENDED)
        pose_cache = None
        resolve_jabs(sample, t_final)
        resolve_crossings(advance(world, dt), sample, t_final)
        if tick_empowerment(prog, t_final):
            lines.append(_row(("type", "empower"), ("t", t_final),
                              ("action", "end"), ("until", None)))
    if world.in_flight:
        raise RuntimeError(
            f"{len(world.in_flight)} entities still in flight after drain"
        )

    base = summary(prog, viruses_spawned, cells_spawned)
    hr_values = [row.hr for row in trace]
    metrics = replace(
        base,
        avg_hr=round(sum(hr_values) / len(hr_values), 6),
        max_hr=max(hr_values),
        kcal=trace[-1].kcal,
    )
    lines.append(_row(
        ("type", "end"), ("t", t_final),
        ("viruses_spawned", viruses_spawned),
        ("cells_spawned", cells_spawned),
        ("viruses_destroyed", metrics.viruses_destroyed),
        ("viruses_missed", metrics.viruses_missed),
        ("cells_avoided", metrics.cells_avoided),
        ("cells_collided", metrics.cells_collided),
        ("wrong_hand_jabs", metrics.wrong_hand_jabs),
        ("activations", metrics.activations),
    ))

    result = SessionResult(
        config=config,
        digest=digest,
        metrics=metrics,
        lines=tuple(lines),
        trace=tuple(trace),
    )
    if log_path is not None:
        result.write_log(log_path)
    return result


def run_many(configs: Sequence[SessionConfig],
             jobs: int | None = None) -> list[SessionResult]:
    """Run a batch of sessions, optionally across processes."""
    if jobs is None:
        jobs = int(os.environ.get("VIRUSBOXING_JOBS", "1"))
    if jobs <= 1 or len(configs) <= 1:
        return [run_session(config) for config in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_session, configs))


def metrics_from_log(lines: Iterable[str]) -> SummaryMetrics:
    """Rebuild the session metrics purely from a replay log.

    Counts events and folds the heart-rate rows exactly the way the
    runner does, so a faithful log reproduces the reported metrics.
    """
    viruses_spawned = 0
    cells_spawned = 0
    destroyed = 0
    missed = 0
    avoided = 0
    collided = 0
    wrong_hand = 0
    activations = 0
    hr_values: list[float] = []
    kcal_last: float | None = None
    for line in lines:
        line = line.strip()
        if not line:
            continue
        row = json.loads(line)
        kind = row.get("type")
        if kind == "spawn":
            if row["kind"].endswith("_virus"):
                viruses_spawned += 1
            else:
                cells_spawned += 1
        elif kind == "jab":
            if row["outcome"] == "destroyed":
                destroyed += 1
            elif row["outcome"] == "wrong_hand":
                wrong_hand += 1
        elif kind == "cross":
            status = row["status"]
            if status == "missed":
                missed += 1
            elif status == "avoided":
                avoided += 1
            elif status == "collided":
                collided += 1
        elif kind == "empower":
            if row["action"] == "start":
                activations += 1
        elif kind == "hr":
            hr_values.append(row["hr"])
            kcal_last = row["kcal"]
    miss_pct = 100.0 * missed / viruses_spawned if viruses_spawned else None
    cell_hit_pct = 100.0 * collided / cells_spawned if cells_spawned else None
    avg_hr = round(sum(hr_values) / len(hr_values), 6) if hr_values else None
    return SummaryMetrics(
        viruses_spawned=viruses_spawned,
        cells_spawned=cells_spawned,
        viruses_destroyed=destroyed,
        viruses_missed=missed,
        cells_avoided=avoided,
        cells_collided=collided,
        wrong_hand_jabs=wrong_hand,
        activations=activations,
        miss_pct=miss_pct,
        cell_hit_pct=cell_hit_pct,
        avg_hr=avg_hr,
        max_hr=max(hr_values) if hr_values else None,
        kcal=kcal_last,
    )


class HeaderMismatchError(Exception):
    """The log was produced under a different seed or configuration."""


@dataclass(frozen=True)
class ReplayReport:
    ok: bool
    lines_checked: int
    divergence_line: int | None = None
    expected: str | None = None
    actual: str | None = None


def _load_lines(source: str | Path | Iterable[str]) -> list[str]:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
        return [ln for ln in text.splitlines() if ln.strip()]
    return [ln.rstrip("\n") for ln in source if ln.strip()]


def replay_verify(source: str | Path | Iterable[str],
                  config: SessionConfig) -> ReplayReport:
    """Re-run the session for ``config`` and compare against a saved log.

    Raises HeaderMismatchError when the log does not even claim to come
    from this seed and configuration; otherwise reports the first
    diverging line, if any.
    """
    recorded = _load_lines(source)
    if not recorded:
        raise HeaderMismatchError("log is empty")
    try:
        header = json.loads(recorded[0])
    except json.JSONDecodeError as exc:
        raise HeaderMismatchError(f"unparseable header line: {exc}") from exc
    if header.get("type") != "header":
        raise HeaderMismatchError("first line is not a header row")
    if header.get("version") != LOG_VERSION:
        raise HeaderMismatchError(
            f"log version {header.get('version')!r}, expected {LOG_VERSION!r}"
        )
    if header.get("seed") != config.seed:
        raise HeaderMismatchError(
            f"log seed {header.get('seed')}, expected {config.seed}"
        )
    expected_digest = config_digest(config)
    if header.get("config") != expected_digest:
        raise HeaderMismatchError(
            f"log config digest {header.get('config')!r} does not match "
            f"{expected_digest!r}"
        )
    fresh = run_session(config).lines
    for i, (want, got) in enumerate(zip(fresh, recorded)):
        if want != got:
            return ReplayReport(False, i + 1, divergence_line=i + 1,
                                expected=want, actual=got)
    if len(fresh) != len(recorded):
        short = min(len(fresh), len(recorded))
        return ReplayReport(
            False, short, divergence_line=short + 1,
            expected=fresh[short] if short < len(fresh) else "<end of log>",
            actual=recorded[short] if short < len(recorded) else "<end of log>",
        )
    return ReplayReport(True, len(fresh))
