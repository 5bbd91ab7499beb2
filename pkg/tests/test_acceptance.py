"""Acceptance gate.

Each test enforces one numbered criterion end to end on the real engine
and prints a single PASS/FAIL line (A-1 .. A-10) straight to the
terminal, bypassing pytest capture, so a full run reads as a checklist.
Tolerances are pinned here and nowhere else.
"""
from __future__ import annotations

import dataclasses
import json
import math
import random
import statistics
import sys

from virusboxing.interaction import (
    TargetingMode,
    TargetingPolicy,
    TargetingRange,
)
from virusboxing.physiology import HEART_PRESETS
from virusboxing.playersim import load_profile
from virusboxing.progression import (
    ENERGY_CAPACITY,
    ProgressionState,
    activate_empowerment,
    is_empowered,
    on_virus_destroyed,
    tick_empowerment,
)
from virusboxing.protocol import (
    KIND_MIX,
    PhaseKind,
    phase_at,
    sample_kind,
    sprint_windows,
)
from virusboxing.session import (
    SessionConfig,
    metrics_from_log,
    replay_verify,
    run_session,
)
from virusboxing.world import (
    EntityKind,
    WorldState,
    advance,
    arrival_time,
    position_of,
)


DT = 0.02

PT = TargetingPolicy(TargetingMode.PRECISE, TargetingRange.LONG)
RT = TargetingPolicy(TargetingMode.ROUGH, TargetingRange.LONG)


def _report(criterion: str, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    print(f"{criterion} {verdict}: {detail}", file=sys.__stdout__, flush=True)
    assert ok, f"{criterion} {verdict}: {detail}"


def _study_config(seed: int, **overrides) -> SessionConfig:
    """The measurement setup: fixed pacing, no controller in the loop."""
    base = dict(
        seed=seed,
        profile=load_profile("mid_skill"),
        targeting=RT,
        pid_enabled=False,
    )
    base.update(overrides)
    return SessionConfig(**base)


def test_a01_phase_boundaries() -> None:
    table = [
        (0.0, PhaseKind.LOW), (30.0, PhaseKind.SPRINT),
        (120.0, PhaseKind.LOW), (150.0, PhaseKind.SPRINT),
        (240.0, PhaseKind.LOW), (270.0, PhaseKind.SPRINT),
        (360.0, PhaseKind.COOLDOWN), (420.0, PhaseKind.ENDED),
    ]
    ok = sprint_windows() == ((30.0, 120.0), (150.0, 240.0), (270.0, 360.0))
    worst = "all boundaries on exact ticks"
    for i, (boundary, kind) in enumerate(table):
        grid = boundary / DT
        if abs(grid - round(grid)) > 1e-12:
            ok, worst = False, f"boundary {boundary} off the tick grid"
        if phase_at(boundary).kind is not kind:
            ok, worst = False, f"phase_at({boundary}) != {kind}"
        if boundary + DT < 450.0 and phase_at(boundary + DT).kind is not kind:
            ok, worst = False, f"phase_at({boundary + DT}) != {kind}"
        if i > 0 and phase_at(boundary - DT).kind is not table[i - 1][1]:
            ok, worst = False, f"phase_at({boundary - DT}) leaked forward"
    _report("A-1", ok, f"8 boundaries checked at +/-{DT} s; {worst}")


def test_a02_kind_frequencies() -> None:
    draws = 200_000
    rng = random.Random(12345)
    counts: dict[str, int] = {}
    for _ in range(draws):
        kind = sample_kind(rng)
        counts[kind.value] = counts.get(kind.value, 0) + 1
    expected = {kind.value: share for kind, share in KIND_MIX}
    errors = {
        name: abs(counts.get(name, 0) / draws - share)
        for name, share in expected.items()
    }
    worst_name = max(errors, key=errors.get)
    ok = errors[worst_name] <= 0.01
    _report("A-2", ok,
            f"{draws} draws, worst |freq - share| = "
            f"{errors[worst_name]:.4f} ({worst_name}), tolerance 0.01")


def test_a03_determinism() -> None:
    rng = random.Random(20260819)
    profiles = ["mid_skill", "expert", "novice"]
    checked = 0
    failure = ""
    for _ in range(20):
        config = SessionConfig(
            seed=rng.randrange(1_000_000),
            profile=load_profile(rng.choice(profiles)),
            targeting=TargetingPolicy(
                rng.choice(list(TargetingMode)),
                rng.choice(list(TargetingRange)),
            ),
            heart=HEART_PRESETS[rng.choice(["regular", "sedentary"])],
            pid_enabled=rng.random() < 0.5,
            hr_setpoint=rng.uniform(130.0, 170.0),
        )
        first = run_session(config)
        second = run_session(config)
        if first.lines != second.lines:
            failure = f"seed {config.seed} diverged"
            break
        checked += 1
    _report("A-3", checked == 20,
            failure or f"{checked} random configs byte-identical across reruns")


def test_a04_progression_properties() -> None:
    rng = random.Random(4242)
    state = ProgressionState()
    now = 0.0
    activated_at: float | None = None
    steps = 20_000
    activations = 0
    ok, detail = True, ""
    for _ in range(steps):
        now += rng.choice([0.0, DT, 0.5, 3.0])
        expired = tick_empowerment(state, now)
        if expired and activated_at is not None:
            activated_at = None
        action = rng.random()
        if action < 0.55:
            before = state.energy
            empowered = is_empowered(state, now)
            on_virus_destroyed(state, now)
            if empowered and state.energy != before:
                ok, detail = False, f"energy changed while empowered at {now}"
                break
            if not empowered and before < ENERGY_CAPACITY \
                    and state.energy != before + 1:
                ok, detail = False, f"destroy did not add a point at {now}"
                break
        else:
            pressed = rng.random() < 0.7
            full = state.energy == ENERGY_CAPACITY
            empowered = is_empowered(state, now)
            refusal = activate_empowerment(state, now, pressed)
            succeeded = refusal is None
            if succeeded != (pressed and full and not empowered):
                ok, detail = False, f"activation rule broken at {now}"
                break
            if succeeded:
                activations += 1
                activated_at = now
                if state.energy != 0:
                    ok, detail = False, "activation did not drain the bar"
                    break
                if not is_empowered(state, now + 10.0 - 1e-6) \
                        or is_empowered(state, now + 10.0):
                    ok, detail = False, "window is not exactly 10 s right-open"
                    break
        if not 0 <= state.energy <= ENERGY_CAPACITY:
            ok, detail = False, f"energy {state.energy} out of bounds"
            break
    _report("A-4", ok,
            detail or f"{steps} random events, {activations} activations, "
                      f"all invariants held")


def test_a05_targeting_modes_change_misses() -> None:
    seeds = range(50)
    pt_miss = []
    rt_miss = []
    for seed in seeds:
        pt_miss.append(run_session(_study_config(seed, targeting=PT))
                       .metrics.miss_pct)
        rt_miss.append(run_session(_study_config(seed, targeting=RT))
                       .metrics.miss_pct)
    wins = sum(p > r for p, r in zip(pt_miss, rt_miss))
    pt_mean = statistics.fmean(pt_miss)
    rt_mean = statistics.fmean(rt_miss)
    ok = wins >= 48 and 14.0 <= pt_mean <= 24.0 and 5.0 <= rt_mean <= 10.0
    _report("A-5", ok,
            f"50 paired seeds: precise mean {pt_mean:.2f}% (need 14..24), "
            f"rough mean {rt_mean:.2f}% (need 5..10), "
            f"precise>rough in {wins}/50 (need >=48)")


def test_a06_expert_avoids_every_cell() -> None:
    worst = 0.0
    cells = 0
    for seed in range(20):
        m = run_session(_study_config(
            seed, profile=load_profile("expert"))).metrics
        worst = max(worst, m.cell_hit_pct)
        cells += m.cells_spawned
    ok = worst == 0.0
    _report("A-6", ok,
            f"20 seeds, {cells} cells faced, worst collision rate "
            f"{worst:.2f}% (need 0.00%)")


def test_a07_heart_rate_bands() -> None:
    brackets = {
        "regular": ((117.0, 127.0), (135.0, 145.0)),
        "sedentary": ((125.0, 135.0), (144.0, 154.0)),
    }
    sprint_ends = [end for _, end in sprint_windows()]
    ok, notes = True, []
    for name, ((avg_lo, avg_hi), (max_lo, max_hi)) in brackets.items():
        result = run_session(_study_config(0, heart=HEART_PRESETS[name]))
        m = result.metrics
        trace = result.trace
        peaks = [
            trace[i].t for i in range(1, len(trace) - 1)
            if trace[i - 1].hr < trace[i].hr > trace[i + 1].hr
        ]
        aligned = (
            len(peaks) == 3
            and all(abs(peak - end) <= 10.0
                    for peak, end in zip(peaks, sprint_ends))
        )
        good = (avg_lo <= m.avg_hr <= avg_hi
                and max_lo <= m.max_hr <= max_hi
                and 38.0 <= m.kcal <= 50.0
                and aligned)
        ok = ok and good
        notes.append(
            f"{name}: avg {m.avg_hr:.1f} (need {avg_lo:.0f}..{avg_hi:.0f}), "
            f"max {m.max_hr:.1f} (need {max_lo:.0f}..{max_hi:.0f}), "
            f"kcal {m.kcal:.1f} (need 38..50), "
            f"peaks at {[f'{p:.0f}' for p in peaks]}"
        )
    _report("A-7", ok, "; ".join(notes))


def test_a08_pid_tracks_setpoint() -> None:
    setpoint = 150.0
    result = run_session(SessionConfig(
        seed=0, profile=load_profile("mid_skill"), targeting=RT,
        pid_enabled=True, hr_setpoint=setpoint,
    ))
    hr_at = {row.t: row.hr for row in result.trace}
    windows = sprint_windows()[1:]  # the first window is settling time
    ok, notes = True, []
    for start, end in windows:
        end_err = abs(hr_at[end] - setpoint)
        tail_err = max(abs(hr_at[float(s)] - setpoint)
                       for s in range(int(end) - 45, int(end) + 1))
        good = end_err <= 5.0 and tail_err <= 5.0
        ok = ok and good
        notes.append(f"window {start:.0f}-{end:.0f}: end error "
                     f"{end_err:.2f} bpm, worst over final 45 s "
                     f"{tail_err:.2f} bpm (need <=5)")
    speeds = [json.loads(line)["speed"] for line in result.lines
              if '"type":"spawn"' in line]
    scales = sorted({s / 8.0 for s in speeds if s != 5.7})
    bounded = all(0.5 - 1e-9 <= s <= 2.0 + 1e-9 for s in scales)
    ok = ok and bounded and len(scales) > 10
    notes.append(f"modulation scale range [{scales[0]:.2f}, {scales[-1]:.2f}]"
                 f" (need within [0.50, 2.00])")
    _report("A-8", ok, "; ".join(notes))


def test_a09_kinematics_match_closed_form() -> None:
    rng = random.Random(99)
    worst = 0.0
    travel_exact = True
    for _ in range(1000):
        world = WorldState()
        speed = rng.uniform(2.85, 16.0)
        # events land between ticks, exactly as the spawner produces them
        tick = rng.randrange(0, 21000)
        world.sim_time = tick * DT
        spawn_time = world.sim_time - rng.random() * 0.5
        entity = world.spawn(
            rng.choice(list(EntityKind)), spawn_time=spawn_time,
            lane_offset=rng.uniform(-0.5, 0.5), speed=speed,
        )
        if arrival_time(entity) != spawn_time + 15.0 / speed:
            travel_exact = False
        steps = rng.randrange(1, 200)
        for i in range(steps):
            advance(world, DT)
            analytic = position_of(entity, (tick + i + 1) * DT)
            worst = max(worst, abs(entity.position - analytic))
            if entity.position <= 0.0:
                break
    ok = worst <= 1e-9 and travel_exact
    _report("A-9", ok,
            f"1000 random entities: max |stepped - closed form| = "
            f"{worst:.2e} (need <=1e-9), travel time 15/speed exact: "
            f"{travel_exact}")


def test_a10_logs_reconstruct_the_session() -> None:
    configs = [
        _study_config(0),
        _study_config(1, targeting=PT),
        _study_config(2, profile=load_profile("novice")),
        SessionConfig(seed=3, profile=load_profile("mid_skill"),
                      targeting=RT, pid_enabled=True),
    ]
    ok, notes = True, []
    for config in configs:
        result = run_session(config)
        m = result.metrics
        conserved = (
            m.viruses_destroyed + m.viruses_missed == m.viruses_spawned
            and m.cells_avoided + m.cells_collided == m.cells_spawned
        )
        rebuilt = metrics_from_log(result.lines) == m
        verified = replay_verify(result.lines, config).ok
        ok = ok and conserved and rebuilt and verified
        notes.append(f"seed {config.seed}: conserved={conserved} "
                     f"rebuilt={rebuilt} replay={verified}")
    _report("A-10", ok, "; ".join(notes))
