"""Command line front end: run sessions and verify replay logs.

``virusboxing run`` executes one seed or a seed range and writes
summaries, replay logs, and per-second traces; ``virusboxing verify``
re-runs a config against a saved log and reports the first divergence.

Exit codes: run returns 0 on success, 2 for configuration problems, 3
for runtime failures.  verify returns 0 on a byte-identical match, 1 on
divergence, 2 when the log header does not match the configuration.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from .interaction import TargetingMode, TargetingPolicy, TargetingRange
from .physiology import DEFAULT_PID_GAINS, HEART_PRESETS, HeartRateParams
from .playersim import PlayerProfile, builtin_profiles, load_profile
from .session import (
    DEFAULT_SETPOINT,
    HeaderMismatchError,
    SessionConfig,
    SessionResult,
    replay_verify,
    run_many,
)

__all__ = ["main", "build_parser"]

_TARGETING_MODES = {"pt": TargetingMode.PRECISE, "rt": TargetingMode.ROUGH}
_RANGES = {
    "short": TargetingRange.SHORT,
    "medium": TargetingRange.MEDIUM,
    "long": TargetingRange.LONG,
}

TRACE_FIELDS = ("time", "hr", "kcal", "phase", "energy", "empowered")
SUMMARY_FIELDS = (
    "seed", "viruses_spawned", "cells_spawned", "viruses_destroyed",
    "viruses_missed", "cells_avoided", "cells_collided", "wrong_hand_jabs",
    "activations", "miss_pct", "cell_hit_pct", "avg_hr", "max_hr", "kcal",
)


class ConfigError(Exception):
    """Bad flag combination, config file, or profile reference."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="virusboxing",
        description="Deterministic boxing exergame session simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one seed or a seed range")
    run.add_argument("--config", metavar="FILE",
                     help="JSON file with base settings; flags override it")
    seeds = run.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, help="single session seed")
    seeds.add_argument("--seeds", metavar="A..B",
                       help="inclusive seed range, e.g. 0..49")
    run.add_argument("--profile", metavar="NAME",
                     help="built-in profile name or JSON path "
                          f"(built-ins: {', '.join(builtin_profiles())})")
    run.add_argument("--targeting", choices=sorted(_TARGETING_MODES),
                     help="empowered targeting mode: pt (precise) or rt (rough)")
    run.add_argument("--range", choices=sorted(_RANGES), dest="range_",
                     metavar="RANGE",
                     help="empowered targeting range: short, medium, or long")
    run.add_argument("--heart", metavar="PRESET",
                     help=f"heart model preset ({', '.join(sorted(HEART_PRESETS))})")
    run.add_argument("--pid", choices=("on", "off"),
                     help="difficulty controller during sprints")
    run.add_argument("--setpoint", type=float,
                     help="controller heart-rate target in bpm")
    run.add_argument("--out", metavar="DIR",
                     help="write summaries, replay logs, and traces here")
    run.add_argument("--format", choices=("json", "csv"), default="json",
                     help="summary file format (default json)")
    run.add_argument("--jobs", type=int,
                     help="worker processes for seed ranges (default 1)")

    verify = sub.add_parser("verify", help="check a replay log against a config")
    verify.add_argument("log", metavar="LOG", help="replay log to verify")
    verify.add_argument("--config", metavar="FILE",
                        help="JSON file with the settings that produced the log")
    verify.add_argument("--seed", type=int,
                        help="seed override (default: taken from the log header)")
    verify.add_argument("--profile", metavar="NAME")
    verify.add_argument("--targeting", choices=sorted(_TARGETING_MODES))
    verify.add_argument("--range", choices=sorted(_RANGES), dest="range_",
                        metavar="RANGE")
    verify.add_argument("--heart", metavar="PRESET")
    verify.add_argument("--pid", choices=("on", "off"))
    verify.add_argument("--setpoint", type=float)
    return parser


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def _resolve_profile(ref: object) -> PlayerProfile:
    if isinstance(ref, dict):
        try:
            profile = PlayerProfile.from_dict(ref)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad inline profile: {exc}") from exc
        profile.validate()
        return profile
    if isinstance(ref, str):
        try:
            return load_profile(ref)
        except (FileNotFoundError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError(f"profile must be a name or an object, got {type(ref).__name__}")


def _resolve_heart(ref: object) -> HeartRateParams:
    if isinstance(ref, str):
        try:
            return HEART_PRESETS[ref]
        except KeyError as exc:
            raise ConfigError(
                f"unknown heart preset {ref!r} "
                f"(expected one of: {', '.join(sorted(HEART_PRESETS))})"
            ) from exc
    if isinstance(ref, dict):
        try:
            return HeartRateParams(**{k: float(v) for k, v in ref.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad heart parameters: {exc}") from exc
    raise ConfigError("heart must be a preset name or a parameter object")


def _parse_seeds(args: argparse.Namespace, file_cfg: dict) -> list[int]:
    if getattr(args, "seeds", None):
        text = args.seeds
        parts = text.split("..")
        if len(parts) != 2:
            raise ConfigError(f"--seeds expects A..B, got {text!r}")
        try:
            lo, hi = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ConfigError(f"--seeds expects integers, got {text!r}") from exc
        if hi < lo:
            raise ConfigError(f"--seeds range is empty: {text}")
        return list(range(lo, hi + 1))
    if args.seed is not None:
        return [args.seed]
    if "seed" in file_cfg:
        return [int(file_cfg["seed"])]
    return [0]


def _build_config(args: argparse.Namespace, file_cfg: dict,
                  seed: int) -> SessionConfig:
    profile_ref = args.profile or file_cfg.get("profile", "mid_skill")
    profile = _resolve_profile(profile_ref)

    mode_key = args.targeting or file_cfg.get("targeting", "rt")
    if mode_key not in _TARGETING_MODES:
        raise ConfigError(f"unknown targeting mode {mode_key!r}")
    range_key = args.range_ or file_cfg.get("range", "long")
    if range_key not in _RANGES:
        raise ConfigError(f"unknown targeting range {range_key!r}")
    targeting = TargetingPolicy(mode=_TARGETING_MODES[mode_key],
                                range=_RANGES[range_key])

    heart = _resolve_heart(args.heart or file_cfg.get("heart", "regular"))

    if args.pid is not None:
        pid_enabled = args.pid == "on"
    else:
        pid_enabled = bool(file_cfg.get("pid", True))
    setpoint = (args.setpoint if args.setpoint is not None
                else float(file_cfg.get("setpoint", DEFAULT_SETPOINT)))
    gains = file_cfg.get("pid_gains", DEFAULT_PID_GAINS)
    if not (isinstance(gains, (list, tuple)) and len(gains) == 3):
        raise ConfigError("pid_gains must be a list of three numbers")

    config = SessionConfig(
        seed=seed,
        profile=profile,
        targeting=targeting,
        heart=heart,
        pid_enabled=pid_enabled,
        pid_gains=tuple(float(g) for g in gains),
        hr_setpoint=setpoint,
    )
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return config


def _summary_dict(result: SessionResult) -> dict:
    data = {"seed": result.config.seed}
    data.update(asdict(result.metrics))
    data["config"] = result.digest
    return data


def _write_trace(result: SessionResult, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for row in result.trace:
            writer.writerow([
                f"{row.t:.6f}", f"{row.hr:.6f}", f"{row.kcal:.6f}",
                row.phase, row.energy, str(row.empowered).lower(),
            ])


def _csv_value(value: object) -> object:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return value


def _write_outputs(results: list[SessionResult], out_dir: Path,
                   fmt: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for result in results:
        seed = result.config.seed
        result.write_log(out_dir / f"replay_{seed}.jsonl")
        _write_trace(result, out_dir / f"trace_{seed}.csv")
        summary = _summary_dict(result)
        if fmt == "json":
            (out_dir / f"summary_{seed}.json").write_text(
                json.dumps(summary, indent=2) + "\n", encoding="utf-8"
            )
        else:
            with (out_dir / f"summary_{seed}.csv").open(
                "w", newline="", encoding="utf-8"
            ) as fh:
                writer = csv.writer(fh)
                writer.writerow(SUMMARY_FIELDS)
                writer.writerow([_csv_value(summary[f]) for f in SUMMARY_FIELDS])
    if len(results) > 1:
        _write_sweep(results, out_dir / "sweep.csv")


def _write_sweep(results: list[SessionResult], path: Path) -> None:
    rows = [_summary_dict(r) for r in results]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_FIELDS)
        for row in rows:
            writer.writerow([_csv_value(row[f]) for f in SUMMARY_FIELDS])
        means = ["mean"]
        for field in SUMMARY_FIELDS[1:]:
            values = [row[field] for row in rows if row[field] is not None]
            means.append(f"{sum(values) / len(values):.6f}" if values else "")
        writer.writerow(means)


def _cmd_run(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    seeds = _parse_seeds(args, file_cfg)
    configs = [_build_config(args, file_cfg, seed) for seed in seeds]
    results = run_many(configs, jobs=args.jobs)
    if args.out:
        _write_outputs(results, Path(args.out), args.format)
        print(f"wrote {len(results)} session(s) to {args.out}")
    else:
        for result in results:
            print(json.dumps(_summary_dict(result), indent=2))
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    log_path = Path(args.log)
    if not log_path.is_file():
        raise ConfigError(f"no such log file: {log_path}")
    seed = args.seed
    if seed is None and "seed" not in file_cfg:
        try:
            with log_path.open(encoding="utf-8") as fh:
                header = json.loads(fh.readline())
            seed = int(header["seed"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(
                f"cannot read seed from log header; pass --seed ({exc})"
            ) from exc
    elif seed is None:
        seed = int(file_cfg["seed"])
    config = _build_config(args, file_cfg, seed)
    try:
        report = replay_verify(log_path, config)
    except HeaderMismatchError as exc:
        print(f"header mismatch: {exc}", file=sys.stderr)
        return 2
    if report.ok:
        print(f"ok: {report.lines_checked} lines match")
        return 0
    print(f"divergence at line {report.divergence_line}:", file=sys.stderr)
    print(f"  expected: {report.expected}", file=sys.stderr)
    print(f"  actual:   {report.actual}", file=sys.stderr)
    return 1


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_verify(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
