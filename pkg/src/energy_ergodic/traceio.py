"""Mission trace and plan serialization, and replay statistics."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import NamedTuple

from .mission import MissionLog

HEADER = "horizon,t,agent,x,y,soc,volts,active,ergodicity"


class MalformedTrace(ValueError):
    pass


class TraceRow(NamedTuple):
    horizon: int
    t: float
    agent: int
    x: float
    y: float
    soc: float
    volts: float
    active: bool
    ergodicity: float


def _fmt(row: TraceRow) -> str:
    return (f"{row.horizon},{row.t:.6f},{row.agent},{row.x:.6f},{row.y:.6f},{row.soc:.6f},"
            f"{row.volts:.6f},{int(row.active)},{row.ergodicity:.12e}")


def _quantize(row: TraceRow) -> TraceRow:
    # values exactly as they read back from the CSV
    return TraceRow(*(int(f) if i in (0, 2) else bool(int(f)) if i == 7 else float(f)
                      for i, f in enumerate(_fmt(row).split(","))))


def rows_from_log(log: MissionLog) -> list[TraceRow]:
    rows = []
    for r in log.records:
        rows.append(_quantize(TraceRow(r.horizon, r.time_s, r.agent, r.position[0], r.position[1],
                                       r.soc, r.terminal_volts, r.active, r.instantaneous_metric)))
    return rows


def format_trace(rows) -> str:
    return "\n".join([HEADER] + [_fmt(r) for r in rows]) + "\n"


def parse_trace(text: str) -> list[TraceRow]:
    lines = text.split("\n")
    if not lines or lines[0].strip() != HEADER:
        raise MalformedTrace(f"expected header {HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 9:
            raise MalformedTrace(f"line {lineno}: expected 9 fields, got {len(fields)}")
        try:
            active = int(fields[7])
            if active not in (0, 1):
                raise ValueError(f"active flag {active}")
            row = TraceRow(int(fields[0]), float(fields[1]), int(fields[2]), float(fields[3]),
                           float(fields[4]), float(fields[5]), float(fields[6]), bool(active),
                           float(fields[8]))
        except ValueError as exc:
            raise MalformedTrace(f"line {lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in (row.t, row.x, row.y, row.soc, row.volts, row.ergodicity)):
            raise MalformedTrace(f"line {lineno}: non-finite value")
        rows.append(row)
    return rows


def write_trace(path, rows) -> None:
    Path(path).write_text(format_trace(rows), encoding="utf-8", newline="\n")


def read_trace(path) -> list[TraceRow]:
    return parse_trace(Path(path).read_text(encoding="utf-8"))


def statistics(rows, expected_records: int | None = None) -> dict:
    """Per-horizon ergodicity range, per-agent SoC range and the continuity check."""
    horizons: dict = {}
    agents: dict = {}
    active_per_horizon: dict = {}
    for r in rows:
        agents.setdefault(r.agent, []).append(r.soc)
        active_per_horizon.setdefault(r.horizon, set())
        if r.active:
            active_per_horizon[r.horizon].add(r.agent)
    n_agents = len(agents)
    for r in rows:
        # one ergodicity value per time step, repeated on each agent row
        if r.agent == min(agents):
            horizons.setdefault(r.horizon, []).append(r.ergodicity)
    idle = sorted(h for h, act in active_per_horizon.items() if not act)
    if expected_records is None and horizons:
        # without a plan file, assume every horizon as long as the first
        first = min(horizons)
        expected_records = len(horizons) * len(horizons[first]) * n_agents
    count_ok = expected_records == len(rows)
    return {
        "records": len(rows),
        "expected_records": expected_records,
        "record_count_ok": count_ok,
        "continuity": "OK" if not idle and count_ok else "BROKEN",
        "idle_horizons": idle,
        "horizons": {h: {"min": min(v), "mean": math.fsum(v) / len(v), "max": max(v)}
                     for h, v in sorted(horizons.items())},
        "agents": {a: {"soc_min": min(v), "soc_max": max(v)} for a, v in sorted(agents.items())},
    }


def format_statistics(stats: dict) -> str:
    out = [f"records: {stats['records']} (expected {stats['expected_records']})"]
    if not stats["record_count_ok"]:
        out.append(f"record-count mismatch: found {stats['records']}, expected {stats['expected_records']}")
    out.append("horizon  ergodicity min / mean / max")
    for h, s in stats["horizons"].items():
        out.append(f"{h:7d}  {s['min']:.6e} / {s['mean']:.6e} / {s['max']:.6e}")
    out.append("agent  soc min / max")
    for a, s in stats["agents"].items():
        out.append(f"{a:5d}  {s['soc_min']:.6f} / {s['soc_max']:.6f}")
    if stats["idle_horizons"]:
        out.append(f"horizons without an active agent: {stats['idle_horizons']}")
    out.append(f"continuity: {stats['continuity']}")
    return "\n".join(out) + "\n"


def plan_document(log: MissionLog, scenario_name: str, seed: int, horizon_s: float,
                  gamma: float, epsilon: float) -> dict:
    return {
        "scenario": scenario_name,
        "seed": seed,
        "num_agents": log.num_agents,
        "num_horizons": log.num_horizons,
        "steps_N": log.steps_N,
        "horizon_s": horizon_s,
        "gamma": gamma,
        "epsilon_m": epsilon,
        "horizons": [dict(p.summary(), horizon=h) for h, p in enumerate(log.plans)],
    }


def format_plan(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_plan(path, doc: dict) -> None:
    Path(path).write_text(format_plan(doc), encoding="utf-8", newline="\n")


def read_plan(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
