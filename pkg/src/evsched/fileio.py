"""Canonical JSON serialization for instances, schedules, and step traces.

Canonical form means sorted keys and no whitespace variance, so identical
objects always serialize to identical bytes (golden-file friendly).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

from .core import EV, Horizon, Instance, Schedule


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def instance_to_dict(instance: Instance) -> dict:
    return {
        "horizon": {
            "T": instance.horizon.T,
            "slot_minutes": instance.horizon.slot_minutes,
        },
        "cap": instance.cap,
        "scenario_id": instance.scenario_id,
        "seed": instance.seed,
        "evs": [{"id": ev.id, "ar": ev.ar, "d": ev.d, "l": ev.l} for ev in instance.evs],
    }


def instance_from_dict(data: dict) -> Instance:
    horizon = Horizon(
        T=data["horizon"]["T"], slot_minutes=data["horizon"].get("slot_minutes", 15)
    )
    evs = tuple(EV(id=e["id"], ar=e["ar"], d=e["d"], l=e["l"]) for e in data["evs"])
    return Instance(
        horizon=horizon,
        evs=evs,
        cap=data.get("cap"),
        scenario_id=data.get("scenario_id", ""),
        seed=data.get("seed"),
    )


def dump_instance(instance: Instance) -> str:
    return canonical_dumps(instance_to_dict(instance))


def load_instance(text: str) -> Instance:
    return instance_from_dict(json.loads(text))


def write_instance(instance: Instance, path: Path | str) -> None:
    Path(path).write_text(dump_instance(instance) + "\n")


def read_instance(path: Path | str) -> Instance:
    return load_instance(Path(path).read_text())


def schedule_to_dict(schedule: Schedule) -> dict:
    return {str(ev_id): start for ev_id, start in schedule.starts.items()}


def schedule_from_dict(data: dict) -> Schedule:
    return Schedule({int(k): int(v) for k, v in data.items()})


def dump_schedule(schedule: Schedule) -> str:
    return canonical_dumps(schedule_to_dict(schedule))


def load_schedule(text: str) -> Schedule:
    return schedule_from_dict(json.loads(text))


def write_schedule(schedule: Schedule, path: Path | str) -> None:
    Path(path).write_text(dump_schedule(schedule) + "\n")


def read_schedule(path: Path | str) -> Schedule:
    return load_schedule(Path(path).read_text())


def write_jsonl(records: Iterable[dict], path: Path | str) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(canonical_dumps(record) + "\n")


def read_jsonl(path: Path | str) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
