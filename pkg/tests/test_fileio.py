from pathlib import Path

from evsched.core import EV, Horizon, Instance, Schedule
from evsched import fileio

GOLDEN_DIR = Path(__file__).parent / "golden"


def sample_instance():
    return Instance(
        horizon=Horizon(T=12, slot_minutes=15),
        evs=(
            EV(id=1, ar=1, d=8, l=3),
            EV(id=2, ar=2, d=10, l=4),
            EV(id=3, ar=2, d=12, l=1),
        ),
        cap=None,
        scenario_id="golden",
        seed=42,
    )


def test_instance_golden_bytes():
    got = fileio.dump_instance(sample_instance())
    expected = (GOLDEN_DIR / "instance.json").read_text().strip()
    assert got == expected


def test_schedule_golden_bytes():
    got = fileio.dump_schedule(Schedule({1: 2, 2: 5, 3: 12}))
    expected = (GOLDEN_DIR / "schedule.json").read_text().strip()
    assert got == expected


def test_instance_round_trip(tmp_path):
    inst = sample_instance()
    path = tmp_path / "inst.json"
    fileio.write_instance(inst, path)
    back = fileio.read_instance(path)
    assert back == inst
    assert fileio.dump_instance(back) == fileio.dump_instance(inst)


def test_schedule_round_trip(tmp_path):
    sched = Schedule({3: 1, 1: 4})
    path = tmp_path / "sched.json"
    fileio.write_schedule(sched, path)
    assert fileio.read_schedule(path) == sched


def test_canonical_serialization_is_key_order_independent():
    a = fileio.canonical_dumps({"b": 1, "a": 2})
    b = fileio.canonical_dumps({"a": 2, "b": 1})
    assert a == b == '{"a":2,"b":1}'


def test_jsonl_round_trip(tmp_path):
    records = [{"ev_id": 1, "action": "DOWN", "candidate_after": 3, "reward": 1}]
    path = tmp_path / "trace.jsonl"
    fileio.write_jsonl(records, path)
    assert fileio.read_jsonl(path) == records
