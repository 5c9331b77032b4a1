"""Domain types, feasibility checking, and metric primitives.

Slots are 1-indexed: the horizon covers slots 1..T. A charging block for EV i
occupies the contiguous slots s_i .. s_i + l_i - 1 and must lie inside the
EV's availability window [ar_i, d_i]. A load profile counts simultaneous
charging sessions per slot. All types are immutable value objects and all
operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence


class ScheduleMismatchError(ValueError):
    """A schedule references an EV id the instance does not contain."""


@dataclass(frozen=True)
class Horizon:
    """Discrete planning horizon of T slots of slot_minutes each.

    origin is the wall-clock label of slot 1 (the default horizon starts at
    noon, so slot 72 is 6:00 AM the next day).
    """

    T: int = 96
    slot_minutes: int = 15
    origin: str = "12:00"

    def __post_init__(self) -> None:
        if self.T < 1:
            raise ValueError(f"horizon needs at least one slot, got T={self.T}")
        if self.slot_minutes <= 0:
            raise ValueError(f"slot_minutes must be positive, got {self.slot_minutes}")


@dataclass(frozen=True)
class EV:
    """One charging request: window [ar, d] and contiguous block length l."""

    id: int
    ar: int
    d: int
    l: int

    def __post_init__(self) -> None:
        if not (1 <= self.ar <= self.d):
            raise ValueError(f"EV {self.id}: window [{self.ar}, {self.d}] is invalid")
        if not (1 <= self.l <= self.d - self.ar + 1):
            raise ValueError(
                f"EV {self.id}: length {self.l} does not fit window [{self.ar}, {self.d}]"
            )

    @property
    def latest_start(self) -> int:
        """Last slot where the block still ends by the departure."""
        return self.d - self.l + 1


@dataclass(frozen=True)
class Instance:
    """A day's worth of charging requests over a common horizon.

    evs must be sorted by arrival slot (ties by id). cap is the per-slot
    session capacity; None means effectively unbounded (cap = N), the default
    because the experiments never bind it.
    """

    horizon: Horizon
    evs: tuple[EV, ...]
    cap: int | None = None
    scenario_id: str = ""
    seed: int | None = None

    def __post_init__(self) -> None:
        T = self.horizon.T
        seen: set[int] = set()
        prev: EV | None = None
        for ev in self.evs:
            if ev.d > T:
                raise ValueError(f"EV {ev.id} departs at {ev.d} beyond horizon T={T}")
            if ev.id in seen:
                raise ValueError(f"duplicate EV id {ev.id}")
            seen.add(ev.id)
            if prev is not None and (ev.ar, ev.id) < (prev.ar, prev.id):
                raise ValueError("evs must be sorted by arrival slot, ties by id")
            prev = ev
        if self.cap is not None and self.cap < 1:
            raise ValueError(f"cap must be >= 1 or None, got {self.cap}")

    @cached_property
    def by_id(self) -> Mapping[int, EV]:
        return {ev.id: ev for ev in self.evs}

    @property
    def n_evs(self) -> int:
        return len(self.evs)

    @property
    def effective_cap(self) -> int:
        return self.cap if self.cap is not None else max(1, len(self.evs))


@dataclass(frozen=True)
class Schedule:
    """Committed start slot per EV id; EV i covers starts[i] .. starts[i]+l_i-1."""

    starts: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "starts", dict(self.starts))

    def with_start(self, ev_id: int, start: int) -> "Schedule":
        new = dict(self.starts)
        new[ev_id] = start
        return Schedule(new)

    def __len__(self) -> int:
        return len(self.starts)


@dataclass(frozen=True)
class LoadProfile:
    """Per-slot count of simultaneously charging EVs."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.counts) < 1:
            raise ValueError("load profile needs at least one slot")
        if any(c < 0 for c in self.counts):
            raise ValueError("load counts must be non-negative")

    @property
    def T(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class Violation:
    """One named constraint failure found by check_feasible."""

    family: str  # "window" | "capacity" | "unknown_ev"
    ev_id: int | None
    detail: str


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    violations: tuple[Violation, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def _counts(profile: LoadProfile | Sequence[int]) -> Sequence[int]:
    return profile.counts if isinstance(profile, LoadProfile) else profile


def load_of(schedule: Schedule, instance: Instance) -> LoadProfile:
    """Aggregate load: c(j) = number of scheduled EVs covering slot j."""
    T = instance.horizon.T
    counts = [0] * T
    for ev_id, start in schedule.starts.items():
        ev = instance.by_id.get(ev_id)
        if ev is None:
            raise ScheduleMismatchError(f"schedule references unknown EV id {ev_id}")
        for j in range(start, start + ev.l):
            if 1 <= j <= T:
                counts[j - 1] += 1
    return LoadProfile(tuple(counts))


def max_min(profile: LoadProfile | Sequence[int]) -> int:
    """Peak-to-valley spread max_j c(j) - min_j c(j) over all T slots."""
    counts = _counts(profile)
    return max(counts) - min(counts)


def rmse(profile: LoadProfile | Sequence[int]) -> float:
    """Root mean squared deviation of the load from its own mean."""
    counts = _counts(profile)
    T = len(counts)
    mean = sum(counts) / T
    return math.sqrt(sum((c - mean) ** 2 for c in counts) / T)


def check_feasible(schedule: Schedule, instance: Instance) -> FeasibilityReport:
    """Validate window containment and capacity for a (partial) schedule.

    Contiguity and exact length are structural: a schedule stores one start
    per EV, so the only representable violations are window and capacity
    ones (plus references to unknown EVs).
    """
    violations: list[Violation] = []
    T = instance.horizon.T
    counts = [0] * T
    for ev_id in sorted(schedule.starts):
        start = schedule.starts[ev_id]
        ev = instance.by_id.get(ev_id)
        if ev is None:
            violations.append(
                Violation("unknown_ev", ev_id, f"EV id {ev_id} not in instance")
            )
            continue
        end = start + ev.l - 1
        if start < ev.ar or end > ev.d:
            violations.append(
                Violation(
                    "window",
                    ev_id,
                    f"block [{start}, {end}] outside window [{ev.ar}, {ev.d}]",
                )
            )
        for j in range(max(start, 1), min(end, T) + 1):
            counts[j - 1] += 1
    cap = instance.cap
    if cap is not None:
        for j, c in enumerate(counts, start=1):
            if c > cap:
                violations.append(
                    Violation("capacity", None, f"slot {j} load {c} exceeds cap {cap}")
                )
    return FeasibilityReport(ok=not violations, violations=tuple(violations))
