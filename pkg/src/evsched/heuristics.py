"""Rule-based online policies: row-filling and the X-threshold family.

Row-filling drops each arriving block on the shallowest feasible shelf
(lowest fill level, leftmost start). X-threshold lets arrivals start
immediately while the arrival column stays at or below X, and row-fills the
rest; X comes from an explicit value, the mean per-slot load (alpha), or the
mean oracle peak (beta).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import EV, Instance, Schedule
from .solver import STATUS_OPTIMAL, solve_oracle

log = logging.getLogger(__name__)


class HeuristicInfeasibleError(RuntimeError):
    """No cap-feasible start exists for one arrival."""

    def __init__(self, ev_id: int, message: str):
        super().__init__(message)
        self.ev_id = ev_id


@dataclass(frozen=True)
class ThresholdConfig:
    """X-threshold policy configuration. x may be math.inf, which reproduces
    the plug-in-to-charge baseline (every EV starts on arrival)."""

    x: float | int | None = None
    calibration: str = "explicit"  # "explicit" | "alpha" | "beta"
    calibration_set: tuple[Instance, ...] = ()

    def __post_init__(self) -> None:
        if self.calibration not in ("explicit", "alpha", "beta"):
            raise ValueError(f"unknown calibration {self.calibration!r}")
        if self.calibration == "explicit":
            if self.x is None or (self.x != math.inf and self.x < 0):
                raise ValueError("explicit calibration needs x >= 0 (or inf)")

    def resolve(self) -> float:
        if self.calibration == "explicit":
            assert self.x is not None
            return self.x
        if not self.calibration_set:
            raise ValueError(f"{self.calibration} calibration needs instances")
        if self.calibration == "alpha":
            return calibrate_alpha(self.calibration_set)
        return calibrate_beta(self.calibration_set)


def _rowfill_start(
    profile: list[int], ev: EV, min_start: int, cap: int | None
) -> int | None:
    """First start (shallowest fill level, then leftmost) whose whole
    footprint sits at or below that level and respects the cap."""
    lo = max(ev.ar, min_start)
    hi = ev.latest_start
    best: tuple[int, int] | None = None
    for s in range(lo, hi + 1):
        foot = max(profile[s - 1 : s - 1 + ev.l])
        if cap is not None and foot + 1 > cap:
            continue
        if best is None or (foot, s) < best:
            best = (foot, s)
    return None if best is None else best[1]


def _place(profile: list[int], ev: EV, start: int) -> None:
    for j in range(start, start + ev.l):
        profile[j - 1] += 1


def row_filling(instance: Instance) -> Schedule:
    """Process EVs in arrival order, dropping each block on the shallowest,
    leftmost shelf inside its window."""
    profile = [0] * instance.horizon.T
    starts: dict[int, int] = {}
    for ev in instance.evs:
        s = _rowfill_start(profile, ev, ev.ar, instance.cap)
        if s is None:
            raise HeuristicInfeasibleError(
                ev.id, f"row-filling found no cap-feasible start for EV {ev.id}"
            )
        starts[ev.id] = s
        _place(profile, ev, s)
    return Schedule(starts)


def x_threshold(instance: Instance, config: ThresholdConfig) -> Schedule:
    """Sweep slots left to right; arrivals start immediately while the
    arrival column stays at or below X (cap permitting), the rest are
    row-filled from their arrival onward. Prior assignments never move."""
    x = config.resolve()
    T = instance.horizon.T
    cap = instance.cap
    profile = [0] * T
    starts: dict[int, int] = {}
    for j in range(1, T + 1):
        for ev in instance.evs:
            if ev.ar != j:
                continue
            immediate_ok = profile[j - 1] + 1 <= x
            if immediate_ok and cap is not None:
                foot = max(profile[j - 1 : j - 1 + ev.l])
                immediate_ok = foot + 1 <= cap
            if immediate_ok:
                starts[ev.id] = j
                _place(profile, ev, j)
                continue
            s = _rowfill_start(profile, ev, j, cap)
            if s is None:
                raise HeuristicInfeasibleError(
                    ev.id, f"x-threshold found no cap-feasible start for EV {ev.id}"
                )
            starts[ev.id] = s
            _place(profile, ev, s)
    return Schedule(starts)


def plug_in_to_charge(instance: Instance) -> Schedule:
    """Status-quo baseline: every EV starts charging at its arrival slot."""
    return x_threshold(instance, ThresholdConfig(x=math.inf))


def calibrate_alpha(
    calibration_set: Sequence[Instance], per_instance: bool = False
) -> int:
    """X = ceiling of the mean number of EVs charging per slot over the
    calibration set (pooled by default; per_instance takes the ceiling
    instance-wise first)."""
    if not calibration_set:
        raise ValueError("alpha calibration needs a non-empty instance set")
    if per_instance:
        ceilings = [
            -(-sum(ev.l for ev in inst.evs) // inst.horizon.T)
            for inst in calibration_set
        ]
        return -(-sum(ceilings) // len(ceilings))
    total = sum(
        Fraction(sum(ev.l for ev in inst.evs), inst.horizon.T)
        for inst in calibration_set
    )
    return math.ceil(total / len(calibration_set))


def calibrate_beta(
    calibration_set: Sequence[Instance], time_limit: float | None = None
) -> int:
    """X = ceiling of the mean oracle peak load over the calibration set."""
    if not calibration_set:
        raise ValueError("beta calibration needs a non-empty instance set")
    peaks: list[int] = []
    for inst in calibration_set:
        result = solve_oracle(inst, time_limit=time_limit)
        if result.status not in (STATUS_OPTIMAL, "feasible-within-gap", "timeout"):
            raise HeuristicInfeasibleError(
                -1, f"oracle infeasible on calibration instance {inst.scenario_id}"
            )
        if result.status != STATUS_OPTIMAL:
            log.warning(
                "beta calibration uses a %s incumbent on instance seed %s",
                result.status,
                inst.seed,
            )
        profile = [0] * inst.horizon.T
        for ev_id, s in result.schedule.starts.items():
            _place(profile, inst.by_id[ev_id], s)
        peaks.append(max(profile))
    return -(-sum(peaks) // len(peaks))
