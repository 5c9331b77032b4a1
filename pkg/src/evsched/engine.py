"""Gamified episodic environment: block placement with LEFT/RIGHT/DOWN
actions, a per-block action budget of T, the +1/0/-1 balance reward, and the
image / vector observation encoders.

Drop semantics are conformal: committing a block increments each covered
column independently, so the reward seen in the game is exactly the
peak-to-valley change of the underlying load profile.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from .core import EV, Instance, LoadProfile, Schedule, max_min


class EpisodeTerminalError(RuntimeError):
    """An action was applied to a finished episode."""


class IllegalActionError(ValueError):
    """The requested action is not legal in the current state."""


class CapacityDeadlockError(RuntimeError):
    """No cap-feasible start exists for the active block."""


class Action(IntEnum):
    LEFT = 0
    RIGHT = 1
    DOWN = 2


@dataclass(frozen=True)
class EpisodeState:
    """Immutable snapshot of a running episode.

    committed holds (ev_id, start) pairs in commit order; profile is the
    load of the committed blocks; candidate is the active block's current
    start column, None once terminal.
    """

    instance: Instance
    next_ev_index: int
    committed: tuple[tuple[int, int], ...]
    profile: tuple[int, ...]
    candidate: int | None
    budget_left: int
    terminal: bool

    @property
    def active_ev(self) -> EV:
        if self.terminal:
            raise EpisodeTerminalError("no active block in a terminal state")
        return self.instance.evs[self.next_ev_index]

    def committed_schedule(self) -> Schedule:
        return Schedule(dict(self.committed))

    def load_profile(self) -> LoadProfile:
        return LoadProfile(self.profile)


@dataclass(frozen=True)
class StepRecord:
    """One replayable trace entry."""

    ev_id: int
    action: Action
    candidate_after: int
    reward: int | None = None

    def to_dict(self) -> dict:
        record = {
            "ev_id": self.ev_id,
            "action": self.action.name,
            "candidate_after": self.candidate_after,
        }
        if self.reward is not None:
            record["reward"] = self.reward
        return record

    @staticmethod
    def from_dict(data: dict) -> "StepRecord":
        return StepRecord(
            ev_id=data["ev_id"],
            action=Action[data["action"]],
            candidate_after=data["candidate_after"],
            reward=data.get("reward"),
        )


def feasible_range(ev: EV) -> tuple[int, int]:
    """Inclusive candidate range [ar, d - l + 1] for the block's start."""
    return ev.ar, ev.latest_start


def reset(instance: Instance) -> EpisodeState:
    """Start an episode: first block active at its arrival column with a
    fresh budget of T actions; empty instances are terminal immediately."""
    T = instance.horizon.T
    if not instance.evs:
        return EpisodeState(
            instance=instance,
            next_ev_index=0,
            committed=(),
            profile=(0,) * T,
            candidate=None,
            budget_left=0,
            terminal=True,
        )
    first = instance.evs[0]
    return EpisodeState(
        instance=instance,
        next_ev_index=0,
        committed=(),
        profile=(0,) * T,
        candidate=first.ar,
        budget_left=T,
        terminal=False,
    )


def cap_allows(state: EpisodeState, ev: EV, start: int) -> bool:
    """Would committing the block at `start` respect a finite cap?"""
    cap = state.instance.cap
    if cap is None:
        return True
    return all(state.profile[j - 1] + 1 <= cap for j in range(start, start + ev.l))


_cap_ok = cap_allows


def _nearest_feasible_start(state: EpisodeState, ev: EV, anchor: int) -> int:
    """Closest cap-feasible start to anchor (ties prefer the smaller start)."""
    lo, hi = feasible_range(ev)
    best: int | None = None
    for s in range(lo, hi + 1):
        if _cap_ok(state, ev, s):
            if best is None or abs(s - anchor) < abs(best - anchor):
                best = s
    if best is None:
        raise CapacityDeadlockError(
            f"EV {ev.id}: no cap-feasible start in [{lo}, {hi}]"
        )
    return best


def _commit(state: EpisodeState, start: int) -> tuple[EpisodeState, int]:
    ev = state.active_ev
    before = max_min(state.profile)
    profile = list(state.profile)
    for j in range(start, start + ev.l):
        profile[j - 1] += 1
    after = max_min(profile)
    reward = -1 if after > before else (1 if after < before else 0)
    committed = state.committed + ((ev.id, start),)
    next_index = state.next_ev_index + 1
    T = state.instance.horizon.T
    if next_index >= len(state.instance.evs):
        new_state = EpisodeState(
            instance=state.instance,
            next_ev_index=next_index,
            committed=committed,
            profile=tuple(profile),
            candidate=None,
            budget_left=0,
            terminal=True,
        )
    else:
        nxt = state.instance.evs[next_index]
        new_state = EpisodeState(
            instance=state.instance,
            next_ev_index=next_index,
            committed=committed,
            profile=tuple(profile),
            candidate=nxt.ar,
            budget_left=T,
            terminal=False,
        )
    return new_state, reward


def step(
    state: EpisodeState,
    action: Action,
    *,
    wall_noop_consumes_budget: bool = True,
) -> tuple[EpisodeState, int | None]:
    """Apply one action. Movement steps carry no reward; DOWN (or budget
    exhaustion, which force-drops at the current candidate) commits the
    block and returns the +1/0/-1 balance reward."""
    if state.terminal:
        raise EpisodeTerminalError("cannot act on a terminal episode")
    ev = state.active_ev
    lo, hi = feasible_range(ev)
    assert state.candidate is not None

    if action == Action.DOWN:
        if not _cap_ok(state, ev, state.candidate):
            raise IllegalActionError(
                f"DOWN at {state.candidate} would exceed cap {state.instance.cap}"
            )
        return _commit(state, state.candidate)

    delta = -1 if action == Action.LEFT else 1
    new_candidate = min(max(state.candidate + delta, lo), hi)
    if new_candidate == state.candidate and not wall_noop_consumes_budget:
        return state, None
    budget = state.budget_left - 1
    if budget <= 0:
        # budget exhausted: automatic drop where the block now sits
        drop_at = new_candidate
        if not _cap_ok(state, ev, drop_at):
            drop_at = _nearest_feasible_start(state, ev, drop_at)
        return _commit(state, drop_at)
    moved = EpisodeState(
        instance=state.instance,
        next_ev_index=state.next_ev_index,
        committed=state.committed,
        profile=state.profile,
        candidate=new_candidate,
        budget_left=budget,
        terminal=False,
    )
    return moved, None


def place(state: EpisodeState, start: int) -> tuple[EpisodeState, int]:
    """Commit the active block directly at a start slot (schedule-output
    policies and replays); validates window and cap."""
    if state.terminal:
        raise EpisodeTerminalError("cannot place on a terminal episode")
    ev = state.active_ev
    lo, hi = feasible_range(ev)
    if not (lo <= start <= hi):
        raise IllegalActionError(
            f"start {start} outside feasible range [{lo}, {hi}] for EV {ev.id}"
        )
    if not _cap_ok(state, ev, start):
        raise IllegalActionError(f"start {start} would exceed cap {state.instance.cap}")
    return _commit(state, start)


def legal_actions(state: EpisodeState) -> tuple[Action, ...]:
    """LEFT/RIGHT legal off the walls; DOWN legal unless it would break a
    finite cap at the current candidate."""
    if state.terminal:
        raise EpisodeTerminalError("no legal actions in a terminal state")
    ev = state.active_ev
    lo, hi = feasible_range(ev)
    actions: list[Action] = []
    if state.candidate > lo:
        actions.append(Action.LEFT)
    if state.candidate < hi:
        actions.append(Action.RIGHT)
    if _cap_ok(state, ev, state.candidate):
        actions.append(Action.DOWN)
    return tuple(actions)


def default_render_rows(state: EpisodeState) -> int:
    """Cap rows when the cap is finite, else enough headroom for the
    current terrain plus the active block."""
    cap = state.instance.cap
    if cap is not None:
        return cap
    block = state.active_ev.l if not state.terminal else 0
    return max(32, max(state.profile) + block)


def render_image(state: EpisodeState, render_rows: int | None = None) -> np.ndarray:
    """Binary pixel grid (3, rows, T), row 0 at the bottom.

    channel 0: committed load, column j filled to min(c(j), rows);
    channel 1: active block footprint resting conformally on the load;
    channel 2: forbidden columns (outside the active window) fully lit.
    """
    if state.terminal:
        raise EpisodeTerminalError("cannot render a terminal state")
    rows = render_rows if render_rows is not None else default_render_rows(state)
    T = state.instance.horizon.T
    img = np.zeros((3, rows, T), dtype=np.uint8)
    for j in range(T):
        h = min(state.profile[j], rows)
        if h:
            img[0, :h, j] = 1
    ev = state.active_ev
    assert state.candidate is not None
    for j in range(state.candidate, state.candidate + ev.l):
        r = min(state.profile[j - 1], rows - 1)
        img[1, r, j - 1] = 1
    for j in range(T):
        slot = j + 1
        if slot < ev.ar or slot > ev.d:
            img[2, :, j] = 1
    return img


def encode_vector(
    state: EpisodeState, with_position: bool, l_max: int = 22
) -> np.ndarray:
    """Structured observation: binary block-length prefix of size l_max,
    per-slot load counts, and (for movement outputs) a one-hot candidate
    start column."""
    if state.terminal:
        raise EpisodeTerminalError("cannot encode a terminal state")
    ev = state.active_ev
    if ev.l > l_max:
        raise ValueError(f"block length {ev.l} exceeds encoder l_max {l_max}")
    T = state.instance.horizon.T
    prefix = np.zeros(l_max, dtype=np.float64)
    prefix[: ev.l] = 1.0
    counts = np.asarray(state.profile, dtype=np.float64)
    parts = [prefix, counts]
    if with_position:
        onehot = np.zeros(T, dtype=np.float64)
        assert state.candidate is not None
        onehot[state.candidate - 1] = 1.0
        parts.append(onehot)
    return np.concatenate(parts)


def schedule_to_actions(instance: Instance, schedule: Schedule) -> list[Action]:
    """Flatten a schedule into the monotone shortest action path per block:
    RIGHT from the arrival anchor to the target start, then DOWN."""
    actions: list[Action] = []
    for ev in instance.evs:
        target = schedule.starts[ev.id]
        if not (ev.ar <= target <= ev.latest_start):
            raise IllegalActionError(
                f"EV {ev.id}: start {target} outside [{ev.ar}, {ev.latest_start}]"
            )
        actions.extend([Action.RIGHT] * (target - ev.ar))
        actions.append(Action.DOWN)
    return actions


def replay(
    instance: Instance, actions: Iterable[Action]
) -> tuple[EpisodeState, list[StepRecord], int]:
    """Replay an action sequence from reset; returns the final state, the
    step trace, and the total reward."""
    state = reset(instance)
    trace: list[StepRecord] = []
    total = 0
    for action in actions:
        ev_id = state.active_ev.id
        state, reward = step(state, action)
        candidate_after = (
            state.committed[-1][1]
            if reward is not None
            else state.candidate  # type: ignore[assignment]
        )
        trace.append(
            StepRecord(
                ev_id=ev_id,
                action=Action(action),
                candidate_after=int(candidate_after),
                reward=reward,
            )
        )
        if reward is not None:
            total += reward
    return state, trace, total


def trace_to_dicts(trace: Sequence[StepRecord]) -> list[dict]:
    return [r.to_dict() for r in trace]


def trace_from_dicts(records: Iterable[dict]) -> list[StepRecord]:
    return [StepRecord.from_dict(r) for r in records]
