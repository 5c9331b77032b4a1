"""HTTP episode service: create and play episodes against the engine, let
heuristics or trained agents auto-play, and compare a finished session
against the reference policies on the same instance.

Persistence is an append-only action log per session plus the creation
metadata; replaying the log through the engine is the source of truth, so
sessions survive restarts bit-exactly. Auto-played modes store their full
action trace at creation and replay like human sessions.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import analysis, engine, fileio
from .catalog import policy_by_name
from .core import Instance, max_min, rmse
from .engine import Action, EpisodeState, StepRecord
from .instgen import builtin_scenario, sample_instance
from .policies import PolicyModel, rollout

DEFAULT_RENDER_ROWS = 32


class CreateEpisodeBody(BaseModel):
    scenario: int | None = None
    instance: dict | None = None
    seed: int | None = None
    mode: str = "human"


class ActionBody(BaseModel):
    action: str


@dataclass
class EpisodeSession:
    session_id: str
    instance: Instance
    mode: str
    created_at: float
    state: EpisodeState
    score: int = 0
    trace: list[StepRecord] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def _block_view(state: EpisodeState) -> dict | None:
    if state.terminal:
        return None
    ev = state.active_ev
    lo, hi = engine.feasible_range(ev)
    return {
        "ev_id": ev.id,
        "ar": ev.ar,
        "d": ev.d,
        "l": ev.l,
        "feasible_range": [lo, hi],
    }


def session_view(session: EpisodeSession, reward: int | None = None) -> dict:
    """The client-visible state: never includes EVs that have not arrived."""
    state = session.state
    instance = session.instance
    view = {
        "session_id": session.session_id,
        "mode": session.mode,
        "T": instance.horizon.T,
        "slot_minutes": instance.horizon.slot_minutes,
        "render_rows": instance.cap if instance.cap is not None else DEFAULT_RENDER_ROWS,
        "cap": instance.cap,
        "profile": list(state.profile),
        "completed": len(state.committed),
        "score": session.score,
        "terminal": state.terminal,
        "block": _block_view(state),
        "candidate": state.candidate,
        "budget_left": state.budget_left,
    }
    if reward is not None:
        view["reward"] = reward
    if state.terminal:
        profile = state.load_profile()
        view["final"] = {
            "max_min": max_min(profile),
            "rmse": rmse(profile),
            "score": session.score,
        }
        # every EV has arrived by now, so block geometry leaks nothing
        view["blocks"] = [
            {
                "ev_id": ev_id,
                "ar": instance.by_id[ev_id].ar,
                "d": instance.by_id[ev_id].d,
                "l": instance.by_id[ev_id].l,
                "start": start,
            }
            for ev_id, start in state.committed
        ]
    if session.mode != "human":
        view["trace"] = engine.trace_to_dicts(session.trace)
    return view


class SessionStore:
    """In-memory sessions backed by per-session directories on disk."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.sessions: dict[str, EpisodeSession] = {}
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._load_existing()

    def _dir(self, session_id: str) -> Path:
        return self.data_dir / "sessions" / session_id

    def _load_existing(self) -> None:
        root = self.data_dir / "sessions"
        if not root.is_dir():
            return
        for sdir in sorted(root.iterdir()):
            meta_path = sdir / "meta.json"
            actions_path = sdir / "actions.jsonl"
            if not meta_path.is_file():
                continue
            meta = json.loads(meta_path.read_text())
            instance = fileio.instance_from_dict(meta["instance"])
            actions = []
            if actions_path.is_file():
                actions = [
                    Action[r["action"]] for r in fileio.read_jsonl(actions_path)
                ]
            state, trace, total = engine.replay(instance, actions)
            self.sessions[meta["session_id"]] = EpisodeSession(
                session_id=meta["session_id"],
                instance=instance,
                mode=meta["mode"],
                created_at=meta["created_at"],
                state=state,
                score=total,
                trace=trace,
            )

    def create(self, instance: Instance, mode: str) -> EpisodeSession:
        session_id = uuid.uuid4().hex
        session = EpisodeSession(
            session_id=session_id,
            instance=instance,
            mode=mode,
            created_at=time.time(),
            state=engine.reset(instance),
        )
        sdir = self._dir(session_id)
        sdir.mkdir(parents=True, exist_ok=True)
        (sdir / "meta.json").write_text(
            fileio.canonical_dumps(
                {
                    "session_id": session_id,
                    "mode": mode,
                    "created_at": session.created_at,
                    "instance": fileio.instance_to_dict(instance),
                }
            )
        )
        (sdir / "actions.jsonl").write_text("")
        self.sessions[session_id] = session
        return session

    def append_action(self, session: EpisodeSession, record: StepRecord) -> None:
        with open(self._dir(session.session_id) / "actions.jsonl", "a") as fh:
            fh.write(fileio.canonical_dumps(record.to_dict()) + "\n")

    def get(self, session_id: str) -> EpisodeSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session


def _auto_play(store: SessionStore, session: EpisodeSession, mode: str) -> None:
    """Run a heuristic or agent to completion, recording a replayable trace."""
    kind, _, ref = mode.partition(":")
    if kind == "heuristic":
        schedule = policy_by_name(ref)(session.instance)
        actions = engine.schedule_to_actions(session.instance, schedule)
        state, trace, total = engine.replay(session.instance, actions)
    elif kind == "agent":
        model = PolicyModel.load(ref)
        _, trace, total = rollout(model, session.instance)
        state, _, _ = engine.replay(session.instance, [r.action for r in trace])
    else:
        raise HTTPException(status_code=422, detail=f"unknown mode {mode!r}")
    session.state = state
    session.trace = trace
    session.score = total
    for record in trace:
        store.append_action(session, record)


def create_app(
    data_dir: Path | str,
    compare_time_limit: float | None = 10.0,
) -> FastAPI:
    app = FastAPI(title="evsched episode service")
    store = SessionStore(Path(data_dir))
    app.state.store = store

    @app.get("/scenarios")
    def scenarios() -> list[dict]:
        out = []
        for sid in (1, 2, 3, 4):
            spec = builtin_scenario(sid)
            arrival = spec.arrival
            if hasattr(arrival, "components"):
                arr = {
                    "mixture": [
                        {"mu": c.mu, "sigma": c.sigma, "weight": w}
                        for c, w in zip(arrival.components, arrival.weights)
                    ]
                }
            else:
                arr = {"mu": arrival.mu, "sigma": arrival.sigma}
            out.append(
                {
                    "id": sid,
                    "name": spec.name,
                    "n_evs": spec.n_evs,
                    "arrival": arr,
                    "T": spec.horizon.T,
                }
            )
        return out

    @app.post("/episodes")
    def create_episode(body: CreateEpisodeBody) -> dict:
        if (body.scenario is None) == (body.instance is None):
            raise HTTPException(
                status_code=422, detail="provide exactly one of scenario or instance"
            )
        if body.instance is not None:
            try:
                instance = fileio.instance_from_dict(body.instance)
            except (KeyError, TypeError, ValueError) as exc:
                raise HTTPException(status_code=422, detail=f"malformed instance: {exc}")
        else:
            try:
                spec = builtin_scenario(body.scenario)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            instance = sample_instance(spec, seed=body.seed if body.seed is not None else 0)
        session = store.create(instance, body.mode)
        if body.mode != "human":
            _auto_play(store, session, body.mode)
        return session_view(session)

    @app.get("/episodes/{session_id}")
    def get_episode(session_id: str) -> dict:
        return session_view(store.get(session_id))

    @app.post("/episodes/{session_id}/actions")
    def apply_action(session_id: str, body: ActionBody) -> dict:
        session = store.get(session_id)
        if session.mode != "human":
            raise HTTPException(status_code=409, detail="session is not in human mode")
        try:
            action = Action[body.action.upper()]
        except KeyError:
            raise HTTPException(status_code=422, detail=f"unknown action {body.action!r}")
        with session.lock:
            if session.state.terminal:
                raise HTTPException(status_code=409, detail="episode already finished")
            ev_id = session.state.active_ev.id
            try:
                new_state, reward = engine.step(session.state, action)
            except engine.IllegalActionError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            candidate_after = (
                new_state.committed[-1][1] if reward is not None else new_state.candidate
            )
            record = StepRecord(
                ev_id=ev_id,
                action=action,
                candidate_after=int(candidate_after),
                reward=reward,
            )
            session.state = new_state
            session.trace.append(record)
            if reward is not None:
                session.score += reward
            store.append_action(session, record)
            return session_view(session, reward=reward)

    @app.get("/episodes/{session_id}/compare")
    def compare(session_id: str) -> dict:
        session = store.get(session_id)
        if not session.state.terminal:
            raise HTTPException(status_code=409, detail="episode is not finished")
        instance = session.instance
        names = ["oracle", "reopt", "rowfill", "alpha", "beta", "plugin"]
        policies = [
            (name, policy_by_name(name, time_limit=compare_time_limit))
            for name in names
        ]
        report = analysis.evaluate(policies, [instance])
        rows = []
        for name in names:
            try:
                rows.append(
                    {
                        "policy": name,
                        "max_min": report.aggregate(name, "max_min").mean,
                        "rmse": report.aggregate(name, "rmse").mean,
                        "peak": report.aggregate(name, "peak").mean,
                    }
                )
            except KeyError:
                rows.append({"policy": name, "failed": True})
        profile = session.state.load_profile()
        return {
            "session": {
                "policy": session.mode,
                "max_min": max_min(profile),
                "rmse": rmse(profile),
                "peak": max(profile.counts),
                "score": session.score,
            },
            "rows": rows,
        }

    return app
