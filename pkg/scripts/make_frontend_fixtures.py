"""Record service interactions for the frontend test suite.

Plays a deterministic human key sequence through the real episode service,
captures every request/response pair, the compare payload, an auto-play
(row-filling) session with its trace, and the engine's own replay of the
same action log as ground truth. The output is committed at
frontend/test/fixtures/session.json so the TypeScript tests run without a
Python server.
"""

import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from evsched import engine, fileio  # noqa: E402
from evsched.core import EV, Horizon, Instance  # noqa: E402
from evsched.engine import Action  # noqa: E402
from evsched.service import create_app  # noqa: E402

KEY_SEQUENCE = [
    "ArrowRight",
    "ArrowRight",
    "ArrowLeft",
    "ArrowDown",
    "ArrowRight",
    "ArrowDown",
    "ArrowDown",
]

KEY_TO_ACTION = {"ArrowRight": "RIGHT", "ArrowLeft": "LEFT", "ArrowDown": "DOWN"}


def fixture_instance() -> Instance:
    return Instance(
        horizon=Horizon(T=12),
        evs=(
            EV(id=1, ar=1, d=9, l=3),
            EV(id=2, ar=2, d=12, l=4),
            EV(id=3, ar=3, d=12, l=2),
        ),
        scenario_id="fixture",
        seed=1,
    )


def main() -> None:
    instance = fixture_instance()
    out = {"instance": fileio.instance_to_dict(instance), "keys": KEY_SEQUENCE}
    with tempfile.TemporaryDirectory() as tmp:
        app = create_app(Path(tmp), compare_time_limit=10.0)
        with TestClient(app) as client:
            created = client.post(
                "/episodes", json={"instance": out["instance"], "mode": "human"}
            ).json()
            sid = created["session_id"]
            exchanges = []
            for key in KEY_SEQUENCE:
                action = KEY_TO_ACTION[key]
                view = client.post(
                    f"/episodes/{sid}/actions", json={"action": action}
                ).json()
                exchanges.append({"key": key, "action": action, "view": view})
            out["create_view"] = created
            out["exchanges"] = exchanges
            out["compare"] = client.get(f"/episodes/{sid}/compare").json()

            auto = client.post(
                "/episodes",
                json={"instance": out["instance"], "mode": "heuristic:rowfill"},
            ).json()
            out["autoplay_view"] = auto

    # engine ground truth for the same action log
    actions = [Action[KEY_TO_ACTION[k]] for k in KEY_SEQUENCE]
    state, trace, total = engine.replay(instance, actions)
    out["engine_truth"] = {
        "final_schedule": {str(k): v for k, v in state.committed_schedule().starts.items()},
        "final_profile": list(state.profile),
        "total_reward": total,
        "trace": engine.trace_to_dicts(trace),
    }

    target = Path(__file__).resolve().parents[1] / "frontend" / "test" / "fixtures"
    target.mkdir(parents=True, exist_ok=True)
    (target / "session.json").write_text(json.dumps(out, indent=2, sort_keys=True))
    print(f"wrote {target / 'session.json'}")


if __name__ == "__main__":
    main()
