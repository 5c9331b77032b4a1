"""Episode-wise dataset aggregation: the agent plays fresh episodes, every
visited decision state is relabeled by the fixed-past optimal completion,
corrections are appended after each batch of episodes, the policy is
retrained from scratch, and an outer validation gate on mean peak-to-valley
spread keeps the best model."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .core import Instance, load_of, max_min
from .engine import Action
from .instgen import ScenarioSpec, sample_instance
from .policies import (
    Demonstration,
    PolicyModel,
    TrainConfig,
    encode_observation,
    encoder_for,
    expert_demonstrations,
    extract_expert_action,
    rollout,
    train_sl,
)
from .solver import STATUS_INFEASIBLE, SolveRequest, solve_completion
from .util import derive_seed

log = logging.getLogger(__name__)


@dataclass
class DaggerConfig:
    eta0: int = 10  # initial expert episodes
    eta: int = 10  # agent rollout episodes per outer iteration
    xi: int = 10  # held-out validation instances for the gate
    max_outer_iterations: int = 20  # safety stop; the gate normally ends first
    solver_time_limit: float | None = None

    def __post_init__(self) -> None:
        if min(self.eta0, self.eta, self.xi) < 1:
            raise ValueError("eta0, eta, and xi must all be >= 1")


@dataclass
class DaggerHistory:
    """Per-outer-iteration record of dataset growth and gate scores."""

    entries: list[dict] = field(default_factory=list)

    def dataset_sizes(self) -> list[int]:
        return [e["dataset_size"] for e in self.entries]

    def validation_scores(self) -> list[float]:
        return [e["validation_max_min"] for e in self.entries]


def _expert_target(
    instance: Instance,
    state: engine.EpisodeState,
    time_limit: float | None,
) -> int | None:
    """Optimal start for the active block given the frozen committed past
    and oracle knowledge of the remaining arrivals; None when the
    completion is infeasible under the cap."""
    remaining = tuple(
        ev.id for ev in instance.evs[state.next_ev_index :]
    )
    result = solve_completion(
        SolveRequest(
            instance=instance,
            fixed=state.committed_schedule(),
            decide=remaining,
            time_limit=time_limit,
        )
    )
    if result.status == STATUS_INFEASIBLE:
        return None
    return result.schedule.starts[state.active_ev.id]


def collect_corrections(
    model: PolicyModel,
    instance: Instance,
    episode_id: str,
    time_limit: float | None = None,
) -> list[Demonstration] | None:
    """Play one episode under the current policy and pair every visited
    observation with the expert's action from that exact state. One
    completion solve per block appearance labels the whole maneuver.
    Returns None when an expert completion is infeasible (episode skipped)."""
    state = engine.reset(instance)
    corrections: list[Demonstration] = []
    movement = model.variant.endswith("M")
    target: int | None = None
    while not state.terminal:
        at_new_block = state.budget_left == instance.horizon.T
        if at_new_block:
            target = _expert_target(instance, state, time_limit)
            if target is None:
                return None
        assert target is not None
        if movement:
            corrections.append(
                Demonstration(
                    observation=encode_observation(model.encoder, state),
                    label=int(extract_expert_action(state.candidate, target)),
                    episode_id=episode_id,
                    ev_id=state.active_ev.id,
                )
            )
            probs = model.act(state)
            state, _ = engine.step(state, Action(int(np.argmax(probs))))
        else:
            corrections.append(
                Demonstration(
                    observation=encode_observation(model.encoder, state),
                    label=target,
                    episode_id=episode_id,
                    ev_id=state.active_ev.id,
                )
            )
            probs = model.act(state)
            ev = state.active_ev
            lo, hi = engine.feasible_range(ev)
            masked = np.full(model.head_size, -np.inf)
            for s in range(lo, hi + 1):
                if engine.cap_allows(state, ev, s):
                    masked[s - 1] = probs[s - 1]
            state, _ = engine.place(state, int(np.argmax(masked)) + 1)
    return corrections


def validation_score(model: PolicyModel, instances: list[Instance]) -> float:
    """Mean terminal peak-to-valley spread over the validation instances."""
    scores = []
    for inst in instances:
        schedule, _, _ = rollout(model, inst)
        scores.append(max_min(load_of(schedule, inst)))
    return float(np.mean(scores))


def run_dagger(
    config: DaggerConfig,
    train_cfg: TrainConfig,
    scenario: ScenarioSpec,
    seed: int,
    variant: str = "I2M",
    render_rows: int = 32,
) -> tuple[PolicyModel, DaggerHistory]:
    """The full loop: initialize with eta0 expert episodes, train, then
    repeat [agent plays eta episodes -> expert corrections appended
    episode-wise -> retrain -> gate on mean Max-Min over xi held-out
    instances], keeping the best-gated model."""
    T = scenario.horizon.T
    encoder = encoder_for(variant, T=T, render_rows=render_rows, l_max=scenario.length_max)
    expert_instances = [
        sample_instance(scenario, derive_seed(seed, "expert", i))
        for i in range(config.eta0)
    ]
    val_instances = [
        sample_instance(scenario, derive_seed(seed, "validation", i))
        for i in range(config.xi)
    ]
    dataset = expert_demonstrations(
        expert_instances, variant, encoder, time_limit=config.solver_time_limit
    )
    model = train_sl(dataset, train_cfg, derive_seed(seed, "train", 0))
    best_model = model
    best_score = validation_score(model, val_instances)
    history = DaggerHistory()
    history.entries.append(
        {
            "outer_iteration": 0,
            "dataset_size": len(dataset),
            "validation_max_min": best_score,
            "improved": True,
        }
    )
    for outer in range(1, config.max_outer_iterations + 1):
        new_corrections: list[Demonstration] = []
        skipped = 0
        for e in range(config.eta):
            inst = sample_instance(scenario, derive_seed(seed, "rollout", outer, e))
            episode_id = f"dagger:{outer}:{e}"
            corr = collect_corrections(
                model, inst, episode_id, time_limit=config.solver_time_limit
            )
            if corr is None:
                skipped += 1
                log.warning("skipping episode %s: expert completion infeasible", episode_id)
                continue
            new_corrections.extend(corr)
        dataset = dataset.merged_with(new_corrections)
        model = train_sl(dataset, train_cfg, derive_seed(seed, "train", outer))
        score = validation_score(model, val_instances)
        improved = score < best_score
        history.entries.append(
            {
                "outer_iteration": outer,
                "dataset_size": len(dataset),
                "validation_max_min": score,
                "improved": improved,
                "skipped_episodes": skipped,
            }
        )
        if improved:
            best_score = score
            best_model = model
        else:
            break
    return best_model, history
