"""Learned policies: the four input/output variants (I2M, I2S, V2M, V2S),
expert demonstration extraction from oracle schedules, supervised training
on those demonstrations, and deterministic rollouts.

Variant conventions:
  I2M  image input  -> movement logits (3)       conv trunk
  I2S  image input  -> start-slot logits (T)     conv trunk
  V2M  vector input -> movement logits (3)       mlp trunk, position one-hot
  V2S  vector input -> start-slot logits (T)     mlp trunk
Movement heads imitate joystick actions; schedule heads pick the start slot
directly with infeasible slots masked at rollout time.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import engine
from .core import Instance, Schedule
from .engine import Action, EpisodeState
from .nn import (
    Adam,
    BatchNorm2d,
    Conv2d,
    Dense,
    Dropout,
    Flatten,
    MaxPool2d,
    Network,
    ReLU,
    softmax,
    weighted_cross_entropy,
)
from .solver import STATUS_INFEASIBLE, STATUS_OPTIMAL, solve_oracle
from .util import derive_seed

VARIANTS = ("I2M", "I2S", "V2M", "V2S")


@dataclass(frozen=True)
class ImageEncoderCfg:
    kind: str = "image"
    render_rows: int = 32
    T: int = 96


@dataclass(frozen=True)
class VectorEncoderCfg:
    kind: str = "vector"
    l_max: int = 22
    T: int = 96
    with_position: bool = False


EncoderCfg = ImageEncoderCfg | VectorEncoderCfg


def encoder_for(variant: str, T: int, render_rows: int = 32, l_max: int = 22) -> EncoderCfg:
    if variant in ("I2M", "I2S"):
        return ImageEncoderCfg(render_rows=render_rows, T=T)
    if variant == "V2M":
        return VectorEncoderCfg(l_max=l_max, T=T, with_position=True)
    if variant == "V2S":
        return VectorEncoderCfg(l_max=l_max, T=T, with_position=False)
    raise ValueError(f"unknown variant {variant!r}")


def encode_observation(cfg: EncoderCfg, state: EpisodeState) -> np.ndarray:
    if isinstance(cfg, ImageEncoderCfg):
        return engine.render_image(state, render_rows=cfg.render_rows).astype(np.float64)
    return engine.encode_vector(state, with_position=cfg.with_position, l_max=cfg.l_max)


@dataclass(frozen=True)
class Demonstration:
    """One labeled decision: observation plus an action id (0..2) for
    movement variants or a start slot (1..T) for schedule variants."""

    observation: np.ndarray
    label: int
    episode_id: str
    ev_id: int


@dataclass(frozen=True)
class DemoSet:
    variant: str
    encoder: EncoderCfg
    demos: tuple[Demonstration, ...]

    def __len__(self) -> int:
        return len(self.demos)

    def merged_with(self, extra: Sequence[Demonstration]) -> "DemoSet":
        return DemoSet(self.variant, self.encoder, self.demos + tuple(extra))


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    max_iterations: int = 100
    early_stop_patience: int = 5
    eval_fraction: float = 0.2
    batch_size: int | None = None  # None = per-variant default (CNN 256, MLP 512)
    conv_filters: tuple[int, int, int] = (16, 32, 32)
    fc_sizes: tuple[int, int] = (256, 128)
    fc_dropout: tuple[float, float] = (0.4, 0.3)
    mlp_hidden: tuple[int, int] = (256, 256)
    mlp_dropout: float = 0.2

    def __post_init__(self) -> None:
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")
        if not (0 < self.eval_fraction < 1):
            raise ValueError("eval_fraction must be in (0, 1)")


class PolicyModel:
    """A trained parametric policy: encoder config + network + metadata."""

    def __init__(
        self,
        variant: str,
        encoder: EncoderCfg,
        network: Network,
        rng_seed: int,
        train_log: list[dict] | None = None,
    ):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        self.variant = variant
        self.encoder = encoder
        self.network = network
        self.rng_seed = rng_seed
        self.train_log = train_log or []
        self._net_spec: dict = {}

    @property
    def head_size(self) -> int:
        return 3 if self.variant.endswith("M") else self.encoder.T

    def param_count(self) -> int:
        return self.network.param_count()

    def forward_probs(self, obs: np.ndarray) -> np.ndarray:
        logits = self.network.forward(obs[None, ...], train=False, rng=None)[0]
        return softmax(logits)

    def act(self, state: EpisodeState) -> np.ndarray:
        return self.forward_probs(encode_observation(self.encoder, state))

    # persistence -----------------------------------------------------------

    def save(self, path: Path | str) -> None:
        spec = {
            "format": "evsched-policy",
            "version": 1,
            "variant": self.variant,
            "encoder": {
                k: v for k, v in self.encoder.__dict__.items()
            },
            "rng_seed": self.rng_seed,
            "net_spec": self._net_spec,
            "weights": {
                k: v.tolist() for k, v in self.network.get_weights().items()
            },
        }
        Path(path).write_text(json.dumps(spec, sort_keys=True))

    @staticmethod
    def load(path: Path | str) -> "PolicyModel":
        data = json.loads(Path(path).read_text())
        if data.get("format") != "evsched-policy":
            raise ValueError(f"{path} is not a policy file")
        enc = data["encoder"]
        if enc["kind"] == "image":
            encoder: EncoderCfg = ImageEncoderCfg(render_rows=enc["render_rows"], T=enc["T"])
        else:
            encoder = VectorEncoderCfg(
                l_max=enc["l_max"], T=enc["T"], with_position=enc["with_position"]
            )
        model = build_network(
            data["variant"],
            data["rng_seed"],
            encoder=encoder,
            **{k: tuple(v) if isinstance(v, list) else v for k, v in data["net_spec"].items()},
        )
        model.network.set_weights(
            {k: np.asarray(v) for k, v in data["weights"].items()}
        )
        return model


def build_network(
    variant: str,
    seed: int,
    encoder: EncoderCfg | None = None,
    T: int = 96,
    render_rows: int = 32,
    l_max: int = 22,
    conv_filters: tuple[int, int, int] = (16, 32, 32),
    fc_sizes: tuple[int, int] = (256, 128),
    fc_dropout: tuple[float, float] = (0.4, 0.3),
    mlp_hidden: tuple[int, int] = (256, 256),
    mlp_dropout: float = 0.2,
) -> PolicyModel:
    """Deterministically initialized policy network for a variant.

    Image variants: three 3x3 conv layers (batch-normalized, rectified,
    2x2 max-pooled), then fully connected 256 and 128 with dropout 0.4/0.3,
    then the softmax head. Vector variants: two hidden layers of 256 with
    dropout 0.2. Heads: 3 outputs for movement, T for schedule."""
    if encoder is None:
        encoder = encoder_for(variant, T=T, render_rows=render_rows, l_max=l_max)
    rng = np.random.default_rng(seed)
    head = 3 if variant.endswith("M") else encoder.T
    layers: list
    if isinstance(encoder, ImageEncoderCfg):
        h, w = encoder.render_rows, encoder.T
        layers = []
        c_in = 3
        for c_out in conv_filters:
            layers += [Conv2d(c_in, c_out, rng), BatchNorm2d(c_out), ReLU(), MaxPool2d(2)]
            c_in = c_out
            h, w = h // 2, w // 2
        if h * w == 0:
            raise ValueError("image too small for three pooling stages")
        layers.append(Flatten())
        d = c_in * h * w
        layers += [Dense(d, fc_sizes[0], rng), ReLU(), Dropout(fc_dropout[0])]
        layers += [Dense(fc_sizes[0], fc_sizes[1], rng), ReLU(), Dropout(fc_dropout[1])]
        layers.append(Dense(fc_sizes[1], head, rng, scale=0.01 * np.sqrt(2.0 / fc_sizes[1])))
        net_spec = {
            "conv_filters": conv_filters,
            "fc_sizes": fc_sizes,
            "fc_dropout": fc_dropout,
        }
    else:
        d = encoder.l_max + encoder.T + (encoder.T if encoder.with_position else 0)
        layers = [Dense(d, mlp_hidden[0], rng), ReLU(), Dropout(mlp_dropout)]
        layers += [Dense(mlp_hidden[0], mlp_hidden[1], rng), ReLU(), Dropout(mlp_dropout)]
        layers.append(Dense(mlp_hidden[1], head, rng, scale=0.01 * np.sqrt(2.0 / mlp_hidden[1])))
        net_spec = {"mlp_hidden": mlp_hidden, "mlp_dropout": mlp_dropout}
    model = PolicyModel(variant, encoder, Network(layers), rng_seed=seed)
    model._net_spec = net_spec
    return model


def extract_expert_action(candidate: int, target: int) -> Action:
    """First movement toward the target start: LEFT above, RIGHT below,
    DOWN on the spot."""
    if candidate > target:
        return Action.LEFT
    if candidate < target:
        return Action.RIGHT
    return Action.DOWN


def _movement_pairs(
    state: EpisodeState, target: int, encoder: EncoderCfg, episode_id: str
) -> tuple[list[Demonstration], EpisodeState]:
    """Replay the shortest movement path to `target`, recording one
    (observation, expert action) pair per decision."""
    demos: list[Demonstration] = []
    ev_id = state.active_ev.id
    while True:
        action = extract_expert_action(state.candidate, target)
        demos.append(
            Demonstration(
                observation=encode_observation(encoder, state),
                label=int(action),
                episode_id=episode_id,
                ev_id=ev_id,
            )
        )
        state, reward = engine.step(state, action)
        if reward is not None:
            return demos, state


def expert_demonstrations(
    instances: Sequence[Instance],
    variant: str,
    encoder: EncoderCfg | None = None,
    time_limit: float | None = None,
) -> DemoSet:
    """Label episodes with the perfect-information optimum: movement
    variants get one pair per joystick decision along the shortest path,
    schedule variants one pair per block at its appearance."""
    if not instances:
        raise ValueError("need at least one instance")
    T = instances[0].horizon.T
    if encoder is None:
        encoder = encoder_for(variant, T=T)
    demos: list[Demonstration] = []
    for instance in instances:
        result = solve_oracle(instance, time_limit=time_limit)
        if result.status == STATUS_INFEASIBLE:
            raise ValueError(
                f"oracle infeasible on instance seed {instance.seed}; no expert exists"
            )
        if result.status != STATUS_OPTIMAL:
            warnings.warn(
                f"expert uses a {result.status} oracle on seed {instance.seed}"
            )
        episode_id = f"{instance.scenario_id}:{instance.seed}"
        state = engine.reset(instance)
        while not state.terminal:
            ev = state.active_ev
            target = result.schedule.starts[ev.id]
            if variant.endswith("M"):
                pairs, state = _movement_pairs(state, target, encoder, episode_id)
                demos.extend(pairs)
            else:
                demos.append(
                    Demonstration(
                        observation=encode_observation(encoder, state),
                        label=target,
                        episode_id=episode_id,
                        ev_id=ev.id,
                    )
                )
                state, _ = engine.place(state, target)
    return DemoSet(variant=variant, encoder=encoder, demos=tuple(demos))


def _labels_to_indices(demoset: DemoSet) -> np.ndarray:
    labels = np.array([d.label for d in demoset.demos], dtype=np.int64)
    if demoset.variant.endswith("S"):
        labels = labels - 1  # start slots are 1-indexed
    return labels


def class_weight_vector(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Weights inversely proportional to label frequency, normalized so a
    balanced batch has mean weight 1 (absent classes get weight 0)."""
    counts = np.bincount(labels, minlength=n_classes).astype(np.float64)
    present = counts > 0
    weights = np.zeros(n_classes)
    weights[present] = len(labels) / (present.sum() * counts[present])
    return weights


def train_sl(
    demoset: DemoSet,
    config: TrainConfig,
    seed: int,
    model: PolicyModel | None = None,
) -> PolicyModel:
    """Supervised imitation: class-weighted cross-entropy, Adam, 80/20
    split, early stopping on the evaluation loss with the best-eval weights
    restored. One iteration = one pass over the training split."""
    if not demoset.demos:
        raise ValueError("empty demonstration set")
    if model is None:
        if isinstance(demoset.encoder, ImageEncoderCfg):
            model = build_network(
                demoset.variant,
                derive_seed(seed, "init"),
                encoder=demoset.encoder,
                conv_filters=config.conv_filters,
                fc_sizes=config.fc_sizes,
                fc_dropout=config.fc_dropout,
            )
        else:
            model = build_network(
                demoset.variant,
                derive_seed(seed, "init"),
                encoder=demoset.encoder,
                mlp_hidden=config.mlp_hidden,
                mlp_dropout=config.mlp_dropout,
            )
    X = np.stack([d.observation for d in demoset.demos])
    y = _labels_to_indices(demoset)
    n_classes = model.head_size
    if np.unique(y).size < 2:
        warnings.warn("single-class demonstration set; the policy will be degenerate")

    rng = np.random.default_rng(derive_seed(seed, "shuffle"))
    perm = rng.permutation(len(y))
    n_eval = max(1, round(config.eval_fraction * len(y)))
    if n_eval >= len(y):
        n_eval = len(y) - 1 if len(y) > 1 else 0
    eval_idx, train_idx = perm[:n_eval], perm[n_eval:]
    if train_idx.size == 0:
        train_idx = perm
    X_train, y_train = X[train_idx], y[train_idx]
    X_eval, y_eval = X[eval_idx], y[eval_idx]
    weights = class_weight_vector(y_train, n_classes)

    batch = config.batch_size
    if batch is None:
        batch = 256 if isinstance(demoset.encoder, ImageEncoderCfg) else 512
    opt = Adam(model.network, lr=config.learning_rate)
    drop_rng = np.random.default_rng(derive_seed(seed, "dropout"))

    def eval_loss() -> float:
        if len(y_eval) == 0:
            return float("nan")
        logits = model.network.forward(X_eval, train=False, rng=None)
        loss, _ = weighted_cross_entropy(logits, y_eval, weights)
        return loss

    best_eval = float("inf")
    best_weights = model.network.get_weights()
    stale = 0
    log: list[dict] = []
    for iteration in range(config.max_iterations):
        order = rng.permutation(len(y_train))
        total, seen = 0.0, 0
        for lo in range(0, len(order), batch):
            idx = order[lo : lo + batch]
            model.network.zero_grads()
            logits = model.network.forward(X_train[idx], train=True, rng=drop_rng)
            loss, dlogits = weighted_cross_entropy(logits, y_train[idx], weights)
            model.network.backward(dlogits)
            opt.step()
            total += loss * len(idx)
            seen += len(idx)
        train_loss = total / max(seen, 1)
        ev_loss = eval_loss()
        log.append({"iteration": iteration, "train_loss": train_loss, "eval_loss": ev_loss})
        if np.isnan(ev_loss) or ev_loss < best_eval - 1e-12:
            best_eval = ev_loss if not np.isnan(ev_loss) else best_eval
            best_weights = model.network.get_weights()
            stale = 0
        else:
            stale += 1
            if stale >= config.early_stop_patience:
                break
    model.network.set_weights(best_weights)
    model.train_log = log
    return model


def rollout(
    model: PolicyModel, instance: Instance
) -> tuple[Schedule, list[engine.StepRecord], int]:
    """Deterministic greedy rollout. Movement variants argmax an action per
    step (walls and the budget behave exactly as for a human player);
    schedule variants argmax over feasible start slots with infeasible
    logits masked, committed as the equivalent movement path."""
    state = engine.reset(instance)
    trace: list[engine.StepRecord] = []
    total = 0
    while not state.terminal:
        probs = model.act(state)
        if model.variant.endswith("M"):
            action = Action(int(np.argmax(probs)))
            ev_id = state.active_ev.id
            state, reward = engine.step(state, action)
            after = state.committed[-1][1] if reward is not None else state.candidate
            trace.append(
                engine.StepRecord(
                    ev_id=ev_id, action=action, candidate_after=int(after), reward=reward
                )
            )
            if reward is not None:
                total += reward
        else:
            ev = state.active_ev
            lo, hi = engine.feasible_range(ev)
            masked = np.full(model.head_size, -np.inf)
            for s in range(lo, hi + 1):
                if engine.cap_allows(state, ev, s):
                    masked[s - 1] = probs[s - 1]
            if not np.isfinite(masked).any():
                raise engine.CapacityDeadlockError(
                    f"no cap-feasible start for EV {ev.id}"
                )
            target = int(np.argmax(masked)) + 1
            path = [Action.RIGHT] * (target - lo) + [Action.DOWN]
            for action in path:
                ev_id = state.active_ev.id
                state, reward = engine.step(state, action)
                after = state.committed[-1][1] if reward is not None else state.candidate
                trace.append(
                    engine.StepRecord(
                        ev_id=ev_id, action=action, candidate_after=int(after), reward=reward
                    )
                )
                if reward is not None:
                    total += reward
    return state.committed_schedule(), trace, total


def random_rollout(instance: Instance, seed: int) -> tuple[Schedule, int]:
    """Uniform-random legal play; the baseline policy for desk-scale
    learning checks."""
    rng = np.random.default_rng(seed)
    state = engine.reset(instance)
    total = 0
    while not state.terminal:
        legal = engine.legal_actions(state)
        action = legal[int(rng.integers(len(legal)))]
        state, reward = engine.step(state, action)
        if reward is not None:
            total += reward
    return state.committed_schedule(), total


def save_demoset(demoset: DemoSet, path: Path | str) -> None:
    """Record-per-line dump: a header line with variant/encoder, then one
    JSON object per demonstration."""
    with open(path, "w") as fh:
        header = {
            "format": "evsched-demos",
            "variant": demoset.variant,
            "encoder": dict(demoset.encoder.__dict__),
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for d in demoset.demos:
            record = {
                "episode_id": d.episode_id,
                "ev_id": d.ev_id,
                "label": d.label,
                "observation": d.observation.tolist(),
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_demoset(path: Path | str) -> DemoSet:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "evsched-demos":
            raise ValueError(f"{path} is not a demonstration file")
        enc = header["encoder"]
        if enc["kind"] == "image":
            encoder: EncoderCfg = ImageEncoderCfg(render_rows=enc["render_rows"], T=enc["T"])
        else:
            encoder = VectorEncoderCfg(
                l_max=enc["l_max"], T=enc["T"], with_position=enc["with_position"]
            )
        demos = []
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            demos.append(
                Demonstration(
                    observation=np.asarray(rec["observation"], dtype=np.float64),
                    label=rec["label"],
                    episode_id=rec["episode_id"],
                    ev_id=rec["ev_id"],
                )
            )
    return DemoSet(variant=header["variant"], encoder=encoder, demos=tuple(demos))
