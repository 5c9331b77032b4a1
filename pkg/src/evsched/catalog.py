"""Named schedule-producing policies, shared by the CLI, the evaluation
harness, and the episode service's comparison endpoint."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Callable, Sequence

from .core import Instance, Schedule
from .heuristics import (
    ThresholdConfig,
    calibrate_alpha,
    calibrate_beta,
    plug_in_to_charge,
    row_filling,
    x_threshold,
)
from .policies import PolicyModel, random_rollout, rollout
from .solver import reopt_policy, solve_oracle

PolicyFn = Callable[[Instance], Schedule]


def policy_by_name(
    name: str,
    calibration_set: Sequence[Instance] = (),
    time_limit: float | None = None,
) -> PolicyFn:
    """Resolve a policy name to a schedule function.

    Names: oracle | reopt | rowfill | plugin | alpha | beta | threshold:X |
    model:PATH | random:SEED. alpha/beta calibrate on calibration_set when
    given, else on the instance being scheduled."""
    if name == "oracle":
        return lambda inst: solve_oracle(inst, time_limit=time_limit).schedule
    if name == "reopt":
        return lambda inst: reopt_policy(inst, time_limit=time_limit)
    if name == "rowfill":
        return row_filling
    if name == "plugin":
        return plug_in_to_charge
    if name == "alpha":

        def alpha_policy(inst: Instance) -> Schedule:
            pool = calibration_set or [inst]
            return x_threshold(inst, ThresholdConfig(x=calibrate_alpha(pool)))

        return alpha_policy
    if name == "beta":

        def beta_policy(inst: Instance) -> Schedule:
            pool = calibration_set or [inst]
            return x_threshold(
                inst, ThresholdConfig(x=calibrate_beta(pool, time_limit=time_limit))
            )

        return beta_policy
    if name.startswith("threshold:"):
        raw = name.split(":", 1)[1]
        x = math.inf if raw in ("inf", "infinity") else int(raw)
        return lambda inst: x_threshold(inst, ThresholdConfig(x=x))
    if name.startswith("model:"):
        model = PolicyModel.load(Path(name.split(":", 1)[1]))
        return lambda inst: rollout(model, inst)[0]
    if name.startswith("random:"):
        seed = int(name.split(":", 1)[1])
        return lambda inst: random_rollout(inst, seed)[0]
    raise ValueError(f"unknown policy name {name!r}")
