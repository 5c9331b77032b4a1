"""Benchmark instance generation: the four builtin arrival scenarios plus
sensitivity perturbations, fully deterministic per (spec, seed).

Each EV draws from its own counter-based Philox stream keyed by
(instance seed, ev index), so per-EV draws stay identical under refactoring
of the sampling loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np
from numpy.random import Generator, Philox

from .core import EV, Horizon, Instance

_MASK64 = (1 << 64) - 1
_RETRY_CAP = 1000


class GenerationError(RuntimeError):
    """Resampling failed to produce a valid window within the retry cap."""


class EmptyWindowError(ValueError):
    """Discretization produced an empty window; caller should resample."""


@dataclass(frozen=True)
class NormalDist:
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class MixtureDist:
    """Weighted mixture of normals (scenario 4 uses two equal components)."""

    components: tuple[NormalDist, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.components) != len(self.weights) or not self.components:
            raise ValueError("components and weights must be non-empty and aligned")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("mixture weights must sum to 1")


ArrivalDist = NormalDist | MixtureDist


@dataclass(frozen=True)
class ScenarioSpec:
    """Generator parameters for one experimental scenario."""

    n_evs: int
    arrival: ArrivalDist
    departure: NormalDist = NormalDist(72.0, 6.0)
    length_max: int = 22
    horizon: Horizon = Horizon()
    cap: int | None = None
    name: str = ""
    perturbation_band: float = 0.0  # provenance: band used by perturb_spec

    def __post_init__(self) -> None:
        if self.n_evs < 1:
            raise ValueError(f"n_evs must be >= 1, got {self.n_evs}")
        if not (1 <= self.length_max <= self.horizon.T):
            raise ValueError(
                f"length_max {self.length_max} outside [1, T={self.horizon.T}]"
            )


def builtin_scenario(scenario_id: int) -> ScenarioSpec:
    """The four published scenarios: evening rush, higher demand,
    reduced variability, and bimodal two-peak arrivals."""
    if scenario_id == 1:
        return ScenarioSpec(n_evs=200, arrival=NormalDist(24.0, 12.0), name="scenario1")
    if scenario_id == 2:
        return ScenarioSpec(n_evs=300, arrival=NormalDist(24.0, 12.0), name="scenario2")
    if scenario_id == 3:
        return ScenarioSpec(n_evs=200, arrival=NormalDist(24.0, 6.0), name="scenario3")
    if scenario_id == 4:
        return ScenarioSpec(
            n_evs=200,
            arrival=MixtureDist(
                components=(NormalDist(16.0, 3.0), NormalDist(32.0, 3.0)),
                weights=(0.5, 0.5),
            ),
            name="scenario4",
        )
    raise ValueError(f"unknown builtin scenario id {scenario_id}, expected 1..4")


def discretize(ar_cont: float, d_cont: float, T: int = 96) -> tuple[int, int]:
    """Round continuous timestamps onto the slot grid: ar up, d down,
    after clamping both into [1, T]."""
    ar_c = min(max(ar_cont, 1.0), float(T))
    d_c = min(max(d_cont, 1.0), float(T))
    ar = math.ceil(ar_c)
    d = math.floor(d_c)
    if ar > d:
        raise EmptyWindowError(
            f"window empty after rounding: ({ar_cont}, {d_cont}) -> ({ar}, {d})"
        )
    return ar, d


def block_length(soc_ar: float, soc_d: float, u: float = 1.75) -> int:
    """Contiguous slots needed to lift the state of charge from soc_ar to
    soc_d at u energy per slot (default 7 kW for 15 min = 1.75 kWh)."""
    if u <= 0:
        raise ValueError(f"per-slot energy u must be positive, got {u}")
    if soc_d < soc_ar:
        raise ValueError("target state of charge below the arrival state")
    return math.ceil((soc_d - soc_ar) / u)


def _ev_rng(seed: int, ev_index: int) -> Generator:
    return Generator(Philox(key=np.array([seed & _MASK64, ev_index], dtype=np.uint64)))


def _sample_arrival(dist: ArrivalDist, rng: Generator) -> float:
    if isinstance(dist, NormalDist):
        return rng.normal(dist.mu, dist.sigma)
    k = rng.choice(len(dist.components), p=np.asarray(dist.weights))
    comp = dist.components[k]
    return rng.normal(comp.mu, comp.sigma)


def sample_instance(spec: ScenarioSpec, seed: int) -> Instance:
    """Draw one instance: arrivals clamped into the horizon, departures
    accepted by rejection so they neither precede arrivals nor exceed T,
    lengths clipped to fit each window (floor 1)."""
    T = spec.horizon.T
    drawn: list[tuple[int, int, int]] = []
    for k in range(spec.n_evs):
        rng = _ev_rng(seed, k)
        for _ in range(_RETRY_CAP):
            ar_cont = _sample_arrival(spec.arrival, rng)
            d_cont = rng.normal(spec.departure.mu, spec.departure.sigma)
            ar = math.ceil(min(max(ar_cont, 1.0), float(T)))
            d = math.floor(d_cont)
            if 1 <= ar <= d <= T:
                break
        else:
            raise GenerationError(
                f"EV draw {k} failed to produce a valid window in {_RETRY_CAP} tries"
            )
        length = int(rng.integers(1, spec.length_max + 1))
        length = max(1, min(length, d - ar + 1))
        drawn.append((ar, d, length))
    drawn.sort(key=lambda t: t[0])
    evs = tuple(
        EV(id=i, ar=ar, d=d, l=length) for i, (ar, d, length) in enumerate(drawn, start=1)
    )
    return Instance(
        horizon=spec.horizon,
        evs=evs,
        cap=spec.cap,
        scenario_id=spec.name or "custom",
        seed=seed,
    )


def sample_instances(spec: ScenarioSpec, seeds: Iterable[int]) -> list[Instance]:
    return [sample_instance(spec, s) for s in seeds]


def spec_to_dict(spec: ScenarioSpec) -> dict:
    if isinstance(spec.arrival, NormalDist):
        arrival: dict = {"mu": spec.arrival.mu, "sigma": spec.arrival.sigma}
    else:
        arrival = {
            "mixture": [
                {"mu": c.mu, "sigma": c.sigma, "weight": w}
                for c, w in zip(spec.arrival.components, spec.arrival.weights)
            ]
        }
    return {
        "name": spec.name,
        "n_evs": spec.n_evs,
        "arrival": arrival,
        "departure": {"mu": spec.departure.mu, "sigma": spec.departure.sigma},
        "length_max": spec.length_max,
        "T": spec.horizon.T,
        "slot_minutes": spec.horizon.slot_minutes,
        "cap": spec.cap,
    }


def spec_from_dict(data: dict) -> ScenarioSpec:
    arr = data["arrival"]
    if "mixture" in arr:
        arrival: ArrivalDist = MixtureDist(
            components=tuple(NormalDist(c["mu"], c["sigma"]) for c in arr["mixture"]),
            weights=tuple(c["weight"] for c in arr["mixture"]),
        )
    else:
        arrival = NormalDist(arr["mu"], arr["sigma"])
    dep = data.get("departure", {"mu": 72.0, "sigma": 6.0})
    return ScenarioSpec(
        n_evs=data["n_evs"],
        arrival=arrival,
        departure=NormalDist(dep["mu"], dep["sigma"]),
        length_max=data.get("length_max", 22),
        horizon=Horizon(T=data.get("T", 96), slot_minutes=data.get("slot_minutes", 15)),
        cap=data.get("cap"),
        name=data.get("name", "custom"),
    )


def perturb_spec(
    spec: ScenarioSpec,
    band: float,
    targets: frozenset[str] | set[str],
    seed: int,
) -> ScenarioSpec:
    """Scale targeted parameters by independent uniform factors in
    [1-band, 1+band]. Targets: "mean" and "std" act on the arrival
    distribution (every mixture component), "count" on n_evs (rounded,
    floor 1)."""
    if not (0 <= band < 1):
        raise ValueError(f"band must be in [0, 1), got {band}")
    unknown = set(targets) - {"mean", "std", "count"}
    if unknown:
        raise ValueError(f"unknown perturbation targets {sorted(unknown)}")
    rng = Generator(Philox(key=np.array([seed & _MASK64, 0], dtype=np.uint64)))
    # one factor per target, drawn in fixed order for determinism
    factors = {t: float(rng.uniform(1.0 - band, 1.0 + band)) for t in ("mean", "std", "count")}

    arrival = spec.arrival
    m_f = factors["mean"] if "mean" in targets else 1.0
    s_f = factors["std"] if "std" in targets else 1.0
    if isinstance(arrival, NormalDist):
        arrival = NormalDist(arrival.mu * m_f, arrival.sigma * s_f)
    else:
        arrival = MixtureDist(
            components=tuple(
                NormalDist(c.mu * m_f, c.sigma * s_f) for c in arrival.components
            ),
            weights=arrival.weights,
        )
    n_evs = spec.n_evs
    if "count" in targets:
        n_evs = max(1, round(spec.n_evs * factors["count"]))
    return replace(spec, arrival=arrival, n_evs=n_evs, perturbation_band=band)
