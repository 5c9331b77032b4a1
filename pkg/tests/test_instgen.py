import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from evsched import fileio
from evsched.core import Horizon, Schedule, check_feasible
from evsched.instgen import (
    EmptyWindowError,
    MixtureDist,
    NormalDist,
    ScenarioSpec,
    block_length,
    builtin_scenario,
    discretize,
    perturb_spec,
    sample_instance,
)


class TestBuiltinScenarios:
    def test_scenario_1(self):
        spec = builtin_scenario(1)
        assert spec.n_evs == 200
        assert spec.arrival == NormalDist(24.0, 12.0)
        assert spec.departure == NormalDist(72.0, 6.0)
        assert spec.length_max == 22

    def test_scenario_2_higher_demand(self):
        spec = builtin_scenario(2)
        assert spec.n_evs == 300
        assert spec.arrival == builtin_scenario(1).arrival

    def test_scenario_3_reduced_variability(self):
        assert builtin_scenario(3).arrival == NormalDist(24.0, 6.0)

    def test_scenario_4_mixture(self):
        spec = builtin_scenario(4)
        assert isinstance(spec.arrival, MixtureDist)
        assert spec.arrival.weights == (0.5, 0.5)
        assert [c.mu for c in spec.arrival.components] == [16.0, 32.0]
        assert all(c.sigma == 3.0 for c in spec.arrival.components)

    def test_unknown_id_rejected(self):
        with pytest.raises(ValueError):
            builtin_scenario(5)


class TestDiscretize:
    def test_direct_rule(self):
        assert discretize(13.2, 70.9) == (14, 70)

    def test_zero_width_window(self):
        assert discretize(5.0, 5.0) == (5, 5)

    def test_clamp_then_round(self):
        assert discretize(0.3, 96.7, T=96) == (1, 96)

    def test_empty_window_signals_resample(self):
        with pytest.raises(EmptyWindowError):
            discretize(5.4, 5.6)


class TestBlockLength:
    def test_exact_division(self):
        assert block_length(0, 10.5, 1.75) == 6

    def test_ceiling_forced(self):
        assert block_length(0, 10.6, 1.75) == 7

    def test_zero_deficit(self):
        assert block_length(5, 5, 1.75) == 0

    def test_default_energy_per_slot(self):
        assert block_length(0, 1.75) == 1

    def test_nonpositive_u_rejected(self):
        with pytest.raises(ValueError):
            block_length(0, 5, 0)


class TestSampleInstance:
    def test_scenario1_shape(self):
        inst = sample_instance(builtin_scenario(1), seed=7)
        assert inst.n_evs == 200
        assert all(1 <= ev.ar <= ev.d <= 96 for ev in inst.evs)
        assert all(1 <= ev.l <= ev.d - ev.ar + 1 for ev in inst.evs)
        arrivals = [ev.ar for ev in inst.evs]
        assert arrivals == sorted(arrivals)

    def test_singleton_spec_feasible_immediate_start(self):
        spec = ScenarioSpec(n_evs=1, arrival=NormalDist(24, 12))
        inst = sample_instance(spec, seed=3)
        sched = Schedule({inst.evs[0].id: inst.evs[0].ar})
        assert check_feasible(sched, inst).ok

    def test_determinism_byte_identical(self):
        spec = builtin_scenario(1)
        a = fileio.dump_instance(sample_instance(spec, seed=123))
        b = fileio.dump_instance(sample_instance(spec, seed=123))
        assert a == b

    def test_different_seeds_differ(self):
        spec = builtin_scenario(1)
        a = fileio.dump_instance(sample_instance(spec, seed=1))
        b = fileio.dump_instance(sample_instance(spec, seed=2))
        assert a != b

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=15)
    def test_immediate_start_always_feasible(self, seed):
        spec = ScenarioSpec(
            n_evs=20, arrival=NormalDist(24, 12), horizon=Horizon(T=96)
        )
        inst = sample_instance(spec, seed=seed)
        sched = Schedule({ev.id: ev.ar for ev in inst.evs})
        assert check_feasible(sched, inst).ok

    def test_arrival_moments_scenario1(self):
        # 50 instances x 200 EVs = 10,000 arrivals; truncation effects are
        # in play, so the widened +-1.0 tolerance applies
        spec = builtin_scenario(1)
        arrivals = []
        for seed in range(50):
            arrivals.extend(ev.ar for ev in sample_instance(spec, seed=seed).evs)
        assert len(arrivals) == 10_000
        mean = float(np.mean(arrivals))
        std = float(np.std(arrivals))
        assert abs(mean - 24.0) <= 1.0, mean
        assert abs(std - 12.0) <= 1.0, std


class TestPerturbSpec:
    def test_band_zero_identity(self):
        spec = builtin_scenario(1)
        out = perturb_spec(spec, 0.0, {"mean", "std", "count"}, seed=5)
        assert out.arrival == spec.arrival
        assert out.n_evs == spec.n_evs

    def test_count_band(self):
        spec = builtin_scenario(1)
        counts = {
            perturb_spec(spec, 0.10, {"count"}, seed=s).n_evs for s in range(200)
        }
        assert min(counts) >= 180 and max(counts) <= 220
        assert len(counts) > 10  # actually varies

    def test_count_only_leaves_arrival_untouched(self):
        spec = builtin_scenario(1)
        out = perturb_spec(spec, 0.10, {"count"}, seed=5)
        assert out.arrival == spec.arrival

    def test_joint_worst_case_perturbs_all_three(self):
        spec = builtin_scenario(1)
        out = perturb_spec(spec, 0.10, {"mean", "std", "count"}, seed=9)
        assert out.arrival != spec.arrival
        assert isinstance(out.arrival, NormalDist)
        assert 0.9 * 24 <= out.arrival.mu <= 1.1 * 24
        assert 0.9 * 12 <= out.arrival.sigma <= 1.1 * 12
        assert 180 <= out.n_evs <= 220

    def test_mixture_perturbation_scales_components(self):
        spec = builtin_scenario(4)
        out = perturb_spec(spec, 0.10, {"mean"}, seed=11)
        assert isinstance(out.arrival, MixtureDist)
        ratios = [
            o.mu / c.mu
            for o, c in zip(out.arrival.components, spec.arrival.components)
        ]
        assert ratios[0] == pytest.approx(ratios[1])

    def test_determinism(self):
        spec = builtin_scenario(1)
        a = perturb_spec(spec, 0.10, {"mean", "std"}, seed=21)
        b = perturb_spec(spec, 0.10, {"mean", "std"}, seed=21)
        assert a == b
