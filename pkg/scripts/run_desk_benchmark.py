"""Desk-scale policy comparison: oracle, re-optimization, the three
heuristics, the plug-in baseline, and (optionally) saved learned policies on
seeded 20-EV/48-slot instances, with 95% confidence intervals and the
avoided-capacity economics relative to plug-in-to-charge.

Usage:
    python scripts/run_desk_benchmark.py [--instances 30] [--seed-base 0]
                                         [--model path/to/model.json ...]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from evsched.analysis import EconParams, avoided_value, evaluate  # noqa: E402
from evsched.catalog import policy_by_name  # noqa: E402
from evsched.core import Horizon  # noqa: E402
from evsched.heuristics import ThresholdConfig, calibrate_alpha, calibrate_beta, x_threshold  # noqa: E402
from evsched.instgen import NormalDist, ScenarioSpec, sample_instance  # noqa: E402

DESK48 = ScenarioSpec(
    n_evs=20,
    arrival=NormalDist(12.0, 6.0),
    departure=NormalDist(34.0, 6.0),
    length_max=8,
    horizon=Horizon(T=48),
    name="desk48",
)


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--instances", type=int, default=30)
    parser.add_argument("--seed-base", type=int, default=0)
    parser.add_argument("--calibration-instances", type=int, default=20)
    parser.add_argument("--model", action="append", default=[])
    parser.add_argument("--time-limit", type=float, default=60.0)
    args = parser.parse_args()

    instances = [
        sample_instance(DESK48, seed=args.seed_base + i) for i in range(args.instances)
    ]
    calibration = [
        sample_instance(DESK48, seed=10_000 + i)
        for i in range(args.calibration_instances)
    ]
    alpha_x = calibrate_alpha(calibration)
    beta_x = calibrate_beta(calibration, time_limit=args.time_limit)
    print(f"calibrated thresholds: alpha X={alpha_x}, beta X={beta_x}")

    policies = [
        ("oracle", policy_by_name("oracle", time_limit=args.time_limit)),
        ("reopt", policy_by_name("reopt", time_limit=args.time_limit)),
        ("rowfill", policy_by_name("rowfill")),
        ("alpha", lambda inst: x_threshold(inst, ThresholdConfig(x=alpha_x))),
        ("beta", lambda inst: x_threshold(inst, ThresholdConfig(x=beta_x))),
        ("plugin", policy_by_name("plugin")),
    ]
    for path in args.model:
        policies.append((Path(path).stem, policy_by_name(f"model:{path}")))

    report = evaluate(policies, instances)
    print(f"\n{'policy':>10} | {'max-min':>16} | {'rmse':>16} | {'peak':>16}")
    print("-" * 70)
    for name, _ in policies:
        cells = []
        for metric in ("max_min", "rmse", "peak"):
            agg = report.aggregate(name, metric)
            cells.append(f"{agg.mean:7.3f} ±{agg.ci_half_width:5.3f}")
        print(f"{name:>10} | " + " | ".join(cells))

    print("\navoided capacity value vs plug-in-to-charge:")
    params = EconParams()
    for name, _ in policies:
        if name == "plugin":
            continue
        record = avoided_value(report, name, params)
        print(
            f"{name:>10}: {record.peak_reduction_kw:8.1f} kW  "
            f"{record.per_feeder_cad_year:12,.0f} CAD/feeder-yr  "
            f"{record.regional_cad_year:14,.0f} CAD regional"
        )


if __name__ == "__main__":
    main()
