"""Print every published constant the analysis module reproduces: the
Greater Montréal feeder calibration, the avoided-capacity arithmetic for the
two headline cases, and the generalization-bound numbers.

Usage: python scripts/reproduce_calibration.py
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from evsched.analysis import (  # noqa: E402
    Aggregate,
    EconParams,
    EvalReport,
    avoided_value,
    dependent_threshold,
    gma_calibration,
    head_complexity_ratio,
    mlp_param_count,
    natarajan_threshold,
)


def econ(base_peak: float, policy_peak: float):
    report = EvalReport()
    report.aggregates = [
        Aggregate("plugin", "peak", base_peak, 0.0, 0.0, 100),
        Aggregate("policy", "peak", policy_peak, 0.0, 0.0, 100),
    ]
    return avoided_value(report, "policy", EconParams())


def main() -> None:
    cal = gma_calibration()
    print("== region calibration ==")
    print(f"regional EV counts sum: {cal['ev_total_raw']:,} (rounded {cal['ev_total']:,})")
    print(f"feeders: 16*33 + 11*25 = {cal['feeders_raw']}")
    print(f"in-service factor: 1 - 2/16 = {cal['in_service_factor']}")
    print(
        f"active feeders: {cal['feeders_active_exact']} ~ {cal['feeders_active']}"
        f" -> design {cal['feeders_design']}"
    )
    print(
        f"sessions/feeder/day: {cal['sessions_per_feeder']}"
        f" -> design {cal['sessions_design']}"
    )

    print("\n== avoided capacity ==")
    s1 = econ(75, 35)
    print(
        f"peaks 75 -> 35: {s1.peak_reduction_kw:.0f} kW, "
        f"{s1.per_feeder_cad_year:,.0f} CAD/feeder-yr, {s1.regional_cad_year:,.0f} CAD"
    )
    s3 = econ(116, 42)
    print(
        f"peaks 116 -> 42: {s3.peak_reduction_kw:.0f} kW, "
        f"{s3.regional_cad_year:,.0f} CAD ({s3.regional_cad_year / 1e6:.2f} M)"
    )

    print("\n== bound arithmetic ==")
    print(f"ln 200 + ln 96 = {math.log(200) + math.log(96):.2f}")
    print(f"ln 3 = {math.log(3):.2f}")
    print(f"threshold coefficient = {natarajan_threshold(200, 96, 3, 1.0):.2f} * H")
    print(f"shared-backbone head ratio 3/96 = {head_complexity_ratio(3, 96):.2f}")
    print(f"max-dependence threshold = {dependent_threshold(1, 96, 3, 1.0):.2f}")
    print(f"MLP weights (d=118, m=256, 2 layers, 3 actions) = {mlp_param_count(118, 256, 2, 3):,}")


if __name__ == "__main__":
    main()
