"""Umbrella command line: generate | solve | heuristic | train-sl | dagger |
rollout | evaluate | economics | theory | serve.

Training subcommands read a JSON run-config document; any flag given on the
command line overrides the file value. The data directory for `serve`
defaults to the EVSCHED_DATA_DIR environment variable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import analysis, fileio
from .catalog import policy_by_name
from .core import load_of, max_min, rmse
from .dagger import DaggerConfig, run_dagger
from .instgen import (
    builtin_scenario,
    perturb_spec,
    sample_instance,
    spec_from_dict,
)
from .policies import (
    PolicyModel,
    TrainConfig,
    encoder_for,
    expert_demonstrations,
    rollout,
    train_sl,
)
from .solver import export_milp, reopt_policy, solve_oracle
from .util import derive_seed


def _resolve_scenario(value: str):
    if value.isdigit():
        return builtin_scenario(int(value))
    return spec_from_dict(json.loads(Path(value).read_text()))


def _load_instances(path: str):
    p = Path(path)
    files = sorted(p.glob("*.json")) if p.is_dir() else [p]
    return [fileio.read_instance(f) for f in files]


def _run_config(args, keys: dict) -> dict:
    """Merge a JSON config file with flag overrides (flags win)."""
    merged = dict(keys)
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
        unknown = set(data) - set(keys)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        merged.update(data)
    for key in keys:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            merged[key] = flag
    return merged


def cmd_generate(args) -> int:
    spec = _resolve_scenario(args.scenario)
    if args.perturb_band:
        targets = set(args.perturb_targets.split(",")) if args.perturb_targets else {
            "mean",
            "std",
            "count",
        }
        spec = perturb_spec(
            spec, args.perturb_band, targets, seed=args.perturb_seed
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    label = spec.name or "scenario"
    for k in range(args.count):
        seed = args.seed_base + k
        instance = sample_instance(spec, seed=seed)
        fileio.write_instance(instance, out / f"{label}_{seed}.json")
    print(f"wrote {args.count} instances to {out}")
    return 0


def cmd_solve(args) -> int:
    instance = fileio.read_instance(args.instance)
    if args.export_lp:
        Path(args.export_lp).write_text(export_milp(instance))
    if args.mode == "oracle":
        result = solve_oracle(
            instance, time_limit=args.time_limit, gap_tolerance=args.gap
        )
        schedule, status, nodes = result.schedule, result.status, result.nodes_explored
        objective = result.objective
    else:
        schedule = reopt_policy(instance, time_limit=args.time_limit)
        objective = max_min(load_of(schedule, instance))
        status, nodes = "online", None
    profile = load_of(schedule, instance)
    print(
        json.dumps(
            {
                "mode": args.mode,
                "status": status,
                "objective": objective,
                "max_min": max_min(profile),
                "rmse": rmse(profile),
                "peak": max(profile.counts),
                "nodes_explored": nodes,
            },
            sort_keys=True,
        )
    )
    if args.out:
        fileio.write_schedule(schedule, args.out)
    return 0


def cmd_heuristic(args) -> int:
    instance = fileio.read_instance(args.instance)
    calibration = _load_instances(args.calib) if args.calib else []
    fn = policy_by_name(
        args.policy, calibration_set=calibration, time_limit=args.time_limit
    )
    schedule = fn(instance)
    profile = load_of(schedule, instance)
    print(
        json.dumps(
            {
                "policy": args.policy,
                "max_min": max_min(profile),
                "rmse": rmse(profile),
                "peak": max(profile.counts),
            },
            sort_keys=True,
        )
    )
    if args.out:
        fileio.write_schedule(schedule, args.out)
    return 0


def cmd_train_sl(args) -> int:
    cfg = _run_config(
        args,
        {
            "scenario": "1",
            "variant": "I2M",
            "episodes": 10,
            "seed": 0,
            "render_rows": 32,
            "learning_rate": 0.001,
            "max_iterations": 100,
            "early_stop_patience": 5,
            "batch_size": None,
            "solver_time_limit": None,
        },
    )
    spec = _resolve_scenario(str(cfg["scenario"]))
    instances = [
        sample_instance(spec, derive_seed(cfg["seed"], "expert", i))
        for i in range(int(cfg["episodes"]))
    ]
    encoder = encoder_for(
        cfg["variant"], T=spec.horizon.T, render_rows=int(cfg["render_rows"]),
        l_max=spec.length_max,
    )
    demos = expert_demonstrations(
        instances, cfg["variant"], encoder, time_limit=cfg["solver_time_limit"]
    )
    train_cfg = TrainConfig(
        learning_rate=cfg["learning_rate"],
        max_iterations=int(cfg["max_iterations"]),
        early_stop_patience=int(cfg["early_stop_patience"]),
        batch_size=cfg["batch_size"],
    )
    model = train_sl(demos, train_cfg, seed=int(cfg["seed"]))
    model.save(args.out)
    last = model.train_log[-1] if model.train_log else {}
    print(
        json.dumps(
            {
                "variant": cfg["variant"],
                "demos": len(demos),
                "parameters": model.param_count(),
                "final_train_loss": last.get("train_loss"),
                "final_eval_loss": last.get("eval_loss"),
                "model": str(args.out),
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_dagger(args) -> int:
    cfg = _run_config(
        args,
        {
            "scenario": "1",
            "variant": "I2M",
            "seed": 0,
            "render_rows": 32,
            "eta0": 10,
            "eta": 10,
            "xi": 10,
            "max_outer_iterations": 20,
            "learning_rate": 0.001,
            "max_iterations": 100,
            "early_stop_patience": 5,
            "batch_size": None,
            "solver_time_limit": None,
        },
    )
    spec = _resolve_scenario(str(cfg["scenario"]))
    dagger_cfg = DaggerConfig(
        eta0=int(cfg["eta0"]),
        eta=int(cfg["eta"]),
        xi=int(cfg["xi"]),
        max_outer_iterations=int(cfg["max_outer_iterations"]),
        solver_time_limit=cfg["solver_time_limit"],
    )
    train_cfg = TrainConfig(
        learning_rate=cfg["learning_rate"],
        max_iterations=int(cfg["max_iterations"]),
        early_stop_patience=int(cfg["early_stop_patience"]),
        batch_size=cfg["batch_size"],
    )
    model, history = run_dagger(
        dagger_cfg,
        train_cfg,
        spec,
        seed=int(cfg["seed"]),
        variant=cfg["variant"],
        render_rows=int(cfg["render_rows"]),
    )
    model.save(args.out)
    print(
        json.dumps(
            {
                "variant": cfg["variant"],
                "outer_iterations": len(history.entries),
                "dataset_sizes": history.dataset_sizes(),
                "validation_max_min": history.validation_scores(),
                "model": str(args.out),
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_rollout(args) -> int:
    model = PolicyModel.load(args.model)
    instance = fileio.read_instance(args.instance)
    schedule, trace, total = rollout(model, instance)
    profile = load_of(schedule, instance)
    print(
        json.dumps(
            {
                "variant": model.variant,
                "max_min": max_min(profile),
                "rmse": rmse(profile),
                "score": total,
            },
            sort_keys=True,
        )
    )
    if args.out:
        fileio.write_schedule(schedule, args.out)
    if args.trace:
        fileio.write_jsonl([r.to_dict() for r in trace], args.trace)
    return 0


def cmd_evaluate(args) -> int:
    instances = _load_instances(args.instances)
    calibration = _load_instances(args.calib) if args.calib else instances
    names = args.policies.split(",")
    policies = [
        (
            name,
            policy_by_name(
                name, calibration_set=calibration, time_limit=args.time_limit
            ),
        )
        for name in names
    ]
    oracle_policy = "oracle" if "oracle" in names else None
    report = analysis.evaluate(policies, instances, oracle_policy=oracle_policy)
    for agg in report.aggregates:
        print(
            f"{agg.policy:>12}  {agg.metric:>8}  mean={agg.mean:9.4f}  "
            f"ci95=±{agg.ci_half_width:.4f}  n={agg.count}"
        )
    for violation in report.bound_violations:
        print(f"WARNING: information-relaxation bound breached: {violation}")
    if args.out_csv:
        report.to_csv(args.out_csv)
    if args.out_json:
        report.to_json(args.out_json)
    return 0


def cmd_economics(args) -> int:
    data = json.loads(Path(args.report).read_text())
    report = analysis.EvalReport()
    report.aggregates = [analysis.Aggregate(**a) for a in data["aggregates"]]
    params = analysis.EconParams(
        u_kw=args.u_kw, rate=args.rate, feeders=args.feeders, baseline_policy=args.baseline
    )
    record = analysis.avoided_value(report, args.policy, params)
    print(json.dumps(record.__dict__, sort_keys=True, indent=2))
    return 0


def cmd_theory(args) -> int:
    cal = analysis.gma_calibration()
    out = {
        "gma": cal,
        "mlp_param_count_example": analysis.mlp_param_count(118, 256, 2, 3),
        "remark_threshold_coeff": analysis.natarajan_threshold(200, 96, 3, 1.0),
        "remark_log_sum": math.log(200) + math.log(96),
        "remark_log_actions": math.log(3),
        "head_ratio": analysis.head_complexity_ratio(3, 96),
        "max_dependence_threshold": analysis.dependent_threshold(1, 96, 3, 1.0),
    }
    print(json.dumps(out, sort_keys=True, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    data_dir = args.data_dir or os.environ.get("EVSCHED_DATA_DIR", "./evsched_data")
    app = create_app(Path(data_dir), compare_time_limit=args.compare_time_limit)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evsched")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample benchmark instances")
    p.add_argument("--scenario", required=True, help="1..4 or a scenario JSON file")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--perturb-band", type=float, default=0.0)
    p.add_argument("--perturb-targets", default="")
    p.add_argument("--perturb-seed", type=int, default=0)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("solve", help="exact oracle or online re-optimization")
    p.add_argument("--instance", required=True)
    p.add_argument("--mode", choices=["oracle", "reopt"], default="oracle")
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--gap", type=int, default=0)
    p.add_argument("--export-lp", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("heuristic", help="run a rule-based policy")
    p.add_argument("--instance", required=True)
    p.add_argument(
        "--policy", required=True, help="rowfill|alpha|beta|threshold:X|plugin"
    )
    p.add_argument("--calib", default=None, help="directory of calibration instances")
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_heuristic)

    p = sub.add_parser("train-sl", help="supervised imitation of the oracle")
    p.add_argument("--config", default=None, help="JSON run-config file")
    p.add_argument("--scenario", default=None)
    p.add_argument("--variant", default=None, choices=["I2M", "I2S", "V2M", "V2S"])
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--render-rows", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--early-stop-patience", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--solver-time-limit", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train_sl)

    p = sub.add_parser("dagger", help="dataset-aggregation training loop")
    p.add_argument("--config", default=None)
    p.add_argument("--scenario", default=None)
    p.add_argument("--variant", default=None, choices=["I2M", "I2S", "V2M", "V2S"])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--render-rows", type=int, default=None)
    p.add_argument("--eta0", type=int, default=None)
    p.add_argument("--eta", type=int, default=None)
    p.add_argument("--xi", type=int, default=None)
    p.add_argument("--max-outer-iterations", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--early-stop-patience", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--solver-time-limit", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_dagger)

    p = sub.add_parser("rollout", help="roll a trained model on an instance")
    p.add_argument("--model", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--trace", default=None)
    p.set_defaults(fn=cmd_rollout)

    p = sub.add_parser("evaluate", help="benchmark policies over instances")
    p.add_argument("--instances", required=True, help="instance file or directory")
    p.add_argument("--policies", required=True, help="comma-separated policy names")
    p.add_argument("--calib", default=None)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--out-json", default=None)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("economics", help="avoided-capacity value from a report")
    p.add_argument("--report", required=True, help="JSON report from evaluate")
    p.add_argument("--policy", required=True)
    p.add_argument("--baseline", default="plugin")
    p.add_argument("--u-kw", type=float, default=7.0)
    p.add_argument("--rate", type=float, default=164.0)
    p.add_argument("--feeders", type=int, default=700)
    p.set_defaults(fn=cmd_economics)

    p = sub.add_parser("theory", help="print the calibration and bound arithmetic")
    p.set_defaults(fn=cmd_theory)

    p = sub.add_parser("serve", help="run the episode HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--compare-time-limit", type=float, default=10.0)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
