"""Train an image-to-movement policy on the desk-scale scenario with the
dataset-aggregation loop and save it next to its supervised-only baseline.

Usage:
    python scripts/train_desk_dagger.py [--seed 0] [--out-dir models/]
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from evsched.core import Horizon  # noqa: E402
from evsched.dagger import DaggerConfig, run_dagger  # noqa: E402
from evsched.instgen import NormalDist, ScenarioSpec  # noqa: E402
from evsched.policies import TrainConfig  # noqa: E402

DESK24 = ScenarioSpec(
    n_evs=10,
    arrival=NormalDist(6.0, 3.0),
    departure=NormalDist(18.0, 2.0),
    length_max=6,
    horizon=Horizon(T=24),
    name="desk24",
)


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--variant", default="I2M", choices=["I2M", "I2S", "V2M", "V2S"])
    parser.add_argument("--out-dir", default="models")
    parser.add_argument("--max-outer-iterations", type=int, default=4)
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_cfg = TrainConfig(max_iterations=60, conv_filters=(8, 16, 16), fc_sizes=(64, 32))
    dagger_cfg = DaggerConfig(max_outer_iterations=args.max_outer_iterations)

    start = time.time()
    model, history = run_dagger(
        dagger_cfg, train_cfg, DESK24, seed=args.seed, variant=args.variant, render_rows=16
    )
    out = out_dir / f"{args.variant.lower()}_dagger_seed{args.seed}.json"
    model.save(out)
    print(f"trained in {time.time() - start:.0f}s, saved {out}")
    for entry in history.entries:
        print(
            f"  outer {entry['outer_iteration']}: dataset {entry['dataset_size']}, "
            f"validation max-min {entry['validation_max_min']:.2f}"
            + ("  (improved)" if entry["improved"] else "")
        )


if __name__ == "__main__":
    main()
