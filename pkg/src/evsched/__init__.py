"""evsched: a scheduling laboratory for online centralized EV charging.

Modules:
  core        domain types, feasibility, and metric primitives
  instgen     seeded benchmark scenario generation
  engine      the gamified episodic placement environment
  solver      exact branch-and-bound oracle, completions, re-optimization
  heuristics  row-filling and X-threshold online policies
  nn          the float64 neural-network kernel
  policies    I2M/I2S/V2M/V2S models, expert demos, supervised training
  dagger      the episode-wise dataset-aggregation loop
  analysis    evaluation harness, economics, and bound arithmetic
  service     the HTTP episode API
  cli         the evsched umbrella command
"""

from .core import (
    EV,
    FeasibilityReport,
    Horizon,
    Instance,
    LoadProfile,
    Schedule,
    check_feasible,
    load_of,
    max_min,
    rmse,
)

__version__ = "0.1.0"

__all__ = [
    "EV",
    "FeasibilityReport",
    "Horizon",
    "Instance",
    "LoadProfile",
    "Schedule",
    "check_feasible",
    "load_of",
    "max_min",
    "rmse",
    "__version__",
]
