"""Online allocation under long-term convex fairness penalties with paid
information sources.

The package is organized around a per-round simulation engine (primal
allocation + dual multiplier descent + adversarial-bandit source selection),
a library of stochastic problem instances, an offline saddle-point oracle
that certifies benchmark rates, optional online estimators for unknown
conditional means, and an experiment CLI that turns all of it into
reproducible CSV/JSON artifacts.
"""

from fairalloc.penalty import (
    BallRegion,
    DeltaPolytope,
    PenaltySpec,
    conjugate,
    eval_extension,
    eval_penalty,
    scaled_abs,
    scaled_quadratic,
    solve_gamma,
    subgradient_at_zero,
    zero_penalty,
)
from fairalloc.dual import DualState, dual_step, theorem_schedule
from fairalloc.bandit import Exp3Bank, Exp3State, iw_update, sample_source

__all__ = [
    "BallRegion",
    "DeltaPolytope",
    "PenaltySpec",
    "conjugate",
    "eval_extension",
    "eval_penalty",
    "scaled_abs",
    "scaled_quadratic",
    "solve_gamma",
    "subgradient_at_zero",
    "zero_penalty",
    "DualState",
    "dual_step",
    "theorem_schedule",
    "Exp3Bank",
    "Exp3State",
    "iw_update",
    "sample_source",
]

__version__ = "0.1.0"
