"""Dual multiplier descent and the step-size/exploration schedule.

The multiplier lambda prices the long-term penalty inside each round's
allocation decision. Every round the engine solves the concave subproblem
for gamma and moves lambda against the gap (gamma - delta); with the
initialization at a minimum-norm subgradient of the penalty, the iterates
provably stay inside a ball of radius L + 2*eta*diam, which this module
enforces at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from fairalloc.errors import InvariantViolation
from fairalloc.penalty import PenaltySpec, subgradient_at, subgradient_at_zero

LAMBDA_SLACK = 1e-7  # numeric slack on the multiplier-norm invariant


@dataclass
class DualState:
    """Mutable state of the online dual descent.

    Attributes:
        lam: current multiplier, shape (d,).
        eta: step size; in anytime mode the coefficient of 1/sqrt(t).
        bound: enforced cap on ||lam||_2 (L + 2*eta_max*diam).
        anytime: whether steps decay as eta/sqrt(t).
        t: number of completed steps.
    """

    lam: np.ndarray
    eta: float
    bound: float
    anytime: bool = False
    t: int = 0

    def step_size(self) -> float:
        """Step size the *next* update will use."""
        if not self.anytime:
            return self.eta
        return self.eta / math.sqrt(self.t + 1)


def init_dual(
    spec: PenaltySpec,
    eta: float,
    anytime: bool = False,
    at_point: Optional[np.ndarray] = None,
) -> DualState:
    """Dual state initialized at a minimum-norm penalty subgradient.

    Args:
        spec: the penalty (its domain fixes the diameter in the norm bound).
        eta: step size (or 1/sqrt(t) coefficient in anytime mode).
        anytime: use decaying steps.
        at_point: initialize at a subgradient of R at this domain point
            instead of the origin (the ratio objective starts at a
            designated attribute vertex).
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    lam0 = subgradient_at(spec, at_point) if at_point is not None else subgradient_at_zero(spec)
    lam0 = np.atleast_1d(np.asarray(lam0, dtype=float))
    bound = spec.lipschitz + 2.0 * eta * spec.diam
    return DualState(lam=lam0, eta=eta, bound=bound, anytime=anytime)


def dual_step(state: DualState, gamma, delta, weight: float = 1.0) -> DualState:
    """One descent step lambda <- lambda - eta_t * weight * (gamma - delta).

    ``weight`` in [0, 1] scales the step (the ratio objective freezes the
    multiplier on rounds with no allocation by passing weight 0). Raises
    InvariantViolation if the updated multiplier escapes its norm bound.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {weight}")
    gamma = np.asarray(gamma, dtype=float)
    delta = np.asarray(delta, dtype=float)
    step = state.step_size() * weight
    state.lam = state.lam - step * (gamma - delta)
    state.t += 1
    nrm = float(np.linalg.norm(state.lam))
    if nrm > state.bound + LAMBDA_SLACK:
        raise InvariantViolation(
            f"multiplier norm {nrm:.12g} exceeded bound {state.bound:.12g}",
            lam=state.lam.tolist(),
            t=state.t,
            gamma=gamma.tolist(),
            delta=delta.tolist(),
        )
    return state


@dataclass(frozen=True)
class Schedule:
    """Horizon-tuned constants: dual step, reward scale, bandit learning rate."""

    eta: float
    m: float
    rho: float


def theorem_schedule(
    lipschitz: float,
    diam: float,
    horizon: int,
    u_bar: float,
    prices: Sequence[float],
    conjugate_extra: float = 0.0,
) -> Schedule:
    """The analysis schedule for a horizon-T run.

        eta = L / (2 * diam * sqrt(T))
        m   = u_bar + L + max_k |p_k| + 2 * eta * diam   (+ conjugate_extra)
        rho = sqrt(log K / (T * K * m^2))

    ``conjugate_extra`` widens the reward envelope for objectives whose
    virtual reward includes a conjugate term (the ratio objective passes the
    conjugate's maximum over the multiplier ball). Degenerate cases: a
    zero-diameter domain or L = 0 gives eta = 0; K = 1 or m = 0 gives
    rho = 0.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if u_bar < 0 or lipschitz < 0 or diam < 0:
        raise ValueError("u_bar, lipschitz, diam must be nonnegative")
    k_arms = len(prices)
    if k_arms == 0:
        raise ValueError("need at least one source")
    eta = 0.0 if diam == 0.0 else lipschitz / (2.0 * diam * math.sqrt(horizon))
    m = u_bar + lipschitz + max(abs(float(p)) for p in prices) + 2.0 * eta * diam + conjugate_extra
    if k_arms == 1 or m == 0.0:
        rho = 0.0
    else:
        rho = math.sqrt(math.log(k_arms) / (horizon * k_arms * m * m))
    return Schedule(eta=eta, m=m, rho=rho)


def regret_bound(
    lipschitz: float,
    diam: float,
    horizon: int,
    u_bar: float,
    prices: Sequence[float],
    dim: int,
) -> float:
    """Explicit worst-case regret budget for the theorem schedule.

        2*((L + u_bar + max|p|) * sqrt(K log K) + L sqrt(d) + L diam) * sqrt(T)
        + 2 L sqrt(K log K)
    """
    k_arms = len(prices)
    p_max = max(abs(float(p)) for p in prices)
    klogk = math.sqrt(k_arms * math.log(k_arms)) if k_arms > 1 else 0.0
    lead = (lipschitz + u_bar + p_max) * klogk + lipschitz * math.sqrt(dim) + lipschitz * diam
    return 2.0 * lead * math.sqrt(horizon) + 2.0 * lipschitz * klogk
