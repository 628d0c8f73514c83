"""Learned stand-ins for the conditional means the engine consumes.

Two learners cover the two halves of the feedback model: an optimistic
linear least-squares learner for E[u|c] (confidence-ellipsoid bonus on top
of a ridge estimate, one design matrix per source) and a plug-in estimator
for E[a|c] that learns only the attribute prior alpha and runs the noise
densities through Bayes' rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from fairalloc.environment import gaussian_density, laplace_density
from fairalloc.errors import NumericalError


@dataclass
class EllipsoidState:
    """Per-source ridge regression with a shared confidence-radius schedule.

    The confidence set for source k at round t is
    {psi : ||psi - psi_hat_k||_{V_k} <= sqrt(beta_t)} with
    sqrt(beta_t) = psi_bar + sqrt(2 log(1/delta) + q log(1 + t c_bar^2 / q)),
    nondecreasing in t, so a parameter covered now stays covered as the sets
    only grow with the radius.
    """

    v: List[np.ndarray]
    v_inv: List[np.ndarray]
    moments: List[np.ndarray]
    psi_hat: List[np.ndarray]
    psi_bar: float
    c_bar: float
    delta_conf: float
    t: int = 0
    u_clip: Optional[float] = None

    @property
    def k_sources(self) -> int:
        return len(self.v)

    def sqrt_beta(self) -> float:
        q = max(m.shape[0] for m in self.moments)
        grow = q * math.log(1.0 + self.t * self.c_bar**2 / q)
        return self.psi_bar + math.sqrt(2.0 * math.log(1.0 / self.delta_conf) + grow)

    def covers(self, k: int, psi_true: np.ndarray) -> bool:
        """Whether psi_true lies in source k's current confidence set."""
        diff = np.asarray(psi_true, dtype=float) - self.psi_hat[k]
        return float(diff @ self.v[k] @ diff) <= self.sqrt_beta() ** 2 + 1e-12


def make_ellipsoid(
    dims: Sequence[int],
    psi_bar: float,
    c_bar: float,
    delta_conf: float,
    u_clip: Optional[float] = None,
) -> EllipsoidState:
    """Fresh learner: identity ridge design, zero estimates."""
    if not 0.0 < delta_conf < 1.0:
        raise ValueError("delta_conf must lie in (0, 1)")
    if psi_bar < 0 or c_bar <= 0:
        raise ValueError("psi_bar must be nonnegative and c_bar positive")
    return EllipsoidState(
        v=[np.eye(q) for q in dims],
        v_inv=[np.eye(q) for q in dims],
        moments=[np.zeros(q) for q in dims],
        psi_hat=[np.zeros(q) for q in dims],
        psi_bar=float(psi_bar),
        c_bar=float(c_bar),
        delta_conf=float(delta_conf),
        u_clip=u_clip,
    )


def optimistic_mean_u(state: EllipsoidState, k: int, c: np.ndarray) -> float:
    """max over the confidence set of <psi, c>, optionally clipped.

    The ellipsoid maximizer has the closed form
    <psi_hat, c> + sqrt(beta) * ||c||_{V^{-1}}; clipping to [-u_clip, u_clip]
    keeps the engine's virtual rewards inside the bandit's scale bound
    without breaking optimism (the true mean obeys the same cap).
    """
    c = np.asarray(c, dtype=float)
    quad = float(c @ state.v_inv[k] @ c)
    if quad < -1e-12:
        raise NumericalError("design inverse lost positive definiteness", source=k)
    value = float(state.psi_hat[k] @ c) + state.sqrt_beta() * math.sqrt(max(quad, 0.0))
    if state.u_clip is not None:
        value = min(max(value, -state.u_clip), state.u_clip)
    return value


def linear_update(state: EllipsoidState, k: int, action: np.ndarray, reward: float) -> EllipsoidState:
    """Rank-one update for the selected source; call once per round.

    A zero action vector (source not selected, or no allocation) leaves every
    per-source block bit-identical and only advances the shared round count.
    """
    action = np.asarray(action, dtype=float)
    state.t += 1
    if not action.any():
        return state
    state.v[k] = state.v[k] + np.outer(action, action)
    vx = state.v_inv[k] @ action
    state.v_inv[k] = state.v_inv[k] - np.outer(vx, vx) / (1.0 + float(action @ vx))
    state.moments[k] = state.moments[k] + reward * action
    state.psi_hat[k] = state.v_inv[k] @ state.moments[k]
    return state


# --- plug-in attribute-prior learner -------------------------------------------


@dataclass
class AlphaLearnerState:
    """Running estimate of P(a=1) plus the per-source noise densities."""

    sigmas: Sequence[float]
    noise: str = "gaussian"
    total: float = 0.0
    count: int = 0
    underflow: bool = False

    def __post_init__(self):
        if self.noise not in ("gaussian", "laplace"):
            raise ValueError(f"unknown noise kind {self.noise!r}")
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("noise scales must be positive")

    @property
    def alpha_hat(self) -> Optional[float]:
        if self.count == 0:
            return None
        return self.total / self.count

    def _density(self, x: float, sigma: float) -> float:
        if self.noise == "gaussian":
            return gaussian_density(x, sigma)
        return laplace_density(x, sigma)


def plugin_mean_a(state: AlphaLearnerState, k: int, a_hat: float) -> float:
    """Bayes estimate of E[a | a_hat] under the current prior estimate.

    Computes s with the prior from rounds before this one, then folds the
    fresh observation (a_hat + 1)/2 into the running mean. Outside-range
    prior estimates (possible early on, since noisy observations are
    unbounded) fall back to s = 0.
    """
    alpha = state.alpha_hat
    sigma = state.sigmas[k]
    if alpha is None or not 0.0 < alpha < 1.0:
        s = 0.0
    else:
        num_p = alpha * state._density(a_hat - 1.0, sigma)
        num_m = (1.0 - alpha) * state._density(a_hat + 1.0, sigma)
        denom = num_p + num_m
        if denom <= 0.0:
            state.underflow = True
            s = 0.0
        else:
            s = (num_p - num_m) / denom
    state.total += (a_hat + 1.0) / 2.0
    state.count += 1
    return s
