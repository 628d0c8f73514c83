"""Adversarial source selection with importance-weighted score updates.

Each round the engine samples an information source from a softmax over
cumulative scores, pays its price, and credits *every* source with the
reward scale m while debiting only the sampled one by (m - phi)/pi. The
resulting score estimates are unbiased for the true virtual rewards, and
the loss-based shift keeps score gaps (not absolute values) meaningful
without explicit exploration.

States can run with a fixed horizon-tuned learning rate or wrap themselves
in a doubling schedule for anytime operation; a bank keyed by public
context holds one independent state per context.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, Optional, Tuple

import numpy as np

from fairalloc.errors import InvariantViolation

PHI_SLACK = 1e-9  # relative+absolute slack on |phi| <= m


@dataclass
class Exp3State:
    """Scores and learning rate for one softmax sampler.

    ``epoch`` is None for a fixed learning rate; an integer arms the
    doubling schedule (horizon guess 2**epoch, scores reset at each
    crossing).
    """

    scores: np.ndarray
    rho: float
    m: float
    t_local: int = 0
    epoch: Optional[int] = None

    @property
    def k_arms(self) -> int:
        return self.scores.shape[0]


def make_exp3(k_arms: int, rho: float, m: float) -> Exp3State:
    if k_arms < 1:
        raise ValueError("need at least one arm")
    if rho < 0 or m < 0:
        raise ValueError("rho and m must be nonnegative")
    return Exp3State(scores=np.zeros(k_arms), rho=rho, m=m)


def _doubling_rho(k_arms: int, m: float, epoch: int) -> float:
    if k_arms == 1 or m == 0.0:
        return 0.0
    horizon = float(2**epoch)
    return math.sqrt(math.log(k_arms) / (horizon * k_arms * m * m))


def make_anytime_exp3(k_arms: int, m: float) -> Exp3State:
    """State on the doubling schedule (no horizon known up front)."""
    state = make_exp3(k_arms, _doubling_rho(k_arms, m, 0), m)
    state.epoch = 0
    return state


def probabilities(state: Exp3State) -> np.ndarray:
    """Sampling distribution softmax(rho * scores), computed max-shifted."""
    z = state.rho * state.scores
    z = z - z.max()
    w = np.exp(z)
    return w / w.sum()


def sample_source(state: Exp3State, rng: np.random.Generator) -> Tuple[int, float]:
    """Draw an arm; returns (index, probability the draw used)."""
    return sample_with_uniform(state, float(rng.random()))


def sample_with_uniform(state: Exp3State, u: float) -> Tuple[int, float]:
    """Inverse-CDF sampling from probabilities(state) given a uniform draw.

    Split out so callers may pre-draw their uniforms (the per-round count is
    policy-independent, which keeps vectorized pre-sampling legitimate).
    """
    pi = probabilities(state)
    acc = 0.0
    k = state.k_arms - 1
    for i in range(state.k_arms):
        acc += pi[i]
        if u < acc:
            k = i
            break
    return k, float(pi[k])


def iw_update(state: Exp3State, chosen: int, phi: float, pi_used) -> Exp3State:
    """Importance-weighted score update after observing reward phi on one arm.

    Every arm gains m; the sampled arm loses (m - phi)/pi_chosen. ``pi_used``
    may be the full sampling distribution (indexed at ``chosen``) or just the
    chosen arm's probability. Raises InvariantViolation when |phi| exceeds
    the reward scale m (the schedule guarantees it never should).
    """
    pi_chosen = float(np.asarray(pi_used).reshape(-1)[chosen]) if np.ndim(pi_used) else float(pi_used)
    m = state.m
    if abs(phi) > m * (1.0 + PHI_SLACK) + PHI_SLACK:
        raise InvariantViolation(
            f"virtual reward {phi:.12g} escapes the scale bound m={m:.12g}",
            chosen=chosen,
            pi=pi_chosen,
            t_local=state.t_local,
        )
    if not 0.0 < pi_chosen <= 1.0:
        raise InvariantViolation(f"sampling probability {pi_chosen} outside (0, 1]", chosen=chosen)
    state.scores += m
    state.scores[chosen] -= (m - phi) / pi_chosen
    state.t_local += 1
    if state.epoch is not None and state.t_local >= 2**state.epoch:
        state.scores[:] = 0.0
        state.epoch += 1
        state.rho = _doubling_rho(state.k_arms, m, state.epoch)
    return state


@dataclass
class Exp3Bank:
    """Independent samplers keyed by public context value."""

    factory: Callable[[], Exp3State]
    states: Dict[Hashable, Exp3State] = field(default_factory=dict)
    counts: Dict[Hashable, int] = field(default_factory=dict)

    def state_for(self, key: Hashable) -> Exp3State:
        st = self.states.get(key)
        if st is None:
            st = self.factory()
            self.states[key] = st
            self.counts[key] = 0
        return st

    def touch(self, key: Hashable) -> Exp3State:
        st = self.state_for(key)
        self.counts[key] += 1
        return st
