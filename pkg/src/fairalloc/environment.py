"""Stochastic user models: the joint law of (z, u, a, c_1..c_K) per round.

Every instance draws i.i.d. users and knows its own conditional expectations
E[u|c] and E[a|c] exactly — the engine consumes those, never the realized
attributes. Two canonical models (a four-atom symmetric two-source world and
a Gaussian full-vs-marginal information menu) are built in, along with a
table-driven instance for hand-constructed counterexamples and a noisy
attribute-channel model for the plug-in attribute learner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from fairalloc.errors import SchemaError
from fairalloc.penalty import (
    PenaltySpec,
    interval_polytope,
    scaled_abs,
    scaled_quadratic,
    zero_penalty,
)

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass
class EpisodeData:
    """Pre-drawn user stream for one run of horizon T.

    All arrays are indexed by round. ``cond_u``/``cond_a`` hold, for every
    source, the conditional means the engine would see if it bought that
    source this round; ``ctx`` holds a per-source context identifier for
    logging (finite instances: the context id; continuous ones: the observed
    real value).
    """

    z: np.ndarray  # (T,) int public context ids
    u: np.ndarray  # (T,) realized utilities
    a: np.ndarray  # (T, d) realized attributes
    cond_u: np.ndarray  # (T, K)
    cond_a: np.ndarray  # (T, K, d)
    ctx: np.ndarray  # (T, K) float context identifiers

    @property
    def horizon(self) -> int:
        return self.z.shape[0]


@dataclass(frozen=True)
class UserDraw:
    """One joint sample; the engine is shown only (z, c_k) and, on x=1, u."""

    z: int
    u: float
    a: np.ndarray
    contexts: Tuple[float, ...]


class ProblemInstance:
    """Common surface of all user models."""

    name: str
    prices: Tuple[float, ...]
    penalty: PenaltySpec
    u_bar: float

    @property
    def k_sources(self) -> int:
        return len(self.prices)

    @property
    def dim(self) -> int:
        return self.penalty.dim

    def sample_stream(self, horizon: int, rng: np.random.Generator) -> EpisodeData:
        raise NotImplementedError

    def draw_user(self, rng: np.random.Generator) -> UserDraw:
        """Single-draw convenience wrapper over the vectorized sampler."""
        ep = self.sample_stream(1, rng)
        return UserDraw(z=int(ep.z[0]), u=float(ep.u[0]), a=ep.a[0], contexts=tuple(ep.ctx[0]))

    def conditional_means(self, k: int, context) -> Tuple[float, np.ndarray]:
        """Exact (E[u|c], E[a|c]) for source k at an observed context value."""
        raise NotImplementedError

    def atoms(self, k: int):
        """(probs, cond_u, cond_a) over the finite context atoms of source k.

        Returns None for sources with continuous context laws; the offline
        solver integrates those by quadrature instead of summation.
        """
        return None

    def n_contexts(self, k: int) -> Optional[int]:
        """Number of distinct context values of source k (finite case only)."""
        return None

    def n_public_contexts(self) -> int:
        return 1


def _check_prices(prices: Sequence[float]) -> Tuple[float, ...]:
    out = tuple(float(p) for p in prices)
    if not out:
        raise ValueError("need at least one source")
    return out


# --- four-atom symmetric two-source world -------------------------------------

# Atom order: (u, a) = (1,1), (1,-1), (-1,1), (-1,-1), each with mass 1/4.
_SYM_U = np.array([1.0, 1.0, -1.0, -1.0])
_SYM_A = np.array([1.0, -1.0, 1.0, -1.0])


class SymmetricTwoSource(ProblemInstance):
    """Equiprobable sign pairs (u, a); each source flags one 'good' corner.

    Source 1's context fires exactly on (a=1, u=1), source 2's exactly on
    (a=-1, u=1). Either source alone leaves allocation hopelessly one-sided
    under a tight fairness penalty, while mixing them 50/50 sustains utility
    at rate 1/4 — the canonical separation between static source choice and
    randomized purchasing.
    """

    name = "symmetric_two_source"

    def __init__(self, penalty: Optional[PenaltySpec] = None, prices: Sequence[float] = (0.0, 0.0)):
        self.prices = _check_prices(prices)
        if len(self.prices) != 2:
            raise ValueError("this model has exactly two sources")
        self.penalty = penalty if penalty is not None else scaled_abs(5.0, interval_polytope(-1.0, 1.0))
        if self.penalty.dim != 1:
            raise ValueError("attribute dimension is 1")
        self.u_bar = 1.0
        # E[.|c_k = v] tables indexed [k][v]
        self._cond_u = ((-1.0 / 3.0, 1.0), (-1.0 / 3.0, 1.0))
        self._cond_a = ((-1.0 / 3.0, 1.0), (1.0 / 3.0, -1.0))

    def sample_stream(self, horizon: int, rng: np.random.Generator) -> EpisodeData:
        idx = rng.integers(0, 4, size=horizon)
        u = _SYM_U[idx]
        a = _SYM_A[idx][:, None]
        c1 = (idx == 0).astype(np.int64)  # fires on (u, a) = (1, 1)
        c2 = (idx == 1).astype(np.int64)  # fires on (u, a) = (1, -1)
        ctx = np.stack([c1, c2], axis=1).astype(float)
        cond_u = np.empty((horizon, 2))
        cond_a = np.empty((horizon, 2, 1))
        for k in range(2):
            v = ctx[:, k].astype(np.int64)
            cond_u[:, k] = np.asarray(self._cond_u[k])[v]
            cond_a[:, k, 0] = np.asarray(self._cond_a[k])[v]
        return EpisodeData(
            z=np.zeros(horizon, dtype=np.int64), u=u, a=a, cond_u=cond_u, cond_a=cond_a, ctx=ctx
        )

    def conditional_means(self, k: int, context) -> Tuple[float, np.ndarray]:
        v = int(context)
        if v not in (0, 1):
            raise ValueError(f"context {context!r} unreachable for source {k}")
        return self._cond_u[k][v], np.array([self._cond_a[k][v]])

    def atoms(self, k: int):
        probs = np.array([0.75, 0.25])
        cond_u = np.asarray(self._cond_u[k], dtype=float)
        cond_a = np.asarray(self._cond_a[k], dtype=float)[:, None]
        return probs, cond_u, cond_a

    def n_contexts(self, k: int) -> int:
        return 2


# --- Gaussian full-information vs marginal-information menu -------------------


class GaussianMonotone(ProblemInstance):
    """a = +/-1 equiprobable, u ~ N(a, 1); buy the pair (a, u) or just u.

    Source 1 reveals the full pair at price p; source 2 reveals only u for
    free, with E[a|u] = tanh(u). Utilities are truncated to |u| <= trunc so
    every reward the bandit sees is bounded; the truncation is symmetric, so
    the tanh posterior survives it exactly.
    """

    name = "gaussian_monotone"

    def __init__(self, r: float, p: float, trunc: float = 8.0):
        if r < 0 or p < 0:
            raise ValueError("r and p must be nonnegative")
        if trunc <= 1.0:
            raise ValueError("truncation must exceed the mean offset 1")
        self.r = float(r)
        self.price = float(p)
        self.trunc = float(trunc)
        self.prices = (float(p), 0.0)
        self.penalty = scaled_quadratic(r, interval_polytope(-1.0, 1.0)) if r > 0 else zero_penalty(
            interval_polytope(-1.0, 1.0)
        )
        self.u_bar = self.trunc

    def sample_stream(self, horizon: int, rng: np.random.Generator) -> EpisodeData:
        a = np.where(rng.random(horizon) < 0.5, 1.0, -1.0)
        u = a + rng.standard_normal(horizon)
        # resample the (astronomically rare) tail beyond the truncation
        bad = np.abs(u) > self.trunc
        while bad.any():
            u[bad] = a[bad] + rng.standard_normal(int(bad.sum()))
            bad = np.abs(u) > self.trunc
        cond_u = np.stack([u, u], axis=1)
        cond_a = np.stack([a, np.tanh(u)], axis=1)[:, :, None]
        ctx = np.stack([a, u], axis=1)
        return EpisodeData(
            z=np.zeros(horizon, dtype=np.int64),
            u=u,
            a=a[:, None],
            cond_u=cond_u,
            cond_a=cond_a,
            ctx=ctx,
        )

    def conditional_means(self, k: int, context) -> Tuple[float, np.ndarray]:
        if k == 0:
            a_val, u_val = context
            return float(u_val), np.array([float(a_val)])
        u_val = float(context)
        return u_val, np.array([math.tanh(u_val)])


# --- table-driven finite instance ----------------------------------------------


class TableInstance(ProblemInstance):
    """Finite joint law given as atom rows (prob, z, u, a_1..a_d, c_1..c_K)."""

    name = "table"

    def __init__(
        self,
        probs: Sequence[float],
        z: Sequence[int],
        u: Sequence[float],
        a: np.ndarray,
        contexts: np.ndarray,
        prices: Sequence[float],
        penalty: PenaltySpec,
    ):
        self.probs = np.asarray(probs, dtype=float)
        if self.probs.ndim != 1 or self.probs.size == 0:
            raise SchemaError("need at least one atom row")
        if (self.probs < 0).any():
            raise SchemaError("atom probabilities must be nonnegative")
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise SchemaError(f"atom probabilities sum to {self.probs.sum():.12g}, not 1")
        self.z_vals = np.asarray(z, dtype=np.int64)
        self.u_vals = np.asarray(u, dtype=float)
        self.a_vals = np.atleast_2d(np.asarray(a, dtype=float))
        self.ctx_vals = np.atleast_2d(np.asarray(contexts, dtype=np.int64))
        n = self.probs.size
        if not (self.z_vals.shape == (n,) and self.u_vals.shape == (n,)):
            raise SchemaError("z and u columns must match the number of rows")
        if self.a_vals.shape[0] != n or self.ctx_vals.shape[0] != n:
            raise SchemaError("attribute/context blocks must match the number of rows")
        self.prices = _check_prices(prices)
        if self.ctx_vals.shape[1] != len(self.prices):
            raise SchemaError(
                f"{self.ctx_vals.shape[1]} context columns but {len(self.prices)} prices"
            )
        self.penalty = penalty
        if penalty.dim != self.a_vals.shape[1]:
            raise SchemaError("penalty dimension does not match attribute columns")
        self.u_bar = float(np.abs(self.u_vals).max())
        self._cond: dict = {}
        for k in range(self.k_sources):
            table = {}
            for v in np.unique(self.ctx_vals[:, k]):
                mask = self.ctx_vals[:, k] == v
                w = self.probs[mask]
                total = float(w.sum())
                table[int(v)] = (
                    float(w @ self.u_vals[mask]) / total,
                    (w @ self.a_vals[mask]) / total,
                    total,
                )
            self._cond[k] = table

    def sample_stream(self, horizon: int, rng: np.random.Generator) -> EpisodeData:
        idx = rng.choice(self.probs.size, size=horizon, p=self.probs)
        k_src, d = self.k_sources, self.dim
        cond_u = np.empty((horizon, k_src))
        cond_a = np.empty((horizon, k_src, d))
        ctx = self.ctx_vals[idx].astype(float)
        for k in range(k_src):
            table = self._cond[k]
            for v, (cu, ca, _) in table.items():
                mask = self.ctx_vals[idx, k] == v
                cond_u[mask, k] = cu
                cond_a[mask, k, :] = ca
        return EpisodeData(
            z=self.z_vals[idx],
            u=self.u_vals[idx],
            a=self.a_vals[idx],
            cond_u=cond_u,
            cond_a=cond_a,
            ctx=ctx,
        )

    def conditional_means(self, k: int, context) -> Tuple[float, np.ndarray]:
        entry = self._cond[k].get(int(context))
        if entry is None:
            raise ValueError(f"context {context!r} unreachable for source {k}")
        return entry[0], np.array(entry[1], dtype=float)

    def atoms(self, k: int):
        table = self._cond[k]
        keys = sorted(table)
        probs = np.array([table[v][2] for v in keys])
        cond_u = np.array([table[v][0] for v in keys])
        cond_a = np.array([table[v][1] for v in keys])
        return probs, cond_u, np.atleast_2d(cond_a).reshape(len(keys), self.dim)

    def n_contexts(self, k: int) -> int:
        return len(self._cond[k])

    def n_public_contexts(self) -> int:
        return int(self.z_vals.max()) + 1


def load_table(path, prices: Sequence[float], penalty: PenaltySpec) -> TableInstance:
    """Parse the text atom-table format.

    Lines starting with '#' are comments. The first data line must be
    ``dims <d> <K>``; every following line is
    ``row <prob> <z> <u> <a_1..a_d> <c_1..c_K>`` with contexts as integers.
    """
    dims = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "dims":
                if dims is not None:
                    raise SchemaError(f"line {ln}: duplicate dims line")
                if len(parts) != 3:
                    raise SchemaError(f"line {ln}: dims expects '<d> <K>'")
                dims = (int(parts[1]), int(parts[2]))
                continue
            if parts[0] != "row":
                raise SchemaError(f"line {ln}: unknown directive {parts[0]!r}")
            if dims is None:
                raise SchemaError(f"line {ln}: row before dims")
            d, k_src = dims
            want = 1 + 3 + d + k_src
            if len(parts) != want:
                raise SchemaError(f"line {ln}: expected {want} fields, got {len(parts)}")
            try:
                vals = [float(x) for x in parts[1:]]
            except ValueError as exc:
                raise SchemaError(f"line {ln}: {exc}") from exc
            rows.append(vals)
    if dims is None or not rows:
        raise SchemaError("table file has no dims line or no rows")
    d, k_src = dims
    arr = np.asarray(rows, dtype=float)
    return TableInstance(
        probs=arr[:, 0],
        z=arr[:, 1].astype(np.int64),
        u=arr[:, 2],
        a=arr[:, 3 : 3 + d],
        contexts=arr[:, 3 + d :].astype(np.int64),
        prices=prices,
        penalty=penalty,
    )


# --- noisy attribute channels ----------------------------------------------------


def gaussian_density(x: float, sigma: float) -> float:
    return math.exp(-0.5 * (x / sigma) ** 2) / (sigma * _SQRT2PI)


def laplace_density(x: float, sigma: float) -> float:
    return math.exp(-abs(x) / sigma) / (2.0 * sigma)


class NoisyAttribute(ProblemInstance):
    """Constant-utility users whose attribute is seen only through noise.

    a = +1 with probability alpha, else -1; source k reveals a + sigma_k *
    noise (Gaussian by default, Laplace optionally). The utility is the
    constant u0, so every allocation decision is driven purely by the
    attribute posterior — the natural stage for the plug-in prior learner.
    """

    name = "noisy_attribute"

    def __init__(
        self,
        alpha: float,
        sigmas: Sequence[float],
        prices: Optional[Sequence[float]] = None,
        u0: float = 0.5,
        penalty: Optional[PenaltySpec] = None,
        noise: str = "gaussian",
    ):
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must be strictly inside (0, 1)")
        if noise not in ("gaussian", "laplace"):
            raise ValueError(f"unknown noise kind {noise!r}")
        self.alpha = float(alpha)
        self.sigmas = tuple(float(s) for s in sigmas)
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("noise scales must be positive")
        self.prices = _check_prices(prices if prices is not None else (0.0,) * len(self.sigmas))
        if len(self.prices) != len(self.sigmas):
            raise ValueError("one price per source required")
        self.u0 = float(u0)
        self.penalty = penalty if penalty is not None else scaled_abs(1.0, interval_polytope(-1.0, 1.0))
        self.noise = noise
        self.u_bar = abs(self.u0)

    def _density(self, x: float, sigma: float) -> float:
        return gaussian_density(x, sigma) if self.noise == "gaussian" else laplace_density(x, sigma)

    def posterior_mean_a(self, k: int, a_hat: float, alpha: Optional[float] = None) -> float:
        """E[a | a_hat] under prior alpha (defaults to the true one)."""
        al = self.alpha if alpha is None else alpha
        s = self.sigmas[k]
        num_p = al * self._density(a_hat - 1.0, s)
        num_m = (1.0 - al) * self._density(a_hat + 1.0, s)
        denom = num_p + num_m
        if denom <= 0.0:
            return 0.0
        return (num_p - num_m) / denom

    def sample_stream(self, horizon: int, rng: np.random.Generator) -> EpisodeData:
        a = np.where(rng.random(horizon) < self.alpha, 1.0, -1.0)
        k_src = self.k_sources
        ctx = np.empty((horizon, k_src))
        for k, s in enumerate(self.sigmas):
            if self.noise == "gaussian":
                ctx[:, k] = a + s * rng.standard_normal(horizon)
            else:
                ctx[:, k] = a + rng.laplace(0.0, s, size=horizon)
        cond_u = np.full((horizon, k_src), self.u0)
        cond_a = np.empty((horizon, k_src, 1))
        for k in range(k_src):
            sig = self.sigmas[k]
            if self.noise == "gaussian":
                # vectorized Bayes posterior for the +/-1 Gaussian mixture
                logit = 2.0 * ctx[:, k] / sig**2 + math.log(self.alpha / (1.0 - self.alpha))
                cond_a[:, k, 0] = np.tanh(0.5 * logit)
            else:
                cond_a[:, k, 0] = [self.posterior_mean_a(k, float(v)) for v in ctx[:, k]]
        return EpisodeData(
            z=np.zeros(horizon, dtype=np.int64),
            u=np.full(horizon, self.u0),
            a=a[:, None],
            cond_u=cond_u,
            cond_a=cond_a,
            ctx=ctx,
        )

    def conditional_means(self, k: int, context) -> Tuple[float, np.ndarray]:
        return self.u0, np.array([self.posterior_mean_a(k, float(context))])


# --- helpers ---------------------------------------------------------------------


class _RestrictedInstance(ProblemInstance):
    """View of a parent instance exposing a single source."""

    def __init__(self, parent: ProblemInstance, k: int):
        self.parent = parent
        self.k = k
        self.name = f"{parent.name}[source={k}]"
        self.prices = (parent.prices[k],)
        self.penalty = parent.penalty
        self.u_bar = parent.u_bar

    def sample_stream(self, horizon: int, rng: np.random.Generator) -> EpisodeData:
        ep = self.parent.sample_stream(horizon, rng)
        sel = slice(self.k, self.k + 1)
        return EpisodeData(
            z=ep.z,
            u=ep.u,
            a=ep.a,
            cond_u=ep.cond_u[:, sel],
            cond_a=ep.cond_a[:, sel, :],
            ctx=ep.ctx[:, sel],
        )

    def conditional_means(self, k: int, context):
        return self.parent.conditional_means(self.k, context)

    def atoms(self, k: int):
        return self.parent.atoms(self.k)

    def n_contexts(self, k: int):
        return self.parent.n_contexts(self.k)

    def n_public_contexts(self) -> int:
        return self.parent.n_public_contexts()


def restrict_to_source(instance: ProblemInstance, k: int) -> ProblemInstance:
    """Single-source view of an instance (for best-fixed-source baselines)."""
    if not 0 <= k < instance.k_sources:
        raise ValueError(f"source index {k} out of range")
    return _RestrictedInstance(instance, k)
