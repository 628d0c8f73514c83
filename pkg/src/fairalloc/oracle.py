"""Offline benchmark rates via the dual saddle point.

The per-round value of the best policy that may randomize its source choice
is bracketed by sup over source distributions pi of inf over multipliers
lambda of <pi, D(lambda)>, where D(lambda, k) is the expected virtual reward
of source k plus the penalty conjugate. This module evaluates that curve
(exactly for finite-context instances, by adaptive quadrature for the
Gaussian family, by common-random-number Monte Carlo otherwise) and solves
the saddle with a certified gap, giving the regret reference the experiments
measure against.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from scipy.optimize import brentq
from scipy.stats import norm

from fairalloc.environment import GaussianMonotone, ProblemInstance
from fairalloc.errors import NumericalError
from fairalloc.numerics import golden_section_min, ternary_max
from fairalloc.penalty import conjugate

_QUAD_TOL = 1e-6
_GAP_TOL = 1e-4
_MC_DEFAULT = 1_000_000
_FW_ITERS = 500


# --- the dual curve ---------------------------------------------------------------


def _phi_mean_atoms(instance: ProblemInstance, k: int, lam: np.ndarray) -> float:
    probs, cond_u, cond_a = instance.atoms(k)
    gains = cond_u - cond_a @ lam
    return float(probs @ np.maximum(gains, 0.0)) - float(instance.prices[k])


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(80)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class _TruncatedPair:
    """Quadrature helpers for the two-point attribute with Gaussian utility."""

    def __init__(self, inst: GaussianMonotone):
        self.lo, self.hi = -inst.trunc, inst.trunc
        # P(|u| <= trunc | a) -- the density renormalizer per branch
        self.z_pos = norm.cdf(self.hi - 1.0) - norm.cdf(self.lo - 1.0)
        self.z_neg = norm.cdf(self.hi + 1.0) - norm.cdf(self.lo + 1.0)

    def branch_pdf(self, u, a: float):
        z = self.z_pos if a > 0 else self.z_neg
        return _INV_SQRT_2PI * np.exp(-0.5 * (np.asarray(u) - a) ** 2) / z

    def mix_pdf(self, u):
        return 0.5 * (self.branch_pdf(u, 1.0) + self.branch_pdf(u, -1.0))

    def integrate(self, f: Callable, points: Sequence[float] = ()) -> float:
        """Adaptive quadrature with an explicit achieved-error check."""
        pts = sorted(p for p in points if self.lo < p < self.hi)
        val, err = integrate.quad(
            f, self.lo, self.hi, points=pts or None, limit=300, epsabs=_QUAD_TOL / 4
        )
        if err > _QUAD_TOL:
            raise NumericalError(f"quadrature error {err:.3g} exceeds {_QUAD_TOL}")
        return val

    def piecewise(self, f_vec: Callable, points: Sequence[float] = ()) -> float:
        """Gauss-Legendre panels between break points (exact on smooth pieces).

        The fast path for the saddle search, which evaluates the curve
        thousands of times; a test pins it against `integrate`.
        """
        cuts = [self.lo] + sorted(p for p in points if self.lo < p < self.hi) + [self.hi]
        total = 0.0
        for a, b in zip(cuts, cuts[1:]):
            if b - a < 1e-14:
                continue
            half = 0.5 * (b - a)
            x = 0.5 * (a + b) + half * _GL_NODES
            total += half * float(_GL_WEIGHTS @ f_vec(x))
        return total


def _tanh_crossings(lam: float, hi: float) -> List[float]:
    """Roots of u = lam * tanh(u) in (-hi, hi): kinks of the k=1 integrand."""
    pts = [0.0]
    if lam > 1.0:
        h = lambda u: u - lam * math.tanh(u)
        # h(0+) < 0 for lam > 1; find the sign change before hi if there is one
        if h(hi) > 0:
            root = brentq(h, 1e-12, hi, xtol=1e-12)
            pts += [root, -root]
    return pts


def _phi_mean_gaussian(
    inst: GaussianMonotone, k: int, lam_val: float, helper: _TruncatedPair, fast: bool
) -> float:
    quad = helper.piecewise if fast else helper.integrate
    if k == 0:
        total = 0.0
        for a in (1.0, -1.0):
            thr = lam_val * a
            total += 0.5 * quad(
                lambda u, a=a, thr=thr: np.maximum(u - thr, 0.0) * helper.branch_pdf(u, a),
                points=[thr],
            )
        return total - inst.prices[0]
    pts = _tanh_crossings(lam_val, helper.hi)
    val = quad(
        lambda u: np.maximum(u - lam_val * np.tanh(u), 0.0) * helper.mix_pdf(u),
        points=pts,
    )
    return val - inst.prices[1]


class DualCurve:
    """Evaluates D(lambda, k) for one instance, caching what the mode needs."""

    def __init__(
        self,
        instance: ProblemInstance,
        mc_samples: Optional[int] = None,
        seed: int = 0,
        fast_quadrature: bool = True,
    ):
        self.instance = instance
        self.spec = instance.penalty
        self.k_sources = instance.k_sources
        self.fast = fast_quadrature
        self._mode = "atoms"
        if instance.atoms(0) is None:
            if isinstance(instance, GaussianMonotone):
                self._mode = "quad"
                self._helper = _TruncatedPair(instance)
            else:
                # common random numbers: one frozen stream serves every lambda
                self._mode = "mc"
                n = mc_samples or _MC_DEFAULT
                ep = instance.sample_stream(n, np.random.default_rng(seed))
                self._mc_cu = ep.cond_u
                self._mc_ca = ep.cond_a
        elif mc_samples:
            self._mode = "mc"
            ep = instance.sample_stream(mc_samples, np.random.default_rng(seed))
            self._mc_cu = ep.cond_u
            self._mc_ca = ep.cond_a

    def phi_mean(self, k: int, lam) -> float:
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if self._mode == "atoms":
            return _phi_mean_atoms(self.instance, k, lam)
        if self._mode == "quad":
            return _phi_mean_gaussian(self.instance, k, float(lam[0]), self._helper, self.fast)
        gains = self._mc_cu[:, k] - self._mc_ca[:, k] @ lam
        return float(np.maximum(gains, 0.0).mean()) - float(self.instance.prices[k])

    def value(self, k: int, lam) -> float:
        return self.phi_mean(k, lam) + conjugate(self.spec, np.atleast_1d(lam))

    def mixture(self, pi: np.ndarray, lam) -> float:
        total = conjugate(self.spec, np.atleast_1d(lam))
        for k in range(self.k_sources):
            if pi[k] > 0.0:
                total += pi[k] * self.phi_mean(k, lam)
        return total


def dual_value(instance: ProblemInstance, k: int, lam, *, mc_samples=None, seed=0) -> float:
    """D(lambda, k): expected virtual reward of source k plus the conjugate.

    Exact for finite-context instances; adaptive quadrature (absolute error
    at most 1e-6, else a numerical error is raised) for the Gaussian family;
    frozen-stream Monte Carlo when `mc_samples` is set or nothing else fits.
    """
    curve = DualCurve(instance, mc_samples=mc_samples, seed=seed, fast_quadrature=False)
    return curve.value(k, lam)


# --- saddle point -----------------------------------------------------------------


@dataclass(frozen=True)
class SaddleResult:
    rate: float
    pi_star: Tuple[float, ...]
    lam_star: Tuple[float, ...]
    gap: float

    @property
    def lam_scalar(self) -> float:
        return self.lam_star[0]


def _inner_min(curve: DualCurve, pi: np.ndarray, box: float) -> Tuple[float, np.ndarray]:
    """inf over the multiplier box of <pi, D(lambda)> (convex in lambda)."""
    if curve.spec.dim == 1:
        lam, val = golden_section_min(
            lambda t: curve.mixture(pi, np.array([t])), -box, box, tol=1e-9
        )
        return val, np.array([lam])
    # two-dimensional: refine a polar grid around the best cell
    center = np.zeros(2)
    radius = box
    best_val, best_lam = math.inf, center
    for _ in range(6):
        rs = np.linspace(0.0, radius, 9)
        ths = np.linspace(0.0, 2.0 * math.pi, 17, endpoint=False)
        for r in rs:
            for th in ths:
                lam = center + r * np.array([math.cos(th), math.sin(th)])
                if float(np.linalg.norm(lam)) > box + 1e-12:
                    continue
                v = curve.mixture(pi, lam)
                if v < best_val:
                    best_val, best_lam = v, lam
        center, radius = best_lam, radius / 3.0
    return best_val, best_lam


def _lp_refine(curve: DualCurve, box: float) -> np.ndarray:
    """Best mixing weights of the matrix game on a fine multiplier grid.

    Frank-Wolfe can stall where the inf-function is only piecewise linear
    (a supergradient at one inner minimizer says nothing about joint
    directions). Restricting the adversary to a grid turns the saddle into
    a linear program whose weights are then re-certified against the true
    continuum inner minimum, so the grid never inflates the reported rate.
    """
    from scipy.optimize import linprog

    k_src = curve.k_sources
    n = 4001 if curve._mode == "atoms" else 801
    grid = np.linspace(-box, box, n)
    d_mat = np.empty((n, k_src))
    for i, lam in enumerate(grid):
        arr = np.array([lam])
        base = conjugate(curve.spec, arr)
        for k in range(k_src):
            d_mat[i, k] = base + curve.phi_mean(k, arr)
    # maximize t subject to t <= <pi, D(lam_i)> for every grid multiplier
    a_ub = np.hstack([-d_mat, np.ones((n, 1))])
    a_eq = np.hstack([np.ones((1, k_src)), np.zeros((1, 1))])
    res = linprog(
        c=np.concatenate([np.zeros(k_src), [-1.0]]),
        A_ub=a_ub,
        b_ub=np.zeros(n),
        A_eq=a_eq,
        b_eq=np.ones(1),
        bounds=[(0.0, 1.0)] * k_src + [(None, None)],
        method="highs",
    )
    if res.status != 0:
        raise NumericalError(f"grid game LP failed: {res.message}")
    pi = np.clip(res.x[:k_src], 0.0, None)
    return pi / pi.sum()


def _upper_bound(curve: DualCurve, box: float) -> float:
    """inf over lambda of max_k D(lambda, k) >= the saddle value."""
    ks = range(curve.k_sources)

    def worst(lam_arr):
        base = conjugate(curve.spec, lam_arr)
        return base + max(curve.phi_mean(k, lam_arr) for k in ks)

    if curve.spec.dim == 1:
        _, val = golden_section_min(lambda t: worst(np.array([t])), -box, box, tol=1e-9)
        return val
    uniform = np.full(curve.k_sources, 1.0 / curve.k_sources)
    # reuse the grid refinement through a one-hot trick: evaluate max directly
    center, radius = np.zeros(2), box
    best = math.inf
    for _ in range(6):
        for r in np.linspace(0.0, radius, 9):
            for th in np.linspace(0.0, 2.0 * math.pi, 17, endpoint=False):
                lam = center + r * np.array([math.cos(th), math.sin(th)])
                if float(np.linalg.norm(lam)) > box + 1e-12:
                    continue
                v = worst(lam)
                if v < best:
                    best, best_center = v, lam
        center, radius = best_center, radius / 3.0
    return best


def solve_opt(
    instance: ProblemInstance, *, mc_samples=None, seed: int = 0, gap_tol: float = _GAP_TOL
) -> SaddleResult:
    """Best randomized-source rate: sup_pi inf_lambda <pi, D(lambda)>.

    Ternary search over the mixing weight for two sources, Frank-Wolfe on the
    concave inf-function above that. The result carries a certified gap:
    the inf of max_k D upper-bounds the saddle, the returned pi achieves it
    from below.
    """
    curve = DualCurve(instance, mc_samples=mc_samples, seed=seed)
    box = instance.penalty.lipschitz + 0.5
    k_src = curve.k_sources

    if k_src == 1:
        pi = np.array([1.0])
        val, lam = _inner_min(curve, pi, box)
    elif k_src == 2:

        def v_of(p0: float) -> float:
            return _inner_min(curve, np.array([p0, 1.0 - p0]), box)[0]

        p0, val = ternary_max(v_of, 0.0, 1.0, tol=1e-7)
        pi = np.array([p0, 1.0 - p0])
        val, lam = _inner_min(curve, pi, box)
    else:
        # Frank-Wolfe toward the best-looking source, with an exact line
        # search along each direction (the inf-function is concave but only
        # piecewise linear, where a fixed step schedule stalls).
        pi = np.full(k_src, 1.0 / k_src)
        val, lam = _inner_min(curve, pi, box)
        best_val, best_pi, best_lam = val, pi.copy(), lam
        for _ in range(_FW_ITERS):
            grads = np.array([curve.value(k, lam) for k in range(k_src)])
            k_star = int(np.argmax(grads))
            fw_gap = grads[k_star] - float(grads @ pi)
            if fw_gap <= 1e-7:
                break
            direction = -pi.copy()
            direction[k_star] += 1.0

            def along(s: float) -> float:
                mix = np.clip(pi + s * direction, 0.0, None)
                return _inner_min(curve, mix / mix.sum(), box)[0]

            s_star, v_line = ternary_max(along, 0.0, 1.0, tol=1e-6, max_iter=60)
            if s_star <= 1e-10 or v_line <= val + 1e-12:
                break  # stalled on a nonsmooth plateau; the refinement takes over
            pi = np.clip(pi + s_star * direction, 0.0, None)
            pi /= pi.sum()
            val, lam = _inner_min(curve, pi, box)
            if val > best_val:
                best_val, best_pi, best_lam = val, pi.copy(), lam
        val, pi, lam = best_val, best_pi, best_lam

    ub = _upper_bound(curve, box)
    gap = max(ub - val, 0.0)
    if gap > gap_tol and k_src > 2:
        # Frank-Wolfe stalled on a nonsmooth plateau; refine via the grid game
        pi_lp = _lp_refine(curve, box)
        val_lp, lam_lp = _inner_min(curve, pi_lp, box)
        if val_lp > val:
            val, pi, lam = val_lp, pi_lp, lam_lp
        gap = max(ub - val, 0.0)
    if gap > gap_tol:
        raise NumericalError(f"saddle gap {gap:.3g} exceeds the certified {gap_tol}")
    return SaddleResult(
        rate=val, pi_star=tuple(float(p) for p in pi), lam_star=tuple(lam.tolist()), gap=gap
    )


def solve_static_opt(
    instance: ProblemInstance, *, mc_samples=None, seed: int = 0
) -> Tuple[float, int]:
    """Best single-source rate: max_k inf_lambda D(lambda, k)."""
    curve = DualCurve(instance, mc_samples=mc_samples, seed=seed)
    box = instance.penalty.lipschitz + 0.5
    best_val, best_k = -math.inf, 0
    for k in range(curve.k_sources):
        pi = np.zeros(curve.k_sources)
        pi[k] = 1.0
        val, _ = _inner_min(curve, pi, box)
        if val > best_val:
            best_val, best_k = val, k
    return best_val, best_k


# --- sensitivity sweep -------------------------------------------------------------


def _induced_rule_stats(inst: GaussianMonotone, lam_val: float) -> List[dict]:
    """Per-source allocation statistics of the rule x = 1{E[u|c] >= lam E[a|c]}."""
    helper = _TruncatedPair(inst)
    out = []
    # full-information source: threshold u >= lam * a branch by branch
    alloc = util = attr = pos = 0.0
    for a in (1.0, -1.0):
        thr = lam_val * a
        alloc_a = helper.piecewise(
            lambda u, a=a, t=thr: helper.branch_pdf(u, a) * (u >= t), points=[thr]
        )
        util_a = helper.piecewise(
            lambda u, a=a, t=thr: u * helper.branch_pdf(u, a) * (u >= t), points=[thr]
        )
        alloc += 0.5 * alloc_a
        util += 0.5 * util_a
        attr += 0.5 * a * alloc_a
        if a > 0:
            pos = 0.5 * alloc_a
    out.append(dict(alloc=alloc, util=util, attr=attr, pos=pos))
    # posterior source: region u >= lam * tanh(u)
    pts = _tanh_crossings(lam_val, helper.hi)
    ind = lambda u: (u >= lam_val * np.tanh(u)).astype(float)
    alloc = helper.piecewise(lambda u: ind(u) * helper.mix_pdf(u), points=pts)
    util = helper.piecewise(lambda u: u * ind(u) * helper.mix_pdf(u), points=pts)
    attr = helper.piecewise(lambda u: np.tanh(u) * ind(u) * helper.mix_pdf(u), points=pts)
    pos = helper.piecewise(
        lambda u: 0.5 * (1.0 + np.tanh(u)) * ind(u) * helper.mix_pdf(u), points=pts
    )
    out.append(dict(alloc=alloc, util=util, attr=attr, pos=pos))
    return out


def _instance_tag(r: float, p: float, trunc: float) -> str:
    raw = f"gaussian_monotone:r={r:.12g},p={p:.12g},trunc={trunc:.12g}"
    return hashlib.sha1(raw.encode()).hexdigest()[:10]


def sensitivity_sweep(
    rs: Sequence[float], ps: Sequence[float], trunc: float = 8.0
) -> List[dict]:
    """Saddle solutions and induced-rule panels over an (r, p) grid.

    Each row reports the purchase frequency of the paid full-information
    source, the composition of the allocated pool, and how the fairness and
    information costs compare against the gross utility at the optimum.
    """
    from fairalloc.penalty import eval_penalty

    rows = []
    for r in rs:
        for p in ps:
            inst = GaussianMonotone(r=float(r), p=float(p), trunc=trunc)
            saddle = solve_opt(inst)
            stats = _induced_rule_stats(inst, saddle.lam_scalar)
            pi = saddle.pi_star
            alloc = sum(pi[k] * stats[k]["alloc"] for k in range(2))
            util = sum(pi[k] * stats[k]["util"] for k in range(2))
            attr = sum(pi[k] * stats[k]["attr"] for k in range(2))
            pos = sum(pi[k] * stats[k]["pos"] for k in range(2))
            info_cost = pi[0] * float(p)
            fairness = eval_penalty(inst.penalty, np.array([attr])) if alloc > 0 else 0.0
            rows.append(
                dict(
                    instance=_instance_tag(float(r), float(p), trunc),
                    r=float(r),
                    p=float(p),
                    rate=saddle.rate,
                    pi_star=pi[0],
                    lam_star=saddle.lam_scalar,
                    gap=saddle.gap,
                    p_pos_given_alloc=(pos / alloc) if alloc > 1e-12 else float("nan"),
                    fairness_utility_ratio=(fairness / util) if util > 1e-12 else float("nan"),
                    info_cost_utility_ratio=(info_cost / util) if util > 1e-12 else float("nan"),
                )
            )
    return rows
