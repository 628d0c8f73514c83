"""Acceptance battery: the machine-checkable claims this package stands behind.

Each criterion (A1-A9) is a function returning a CriterionResult; the
``fairalloc verify`` subcommand and the pytest gate both run them through
`run_criteria`. Heavy simulation pools are cached on a shared `RunPools`
object so later criteria audit the runs made for earlier ones instead of
repeating them; criteria always execute in canonical order, which also keeps
the A1 wall-clock measurement honest (its pools are always cold when it
starts).

The criteria, by content:

    A1  benchmark separation on the two-source sign model: randomized
        purchasing sustains utility, any fixed source stalls at zero, the
        myopic baseline goes negative; solved rates hit their closed forms.
    A2  empirical regret under the horizon-tuned schedule stays below the
        explicit worst-case budget and the per-round rate shrinks with T.
    A3  the multiplier norm cap holds across every pooled run and under an
        adversarial attribute stream aimed at breaking it.
    A4  realized vs conditional-mean penalty concentrate at the CLT scale.
    A5  convex toolbox checks: Fenchel-Young, extension agreement, Lipschitz
        certificates, and inner-maximizer residuals below 1e-6.
    A6  importance-weighted rewards are unbiased; with the penalty switched
        off the source sampler concentrates on the best arm.
    A7  the offline benchmark reacts to prices and penalty scale the way the
        saddle point says it must.
    A8  learned-mean machinery: confidence-set coverage, sublinear added
        regret, and plug-in prior concentration along the whole path.
    A9  variant reductions: binary grids reproduce the base run bit for bit,
        the ratio objective freezes its multiplier on idle rounds, and the
        single-public-context bank matches the base sampler statistically.
"""

from __future__ import annotations

import dataclasses
import io
import math
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from fairalloc.bandit import iw_update, make_exp3, sample_with_uniform
from fairalloc.dual import dual_step, init_dual, regret_bound
from fairalloc.engine import EngineConfig, Summary, run_episode, run_greedy, schedule_for
from fairalloc.environment import NoisyAttribute, SymmetricTwoSource, restrict_to_source
from fairalloc.errors import InvariantViolation
from fairalloc.oracle import sensitivity_sweep, solve_opt, solve_static_opt
from fairalloc.penalty import (
    BallRegion,
    ScalarPenaltyOps,
    conjugate,
    custom_penalty,
    eval_extension,
    eval_penalty,
    gamma_residual,
    interval_polytope,
    scaled_abs,
    scaled_quadratic,
    solve_gamma,
    subgradient_at,
    zero_penalty,
)

# Plug-in prior concentration envelope |alpha_hat_t - alpha| <= sqrt(log T / (C t)).
# C was calibrated once against 50 master-seed-0 runs of the noisy-attribute
# model (sigma up to 2): the tightest passing constant was ~0.93, and half of
# it is frozen here; the criterion itself runs on fresh seeds.
ALPHA_CONCENTRATION_C = 0.45

_LAMBDA_SLACK = 1e-7


@dataclasses.dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    runtime_s: float = 0.0


def _bool(tag: str, ok: bool) -> str:
    return f"{tag}={'ok' if ok else 'FAIL'}"


class RunPools:
    """Lazily materialized, extendable caches of seeded engine runs.

    All pools run the two-source sign model under the horizon-tuned schedule
    with master seed 0 and seed indices 0..n-1, so a pool requested at 50
    seeds and later extended to 200 keeps its first 50 summaries identical.
    """

    def __init__(self):
        self._symmetric = SymmetricTwoSource()
        self._saddle = None
        self._exact: Dict[int, List[Summary]] = {}
        self._learn: Dict[int, List[Summary]] = {}
        self._fixed: Dict[Tuple[int, int], List[Summary]] = {}
        self._greedy: Dict[int, List[Summary]] = {}

    def symmetric(self) -> SymmetricTwoSource:
        return self._symmetric

    def saddle(self):
        if self._saddle is None:
            opt = solve_opt(self._symmetric)
            static_rate, static_k = solve_static_opt(self._symmetric)
            self._saddle = (opt, static_rate, static_k)
        return self._saddle

    def _extend(self, cache: List[Summary], n: int, make: Callable[[int], Summary]) -> List[Summary]:
        for seed in range(len(cache), n):
            cache.append(make(seed))
        return cache[:n]

    def exact_pool(self, horizon: int, n: int) -> List[Summary]:
        cfg = EngineConfig(horizon=horizon, schedule=schedule_for(self._symmetric, horizon))
        cache = self._exact.setdefault(horizon, [])
        return self._extend(
            cache, n, lambda s: run_episode(self._symmetric, cfg, _rng(s))
        )

    def learn_pool(self, horizon: int, n: int) -> List[Summary]:
        """learn_u runs paired (common random numbers) with `exact_pool`."""
        cfg = EngineConfig(
            horizon=horizon,
            schedule=schedule_for(self._symmetric, horizon),
            estimator="learn_u",
        )
        cache = self._learn.setdefault(horizon, [])
        return self._extend(
            cache, n, lambda s: run_episode(self._symmetric, cfg, _rng(s))
        )

    def fixed_pool(self, k: int, horizon: int, n: int) -> List[Summary]:
        inst = restrict_to_source(self._symmetric, k)
        cfg = EngineConfig(horizon=horizon, schedule=schedule_for(inst, horizon))
        cache = self._fixed.setdefault((k, horizon), [])
        return self._extend(cache, n, lambda s: run_episode(inst, cfg, _rng(s)))

    def greedy_pool(self, horizon: int, n: int) -> List[Summary]:
        cache = self._greedy.setdefault(horizon, [])
        return self._extend(
            cache, n, lambda s: run_greedy(self._symmetric, horizon, _rng(s))
        )

    def audit_lambda_bounds(self) -> Tuple[int, int]:
        """(#runs audited, #violations) across every cached engine pool."""
        audited = violations = 0
        groups = [(self._exact, "base"), (self._learn, "base")]
        for pool_map, variant in groups:
            for horizon, summaries in pool_map.items():
                sched = schedule_for(self._symmetric, horizon, variant)
                cap = self._symmetric.penalty.lipschitz + 2.0 * sched.eta * self._symmetric.penalty.diam
                for s in summaries:
                    audited += 1
                    if s.max_lambda_norm > cap + _LAMBDA_SLACK:
                        violations += 1
        for (k, horizon), summaries in self._fixed.items():
            inst = restrict_to_source(self._symmetric, k)
            sched = schedule_for(inst, horizon)
            cap = inst.penalty.lipschitz + 2.0 * sched.eta * inst.penalty.diam
            for s in summaries:
                audited += 1
                if s.max_lambda_norm > cap + _LAMBDA_SLACK:
                    violations += 1
        return audited, violations


def _rng(seed: int, master: int = 0) -> np.random.Generator:
    return np.random.default_rng([master, seed])


def _mean_rate(summaries: Sequence[Summary]) -> float:
    return float(np.mean([s.total_utility for s in summaries])) / summaries[0].horizon


# --- criteria ------------------------------------------------------------------------


def check_a1(pools: RunPools) -> CriterionResult:
    """Benchmark separation on the two-source sign model (and its runtime cap)."""
    start = time.monotonic()
    horizon, n_seeds = 100_000, 20
    opt, static_rate, _ = pools.saddle()
    ok_opt = abs(opt.rate - 0.25) <= 1e-4
    ok_static = abs(static_rate - 0.0) <= 1e-4

    alg_rate = _mean_rate(pools.exact_pool(horizon, n_seeds))
    ok_alg = 0.20 <= alg_rate <= 0.25

    fixed_rates = [_mean_rate(pools.fixed_pool(k, horizon, n_seeds)) for k in (0, 1)]
    best_fixed = max(fixed_rates)
    ok_fixed = -0.05 <= best_fixed <= 0.05

    greedy_totals = [s.total_utility for s in pools.greedy_pool(horizon, n_seeds)]
    ok_greedy = max(greedy_totals) < 0.0

    elapsed = time.monotonic() - start
    ok_time = elapsed <= 120.0
    passed = ok_opt and ok_static and ok_alg and ok_fixed and ok_greedy and ok_time
    detail = (
        f"opt_rate={opt.rate:.6f} static={static_rate:.2e} alg_rate={alg_rate:.4f} "
        f"best_fixed={best_fixed:.4f} greedy_max={max(greedy_totals):.0f} "
        f"runtime={elapsed:.0f}s"
        + ("" if passed else " | " + " ".join(
            _bool(t, o)
            for t, o in [
                ("opt", ok_opt), ("static", ok_static), ("alg", ok_alg),
                ("fixed", ok_fixed), ("greedy", ok_greedy), ("time", ok_time),
            ]
        ))
    )
    return CriterionResult("A1", passed, detail)


def check_a2(pools: RunPools) -> CriterionResult:
    """Regret under the tuned schedule vs the explicit worst-case budget."""
    inst = pools.symmetric()
    opt, _, _ = pools.saddle()
    horizons = (1_000, 10_000, 100_000)
    regrets, bounds = [], []
    for horizon in horizons:
        totals = [s.total_utility for s in pools.exact_pool(horizon, 50)]
        regrets.append(horizon * opt.rate - float(np.mean(totals)))
        bounds.append(
            regret_bound(
                inst.penalty.lipschitz, inst.penalty.diam, horizon, inst.u_bar, inst.prices, 1
            )
        )
    ok_bound = all(r <= b for r, b in zip(regrets, bounds))
    rates = [r / t for r, t in zip(regrets, horizons)]
    ok_decreasing = all(rates[i + 1] < rates[i] for i in range(len(rates) - 1))
    passed = ok_bound and ok_decreasing
    detail = (
        "regret/bound: "
        + " ".join(f"T={t}: {r:.0f}/{b:.0f}" for t, r, b in zip(horizons, regrets, bounds))
        + f" rates={['%.4f' % r for r in rates]}"
        + ("" if passed else f" | {_bool('bound', ok_bound)} {_bool('decreasing', ok_decreasing)}")
    )
    return CriterionResult("A2", passed, detail)


def _adversarial_stress(spec, horizon: int) -> int:
    """Drive the dual step with the worst vertex each round; count violations."""
    eta = spec.lipschitz / (2.0 * spec.diam * math.sqrt(horizon))
    state = init_dual(spec, eta)
    ops = ScalarPenaltyOps(spec)
    lo, hi = spec.polytope.interval
    diam = spec.diam
    violations = 0
    for _ in range(horizon):
        lam = float(state.lam[0])
        worst, worst_mag = None, -1.0
        for v in (lo, hi):
            g = ops.gamma(lam, v, diam)
            nxt = abs(lam - state.step_size() * (g - v))
            if nxt > worst_mag:
                worst_mag, worst = nxt, (g, v)
        try:
            dual_step(state, [worst[0]], [worst[1]])
        except InvariantViolation:
            violations += 1
            break
    return violations


def check_a3(pools: RunPools) -> CriterionResult:
    """Multiplier cap: audited across all pooled runs + adversarial streams."""
    # materialize the full A1/A2 workload if a standalone invocation skipped it
    for horizon in (1_000, 10_000, 100_000):
        pools.exact_pool(horizon, 50)
    for k in (0, 1):
        pools.fixed_pool(k, 100_000, 20)
    audited, violations = pools.audit_lambda_bounds()
    stress = sum(
        _adversarial_stress(spec, 10_000)
        for spec in (
            scaled_abs(5.0, interval_polytope(-1.0, 1.0)),
            scaled_quadratic(2.5, interval_polytope(-1.0, 1.0)),
        )
    )
    passed = violations == 0 and stress == 0
    detail = f"runs_audited={audited} violations={violations} stress_violations={stress}"
    return CriterionResult("A3", passed, detail)


def check_a4(pools: RunPools) -> CriterionResult:
    """Realized vs conditional-mean penalty agree at the CLT scale."""
    inst = pools.symmetric()
    lip = inst.penalty.lipschitz
    parts = []
    passed = True
    for horizon in (1_000, 10_000):
        pool = pools.exact_pool(horizon, 200)
        mean_realized = float(np.mean([s.penalty_realized for s in pool])) / horizon
        mean_delta = float(np.mean([s.penalty_delta for s in pool])) / horizon
        gap = abs(mean_realized - mean_delta)
        bound = 2.0 * lip * math.sqrt(1.0 / horizon)
        passed = passed and gap <= bound
        parts.append(f"T={horizon}: |gap|={gap:.4f}<=({bound:.4f})")
    return CriterionResult("A4", passed, " ".join(parts))


def _a5_specs():
    kink = custom_penalty(
        lambda x: 3.0 * max(abs(float(x[0])) - 0.25, 0.0),
        3.0,
        interval_polytope(-1.0, 1.0),
        fn_subgrad=lambda x: np.array(
            [0.0 if abs(float(x[0])) <= 0.25 else 3.0 * math.copysign(1.0, float(x[0]))]
        ),
    )
    return [
        ("zero", zero_penalty(interval_polytope(-1.0, 1.0))),
        ("scaled_abs", scaled_abs(5.0, interval_polytope(-1.0, 1.0))),
        ("scaled_quadratic", scaled_quadratic(2.5, interval_polytope(-1.0, 1.0))),
        ("custom_kink", kink),
    ]


def check_a5(pools: RunPools) -> CriterionResult:
    """Convex toolbox: Fenchel-Young, extension, Lipschitz, argmax residuals."""
    del pools
    worst = {"fy": 0.0, "ext": 0.0, "lip": 0.0, "res": 0.0}
    rng = np.random.default_rng(7)
    for _, spec in _a5_specs():
        lam_hi = spec.lipschitz + 1.0
        xs = np.linspace(-1.0, 1.0, 9)
        lams = np.linspace(-lam_hi, lam_hi, 9)
        for x in xs:
            rx = eval_extension(spec, [x])
            worst["ext"] = max(worst["ext"], abs(rx - eval_penalty(spec, [x])))
            for lam in lams:
                fy = lam * x - conjugate(spec, [lam]) - rx  # <= 0 by definition
                worst["fy"] = max(worst["fy"], fy)
            g = float(subgradient_at(spec, [x])[0])
            slack = eval_penalty(spec, [x]) + conjugate(spec, [g]) - g * x  # = 0 at subgradients
            worst["fy"] = max(worst["fy"], abs(slack))
        pts = rng.uniform(-3.0, 3.0, size=(64, 2))
        for y, z in pts:
            diff = abs(eval_extension(spec, [y]) - eval_extension(spec, [z]))
            worst["lip"] = max(worst["lip"], diff - spec.lipschitz * abs(y - z))
        for center in (-0.5, 0.0, 0.7):
            region = BallRegion(np.array([center]), spec.diam)
            for lam in np.linspace(-lam_hi, lam_hi, 11):
                gam = solve_gamma(spec, [lam], region)
                worst["res"] = max(worst["res"], gamma_residual(spec, [lam], region, gam))
    passed = (
        worst["fy"] <= 1e-7
        and worst["ext"] <= 1e-9
        and worst["lip"] <= 1e-9
        and worst["res"] <= 1e-6
    )
    detail = (
        f"fenchel_young={worst['fy']:.2e} extension={worst['ext']:.2e} "
        f"lipschitz_excess={worst['lip']:.2e} argmax_residual={worst['res']:.2e}"
    )
    return CriterionResult("A5", passed, detail)


def check_a6(pools: RunPools) -> CriterionResult:
    """Importance weighting is unbiased; the free-penalty sampler finds the best arm."""
    del pools
    # (i) one-sample estimates m - 1{k=j}(m - phi_j)/pi_j average to phi_j
    pi = np.array([0.5, 0.3, 0.2])
    phi = np.array([0.9, 0.5, 0.1])
    m = 1.0
    n = 300_000
    rng = np.random.default_rng(5)
    draws = np.searchsorted(np.cumsum(pi), rng.random(n), side="right")
    counts = np.bincount(draws, minlength=3)
    est_means = m - (m - phi) / pi * (counts / n)
    sd = (m - phi) * np.sqrt((1.0 - pi) / pi)  # per-sample std of the estimate
    z = np.abs(est_means - phi) / (sd / math.sqrt(n))
    ok_unbiased = bool(np.all(z <= 3.0))

    # (ii) with no penalty the reward is the raw source value; EXP3 must
    # concentrate on the best source at the tuned rate
    means = np.array([0.9, 0.5, 0.1])
    horizon = 100_000
    rho = math.sqrt(math.log(3) / (horizon * 3.0))
    state = make_exp3(3, rho, m=1.0)
    rng2 = np.random.default_rng(11)
    uniforms = rng2.random(horizon)
    rewards = rng2.random(horizon)
    best_pulls = 0
    for t in range(horizon):
        k, pi_k = sample_with_uniform(state, float(uniforms[t]))
        if k == 0:
            best_pulls += 1
        reward = 1.0 if rewards[t] < means[k] else 0.0
        state = iw_update(state, k, reward, pi_k)
    freq = best_pulls / horizon
    ok_best = freq >= 0.9
    passed = ok_unbiased and ok_best
    detail = f"max_z={float(z.max()):.2f}(<=3) best_arm_freq={freq:.3f}(>=0.9)"
    return CriterionResult("A6", passed, detail)


def check_a7(pools: RunPools) -> CriterionResult:
    """Benchmark comparative statics on the pair-purchase model's (r, p) grid."""
    del pools
    rs, ps = (0.0, 1.0, 5.0), (0.0, 0.1, 0.3)
    rows = sensitivity_sweep(rs, ps)
    cell = {(row["r"], row["p"]): row for row in rows}
    ok_free_rider = all(cell[(0.0, p)]["pi_star"] <= 1e-6 for p in ps if p > 0)
    ok_buyer = cell[(5.0, 0.0)]["pi_star"] >= 1.0 - 1e-3
    pos = [cell[(r, p)]["p_pos_given_alloc"] for r in rs for p in ps]
    ok_pos = all((not math.isnan(v)) and v >= 0.5 - 1e-9 for v in pos)
    ok_monotone = True
    for p in ps:
        seq = [cell[(r, p)]["p_pos_given_alloc"] for r in rs]
        ok_monotone = ok_monotone and all(
            seq[i + 1] <= seq[i] + 1e-4 for i in range(len(seq) - 1)
        )
    ok_gap = all(row["gap"] <= 1e-4 for row in rows)
    passed = ok_free_rider and ok_buyer and ok_pos and ok_monotone and ok_gap
    detail = (
        f"pi*(r=0,p>0)<=1e-6:{'ok' if ok_free_rider else 'FAIL'} "
        f"pi*(r=5,p=0)={cell[(5.0, 0.0)]['pi_star']:.4f} "
        f"min_p_pos={min(pos):.4f} {_bool('monotone', ok_monotone)} {_bool('gap', ok_gap)}"
    )
    return CriterionResult("A7", passed, detail)


def _alpha_paths(n_runs: int, horizon: int, master: int) -> List[np.ndarray]:
    """alpha_hat trajectories recovered from engine round logs."""
    inst = NoisyAttribute(alpha=0.7, sigmas=(0.5, 2.0), prices=(0.3, 0.0), u0=0.5)
    cfg = EngineConfig(
        horizon=horizon, schedule=schedule_for(inst, horizon), estimator="learn_a"
    )
    paths = []
    for seed in range(n_runs):
        sink = io.StringIO()
        run_episode(inst, cfg, _rng(seed, master=master), sink=sink)
        sink.seek(0)
        header = sink.readline().strip().split(",")
        ctx_col = header.index("ctx")
        obs = np.array([float(line.split(",")[ctx_col]) for line in sink])
        paths.append(np.cumsum((obs + 1.0) * 0.5) / np.arange(1, horizon + 1))
    return paths


def alpha_envelope_violations(path: np.ndarray, alpha: float, horizon: int) -> int:
    env = np.sqrt(math.log(horizon) / (ALPHA_CONCENTRATION_C * np.arange(1, len(path) + 1)))
    return int(np.sum(np.abs(path - alpha) > env))


def check_a8(pools: RunPools) -> CriterionResult:
    """Learned-mean machinery: coverage, added regret, prior concentration."""
    inst = pools.symmetric()
    # (i) anytime confidence sets cover the true per-source mean tables
    delta_conf, cov_runs, cov_horizon = 0.01, 500, 5_000
    probes = ((-1.0 / 3.0, 1.0), (-1.0 / 3.0, 1.0))
    cfg = EngineConfig(
        horizon=cov_horizon,
        schedule=schedule_for(inst, cov_horizon),
        estimator="learn_u",
        delta_conf=delta_conf,
        track_psi=probes,
    )
    covered = sum(
        1
        for seed in range(cov_runs)
        if run_episode(inst, cfg, _rng(seed, master=3)).coverage_ok
    )
    cov_frac = covered / cov_runs
    cov_floor = 1.0 - 2 * delta_conf - 0.02
    ok_cov = cov_frac >= cov_floor

    # (ii) added regret of the optimistic learner is sublinear across decades
    horizons = (1_000, 10_000, 100_000)
    n_pair = 30
    added, sems = [], []
    for horizon in horizons:
        exact = pools.exact_pool(horizon, n_pair)
        learn = pools.learn_pool(horizon, n_pair)
        diffs = np.array(
            [e.total_utility - l.total_utility for e, l in zip(exact, learn)]
        )
        added.append(float(diffs.mean()))
        sems.append(float(diffs.std(ddof=1)) / math.sqrt(n_pair))
    ok_sublinear = True
    for i in range(len(horizons) - 1):
        growth = 5.0 * (math.log(horizons[i + 1]) / math.log(horizons[i]))
        allowed = growth * max(added[i], 2.0 * sems[i + 1])
        ok_sublinear = ok_sublinear and added[i + 1] <= allowed

    # (iii) the plug-in prior concentrates along the entire path
    a_horizon, a_runs = 10_000, 20
    paths = _alpha_paths(a_runs, a_horizon, master=1)
    max_bad = 0
    for path in paths:
        max_bad = max(max_bad, alpha_envelope_violations(path, 0.7, a_horizon))
    ok_alpha = max_bad <= 2  # fraction >= 1 - 2/T of the T checkpoints

    passed = ok_cov and ok_sublinear and ok_alpha
    detail = (
        f"coverage={cov_frac:.3f}(>={cov_floor:.2f}) "
        f"added={['%.0f' % a for a in added]} {_bool('sublinear', ok_sublinear)} "
        f"alpha_max_violations={max_bad}(<=2)"
    )
    return CriterionResult("A8", passed, detail)


def _episode_log(inst, cfg: EngineConfig, seed: int) -> str:
    sink = io.StringIO()
    run_episode(inst, cfg, _rng(seed), sink=sink)
    return sink.getvalue()


def check_a9(pools: RunPools) -> CriterionResult:
    """Variant reductions against the base loop."""
    inst = pools.symmetric()
    horizon = 3_000
    sched = schedule_for(inst, horizon)

    base_cfg = EngineConfig(horizon=horizon, schedule=sched)
    fin_cfg = EngineConfig(
        horizon=horizon, schedule=sched, variant="finite_actions", actions=(0.0, 1.0)
    )
    ok_finite = _episode_log(inst, base_cfg, 3) == _episode_log(inst, fin_cfg, 3)

    ratio_cfg = EngineConfig(
        horizon=horizon,
        schedule=schedule_for(inst, horizon, "ratio"),
        variant="ratio",
    )
    sink = io.StringIO()
    run_episode(inst, ratio_cfg, _rng(5), sink=sink)
    sink.seek(0)
    header = sink.readline().strip().split(",")
    x_col, lam_col = header.index("x"), header.index("lambda_0")
    rows = [line.strip().split(",") for line in sink]
    ok_ratio = all(
        rows[i + 1][lam_col] == rows[i][lam_col]
        for i in range(len(rows) - 1)
        if rows[i][x_col] == "0"
    )

    pub_fixed = EngineConfig(
        horizon=horizon, schedule=sched, variant="public_contexts", anytime_bandit=False
    )
    ok_pub_exact = _episode_log(inst, base_cfg, 8) == _episode_log(inst, pub_fixed, 8)
    pub_cfg = EngineConfig(horizon=20_000, schedule=schedule_for(inst, 20_000), variant="public_contexts")
    base20 = EngineConfig(horizon=20_000, schedule=schedule_for(inst, 20_000))
    pub_rates = [
        run_episode(inst, pub_cfg, _rng(s, master=9)).mean_utility for s in range(10)
    ]
    base_rates = [
        run_episode(inst, base20, _rng(s, master=9)).mean_utility for s in range(10)
    ]
    mc_gap = abs(float(np.mean(pub_rates)) - float(np.mean(base_rates)))
    ok_pub_mc = mc_gap <= 0.03

    passed = ok_finite and ok_ratio and ok_pub_exact and ok_pub_mc
    detail = (
        f"{_bool('finite_identical', ok_finite)} {_bool('ratio_frozen', ok_ratio)} "
        f"{_bool('public_identical', ok_pub_exact)} public_mc_gap={mc_gap:.4f}(<=0.03)"
    )
    return CriterionResult("A9", passed, detail)


# --- driver --------------------------------------------------------------------------

_CRITERIA: List[Tuple[str, Callable[[RunPools], CriterionResult]]] = [
    ("A1", check_a1),
    ("A2", check_a2),
    ("A3", check_a3),
    ("A4", check_a4),
    ("A5", check_a5),
    ("A6", check_a6),
    ("A7", check_a7),
    ("A8", check_a8),
    ("A9", check_a9),
]


def run_criteria(
    names: Optional[Sequence[str]] = None,
    progress: Optional[Callable[[str], None]] = None,
    pools: Optional[RunPools] = None,
) -> List[CriterionResult]:
    """Run the battery (or a subset) in canonical order with shared pools."""
    wanted = None if names is None else {n.upper() for n in names}
    if wanted is not None:
        unknown = wanted - {name for name, _ in _CRITERIA}
        if unknown:
            raise ValueError(f"unknown criteria: {sorted(unknown)}")
    pools = pools if pools is not None else RunPools()
    results = []
    for name, fn in _CRITERIA:
        if wanted is not None and name not in wanted:
            continue
        if progress:
            progress(f"running {name} ...")
        start = time.monotonic()
        res = fn(pools)
        res.runtime_s = time.monotonic() - start
        results.append(res)
    return results
