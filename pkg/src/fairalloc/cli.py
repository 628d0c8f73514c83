"""Experiment front end: seeded runs, figure bundles, and the acceptance gate.

Subcommands
-----------
``fairalloc run --config cfg.json [--seeds N] [--T N] [--variant v] [--out dir]
[--threads n]``
    Execute one configuration over its seed list. Writes ``summaries.json``
    (per-seed accounting, benchmark rates, regrets — byte-identical across
    reruns of the same effective config), ``manifest.json`` (config hash,
    code version, timestamps, wall clock — the only place nondeterministic
    metadata lives), and optionally per-seed round logs
    ``rounds_seed****.csv`` when ``log_stride`` > 0.

``fairalloc figure {multi_arms,sensitivity} --out dir [...]``
    Produce the plotting bundles consumed by the renderer. ``multi_arms``
    compares the adaptive policy against the best fixed source, the myopic
    baseline, and the two benchmark rate lines over a log-spaced horizon
    grid; ``sensitivity`` sweeps the quadratic-penalty pair-purchase model
    over a (penalty scale, price) grid.

``fairalloc verify [--criteria A1,A5,...]``
    Run the acceptance battery and print one pass/fail row per criterion.

``fairalloc oracle --config cfg.json [--mc-samples N]``
    Solve the offline benchmark for a configured instance and print the
    rates as JSON.

Exit codes: 0 success, 1 failure (verify criteria or numeric certification),
2 invalid configuration (diagnostic naming the offending field), 3 runtime
invariant violation (diagnostic dump written next to the outputs).

Config schema (JSON object; unknown keys are rejected):

    {
      "instance":      {"name": "...", ...params},   // required
      "horizon":       100000,                        // required, > 0
      "seeds":         20                             // int n -> 0..n-1, or a list
      "master_seed":   0,
      "variant":       "base|finite_actions|ratio|public_contexts",
      "estimator":     "exact|learn_u|learn_a",
      "schedule":      {"eta": .., "m": .., "rho": ..},  // optional override
      "actions":       [0.0, 0.5, 1.0],               // finite_actions only
      "ratio_vertex":  -1.0,
      "anytime_bandit": true,
      "delta_conf":    0.01,
      "log_stride":    0,        // 0 = no round logs
      "checkpoints":   [1000, 10000],
      "oracle":        "auto|skip",
      "out":           "runs/demo"
    }

Instances: ``symmetric_two_source`` (penalty_scale, prices),
``gaussian_monotone`` (r, p, trunc), ``noisy_attribute`` (alpha, sigmas,
prices, u0, noise), ``table`` (path, prices, penalty={kind, scale, lo, hi}).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

import fairalloc
from fairalloc.engine import EngineConfig, Summary, run_episode, run_greedy, schedule_for
from fairalloc.environment import (
    GaussianMonotone,
    NoisyAttribute,
    ProblemInstance,
    SymmetricTwoSource,
    load_table,
    restrict_to_source,
)
from fairalloc.errors import InvariantViolation, NumericalError, SchemaError
from fairalloc.dual import Schedule
from fairalloc.oracle import sensitivity_sweep, solve_opt, solve_static_opt
from fairalloc.penalty import (
    PenaltySpec,
    interval_polytope,
    scaled_abs,
    scaled_quadratic,
    zero_penalty,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_BAD_CONFIG = 2
EXIT_INVARIANT = 3

_THREADS_ENV = "FAIRALLOC_THREADS"

MULTI_ARMS_HEADER = "series,T,mean,q1,q3"
MULTI_ARMS_SERIES = ("alg", "best_fixed", "greedy", "opt", "static_opt")
SENSITIVITY_HEADER = (
    "r,p,rate,pi_star,lam_star,gap,p_pos_given_alloc,"
    "fairness_utility_ratio,info_cost_utility_ratio,instance"
)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# --- instances from config ---------------------------------------------------------


def _build_penalty(spec: Mapping[str, Any]) -> PenaltySpec:
    kind = spec.get("kind")
    lo = float(spec.get("lo", -1.0))
    hi = float(spec.get("hi", 1.0))
    poly = interval_polytope(lo, hi)
    if kind == "zero":
        return zero_penalty(poly)
    if kind == "scaled_abs":
        return scaled_abs(float(spec["scale"]), poly)
    if kind == "scaled_quadratic":
        return scaled_quadratic(float(spec["scale"]), poly)
    raise SchemaError(f"unknown penalty kind {kind!r} (zero|scaled_abs|scaled_quadratic)")


def build_instance(spec: Mapping[str, Any], base_dir: Optional[Path] = None) -> ProblemInstance:
    """Construct a problem instance from its config mapping."""
    if not isinstance(spec, Mapping) or "name" not in spec:
        raise SchemaError("instance must be an object with a 'name' field")
    params = {k: v for k, v in spec.items() if k != "name"}
    name = spec["name"]
    try:
        if name == "symmetric_two_source":
            scale = float(params.pop("penalty_scale", 5.0))
            prices = tuple(params.pop("prices", (0.0, 0.0)))
            _reject_extra(name, params)
            return SymmetricTwoSource(
                penalty=scaled_abs(scale, interval_polytope(-1.0, 1.0)), prices=prices
            )
        if name == "gaussian_monotone":
            r = float(params.pop("r"))
            p = float(params.pop("p"))
            trunc = float(params.pop("trunc", 8.0))
            _reject_extra(name, params)
            return GaussianMonotone(r, p, trunc)
        if name == "noisy_attribute":
            alpha = float(params.pop("alpha"))
            sigmas = tuple(float(s) for s in params.pop("sigmas"))
            prices = params.pop("prices", None)
            u0 = float(params.pop("u0", 0.5))
            noise = params.pop("noise", "gaussian")
            penalty = params.pop("penalty", None)
            pen = _build_penalty(penalty) if penalty is not None else None
            _reject_extra(name, params)
            return NoisyAttribute(alpha, sigmas, prices=prices, u0=u0, penalty=pen, noise=noise)
        if name == "table":
            raw = Path(params.pop("path"))
            path = raw if raw.is_absolute() or base_dir is None else base_dir / raw
            prices = tuple(float(p) for p in params.pop("prices"))
            penalty = _build_penalty(params.pop("penalty"))
            _reject_extra(name, params)
            return load_table(path, prices, penalty)
    except KeyError as exc:
        raise SchemaError(f"instance {name!r} is missing required field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"instance {name!r}: {exc}") from exc
    raise SchemaError(
        f"unknown instance {name!r} "
        "(symmetric_two_source|gaussian_monotone|noisy_attribute|table)"
    )


def _reject_extra(name: str, params: Mapping[str, Any]) -> None:
    if params:
        raise SchemaError(f"instance {name!r} got unknown fields {sorted(params)}")


# --- run configuration ---------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run; serializes losslessly to JSON."""

    instance: Mapping[str, Any]
    horizon: int
    seeds: Tuple[int, ...]
    master_seed: int = 0
    variant: str = "base"
    estimator: str = "exact"
    schedule: Optional[Mapping[str, float]] = None
    actions: Optional[Tuple[float, ...]] = None
    ratio_vertex: Optional[float] = None
    anytime_bandit: bool = True
    delta_conf: Optional[float] = None
    log_stride: int = 0
    checkpoints: Tuple[int, ...] = ()
    oracle: str = "auto"
    out: Optional[str] = None

    _FIELDS = (
        "instance horizon seeds master_seed variant estimator schedule actions "
        "ratio_vertex anytime_bandit delta_conf log_stride checkpoints oracle out"
    ).split()

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]) -> "RunConfig":
        if not isinstance(raw, Mapping):
            raise SchemaError("config must be a JSON object")
        unknown = sorted(set(raw) - set(cls._FIELDS))
        if unknown:
            raise SchemaError(f"unknown config fields {unknown}")
        for req in ("instance", "horizon", "seeds"):
            if req not in raw:
                raise SchemaError(f"config is missing required field {req!r}")
        seeds = raw["seeds"]
        if isinstance(seeds, int):
            if seeds <= 0:
                raise SchemaError("seeds count must be positive")
            seeds = tuple(range(seeds))
        else:
            try:
                seeds = tuple(int(s) for s in seeds)
            except (TypeError, ValueError) as exc:
                raise SchemaError("seeds must be an int or a list of ints") from exc
            if len(set(seeds)) != len(seeds):
                raise SchemaError("seed list contains duplicates")
        try:
            horizon = int(raw["horizon"])
        except (TypeError, ValueError) as exc:
            raise SchemaError("horizon must be an integer") from exc
        sched = raw.get("schedule")
        if sched is not None:
            extra = sorted(set(sched) - {"eta", "m", "rho"})
            missing = sorted({"eta", "m", "rho"} - set(sched))
            if extra or missing:
                raise SchemaError(
                    f"schedule override needs exactly eta/m/rho (extra={extra}, missing={missing})"
                )
            sched = {k: float(sched[k]) for k in ("eta", "m", "rho")}
        actions = raw.get("actions")
        if actions is not None:
            actions = tuple(float(a) for a in actions)
        oracle = raw.get("oracle", "auto")
        if oracle not in ("auto", "skip"):
            raise SchemaError(f"oracle must be 'auto' or 'skip', got {oracle!r}")
        cfg = cls(
            instance=dict(raw["instance"]),
            horizon=horizon,
            seeds=seeds,
            master_seed=int(raw.get("master_seed", 0)),
            variant=raw.get("variant", "base"),
            estimator=raw.get("estimator", "exact"),
            schedule=sched,
            actions=actions,
            ratio_vertex=(None if raw.get("ratio_vertex") is None else float(raw["ratio_vertex"])),
            anytime_bandit=bool(raw.get("anytime_bandit", True)),
            delta_conf=(None if raw.get("delta_conf") is None else float(raw["delta_conf"])),
            log_stride=int(raw.get("log_stride", 0)),
            checkpoints=tuple(int(t) for t in raw.get("checkpoints", ())),
            oracle=oracle,
            out=raw.get("out"),
        )
        if cfg.log_stride < 0:
            raise SchemaError("log_stride must be >= 0 (0 disables round logs)")
        return cfg

    def to_mapping(self) -> Dict[str, Any]:
        """Canonical plain-dict form; `from_mapping` inverts it exactly."""
        return {
            "instance": dict(self.instance),
            "horizon": self.horizon,
            "seeds": list(self.seeds),
            "master_seed": self.master_seed,
            "variant": self.variant,
            "estimator": self.estimator,
            "schedule": (None if self.schedule is None else dict(self.schedule)),
            "actions": (None if self.actions is None else list(self.actions)),
            "ratio_vertex": self.ratio_vertex,
            "anytime_bandit": self.anytime_bandit,
            "delta_conf": self.delta_conf,
            "log_stride": self.log_stride,
            "checkpoints": list(self.checkpoints),
            "oracle": self.oracle,
            "out": self.out,
        }

    def identity_mapping(self) -> Dict[str, Any]:
        """The experiment's identity: everything except where outputs land.

        Two runs with equal identity mappings produce byte-identical
        summaries; `out` only chooses the directory.
        """
        ident = self.to_mapping()
        del ident["out"]
        return ident

    def config_hash(self) -> str:
        canon = json.dumps(self.identity_mapping(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]

    def engine_config(self, instance: ProblemInstance) -> EngineConfig:
        sched = (
            Schedule(**self.schedule)
            if self.schedule is not None
            else schedule_for(instance, self.horizon, self.variant)
        )
        return EngineConfig(
            horizon=self.horizon,
            schedule=sched,
            variant=self.variant,
            estimator=self.estimator,
            actions=self.actions,
            ratio_vertex=self.ratio_vertex,
            anytime_bandit=self.anytime_bandit,
            log_stride=max(1, self.log_stride),
            checkpoints=self.checkpoints,
            delta_conf=self.delta_conf,
        )


def load_config(path: Path, overrides: Mapping[str, Any]) -> RunConfig:
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise SchemaError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("config must be a JSON object")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig.from_mapping(raw)
    # table paths resolve relative to the config file for reproducibility
    if cfg.instance.get("name") == "table" and "path" in cfg.instance:
        inst = dict(cfg.instance)
        p = Path(inst["path"])
        if not p.is_absolute():
            inst["path"] = str((path.parent / p).resolve())
        cfg = dataclasses.replace(cfg, instance=inst)
    return cfg


def seed_rng(master_seed: int, seed: int) -> np.random.Generator:
    """The run-level RNG contract: one independent stream per (master, seed)."""
    return np.random.default_rng([master_seed, seed])


# --- run execution -------------------------------------------------------------------


@dataclasses.dataclass
class RunResult:
    """One config executed over its seeds, plus the offline benchmark rates."""

    config: RunConfig
    summaries: List[Summary]
    opt_rate: Optional[float] = None
    static_rate: Optional[float] = None
    static_source: Optional[int] = None
    oracle_gap: Optional[float] = None
    pi_star: Optional[List[float]] = None
    lam_star: Optional[List[float]] = None
    wall_clock_s: float = 0.0

    def regret_final(self, summary: Summary) -> Optional[float]:
        if self.opt_rate is None:
            return None
        return self.config.horizon * self.opt_rate - summary.total_utility

    def regret_checkpoints(self, summary: Summary) -> Optional[List[Dict[str, float]]]:
        if self.opt_rate is None:
            return None
        return [
            {"t": ck.t, "regret": ck.t * self.opt_rate - ck.total_utility}
            for ck in summary.checkpoints
        ]

    def to_json_dict(self) -> Dict[str, Any]:
        """The deterministic payload for summaries.json (no wall clock)."""
        rows = []
        for seed, summary in zip(self.config.seeds, self.summaries):
            row: Dict[str, Any] = {"seed": seed}
            row.update(summary.to_dict())
            row["regret_final"] = self.regret_final(summary)
            row["regret_checkpoints"] = self.regret_checkpoints(summary)
            rows.append(row)
        totals = [s.total_utility for s in self.summaries]
        aggregate = {
            "mean_total_utility": float(np.mean(totals)) if totals else None,
            "mean_utility_rate": (
                float(np.mean(totals)) / self.config.horizon if totals else None
            ),
        }
        return {
            "config": self.config.identity_mapping(),
            "config_hash": self.config.config_hash(),
            "opt_rate": self.opt_rate,
            "static_rate": self.static_rate,
            "static_source": self.static_source,
            "oracle_gap": self.oracle_gap,
            "pi_star": self.pi_star,
            "lam_star": self.lam_star,
            "aggregate": aggregate,
            "summaries": rows,
        }


def _log_path(out_dir: Path, seed: int) -> Path:
    return out_dir / f"rounds_seed{seed:04d}.csv"


def _run_one_seed(
    cfg: RunConfig, instance: ProblemInstance, seed: int, out_dir: Optional[Path]
) -> Summary:
    rng = seed_rng(cfg.master_seed, seed)
    engine_cfg = cfg.engine_config(instance)
    if cfg.log_stride > 0 and out_dir is not None:
        with open(_log_path(out_dir, seed), "w") as sink:
            return run_episode(instance, engine_cfg, rng, sink=sink)
    return run_episode(instance, engine_cfg, rng)


def _worker(payload: Tuple[str, Optional[str], int]) -> Tuple[int, Summary]:
    """Pool worker: rebuilds everything from JSON so the task pickles cheaply."""
    cfg_json, out_dir, seed = payload
    cfg = RunConfig.from_mapping(json.loads(cfg_json))
    instance = build_instance(cfg.instance)
    return seed, _run_one_seed(cfg, instance, seed, None if out_dir is None else Path(out_dir))


def _solve_benchmarks(cfg: RunConfig, instance: ProblemInstance) -> Dict[str, Any]:
    """Offline rates, or an empty dict when the config opts out.

    'auto' skips instances without a closed-form or quadrature-friendly
    distribution (the noisy-attribute model needs Monte Carlo; run
    ``fairalloc oracle --mc-samples`` explicitly for those).
    """
    if cfg.oracle == "skip" or isinstance(instance, NoisyAttribute):
        return {}
    saddle = solve_opt(instance)
    static_rate, static_k = solve_static_opt(instance)
    return {
        "opt_rate": saddle.rate,
        "static_rate": static_rate,
        "static_source": static_k,
        "oracle_gap": saddle.gap,
        "pi_star": list(saddle.pi_star),
        "lam_star": list(np.atleast_1d(saddle.lam_star)),
    }


def execute_run(cfg: RunConfig, out_dir: Optional[Path], threads: int = 1) -> RunResult:
    """Run every seed (optionally in a process pool) and attach benchmarks."""
    instance = build_instance(cfg.instance)
    start = time.monotonic()
    by_seed: Dict[int, Summary] = {}
    if threads > 1 and len(cfg.seeds) > 1 and cfg.log_stride == 0:
        import multiprocessing as mp

        cfg_json = json.dumps(cfg.to_mapping())
        with mp.get_context("fork").Pool(threads) as pool:
            for seed, summary in pool.imap_unordered(
                _worker, [(cfg_json, None, s) for s in cfg.seeds]
            ):
                by_seed[seed] = summary
    else:
        # round logs stream from the main process; seeds are independent anyway
        for seed in cfg.seeds:
            by_seed[seed] = _run_one_seed(cfg, instance, seed, out_dir)
    summaries = [by_seed[s] for s in cfg.seeds]
    result = RunResult(config=cfg, summaries=summaries, **_solve_benchmarks(cfg, instance))
    result.wall_clock_s = time.monotonic() - start
    return result


def write_run_outputs(result: RunResult, out_dir: Path, threads: int) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summaries.json").write_text(
        json.dumps(result.to_json_dict(), sort_keys=True, indent=2) + "\n"
    )
    files = sorted(p.name for p in out_dir.iterdir() if p.name != "manifest.json")
    manifest = {
        "config_hash": result.config.config_hash(),
        "code_version": fairalloc.__version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "wall_clock_s": round(result.wall_clock_s, 3),
        "threads": threads,
        "files": files,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


# --- figure bundles ------------------------------------------------------------------


def _quartile_row(series: str, horizon: int, totals: Sequence[float]) -> str:
    arr = np.asarray(totals, dtype=float)
    return ",".join(
        [
            series,
            str(horizon),
            _fmt(arr.mean()),
            _fmt(np.percentile(arr, 25)),
            _fmt(np.percentile(arr, 75)),
        ]
    )


def _line_row(series: str, horizon: int, value: float) -> str:
    return ",".join([series, str(horizon), _fmt(value), _fmt(value), _fmt(value)])


def horizon_grid(t_max: int, points: int = 5, t_min: int = 1000) -> List[int]:
    """Log-spaced integer horizons from t_min to t_max, deduplicated."""
    if t_max < t_min:
        return [int(t_max)]
    raw = np.geomspace(t_min, t_max, points)
    grid = sorted({int(round(v)) for v in raw})
    return grid


def build_multi_arms_bundle(
    out_dir: Path,
    t_max: int = 100_000,
    n_seeds: int = 20,
    master_seed: int = 0,
    progress=None,
) -> Path:
    """Total utility vs horizon for the policy and its three comparators.

    Series: ``alg`` (adaptive purchasing + dual pricing), ``best_fixed``
    (the better of the two sources run alone, chosen per horizon),
    ``greedy`` (myopic baseline), and the two benchmark rate lines ``opt``
    and ``static_opt``.
    """
    instance = SymmetricTwoSource()
    saddle = solve_opt(instance)
    static_rate, _ = solve_static_opt(instance)
    grid = horizon_grid(t_max)
    totals: Dict[str, Dict[int, List[float]]] = {s: {} for s in MULTI_ARMS_SERIES}

    def run_pool(inst: ProblemInstance, horizon: int) -> List[float]:
        engine_cfg = EngineConfig(horizon=horizon, schedule=schedule_for(inst, horizon))
        return [
            run_episode(inst, engine_cfg, seed_rng(master_seed, seed)).total_utility
            for seed in range(n_seeds)
        ]

    for horizon in grid:
        if progress:
            progress(f"multi_arms: T={horizon}")
        totals["alg"][horizon] = run_pool(instance, horizon)
        fixed = [run_pool(restrict_to_source(instance, k), horizon) for k in (0, 1)]
        best = max(fixed, key=lambda xs: float(np.mean(xs)))
        totals["best_fixed"][horizon] = best
        totals["greedy"][horizon] = [
            run_greedy(instance, horizon, seed_rng(master_seed, seed)).total_utility
            for seed in range(n_seeds)
        ]
    lines = [MULTI_ARMS_HEADER]
    for series in ("alg", "best_fixed", "greedy"):
        for horizon in grid:
            lines.append(_quartile_row(series, horizon, totals[series][horizon]))
    for horizon in grid:
        lines.append(_line_row("opt", horizon, horizon * saddle.rate))
    for horizon in grid:
        lines.append(_line_row("static_opt", horizon, horizon * static_rate))
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle = out_dir / "multi_arms.csv"
    bundle.write_text("\n".join(lines) + "\n")
    meta = {
        "figure": "multi_arms",
        "instance": "symmetric_two_source",
        "n_seeds": n_seeds,
        "master_seed": master_seed,
        "horizons": grid,
        "opt_rate": saddle.rate,
        "static_rate": static_rate,
    }
    (out_dir / "multi_arms_meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return bundle


def build_sensitivity_bundle(
    out_dir: Path,
    rs: Sequence[float],
    ps: Sequence[float],
    trunc: float = 8.0,
    progress=None,
) -> Path:
    """Benchmark quantities on an (r, p) grid of the pair-purchase model."""
    if len(rs) == 0 or len(ps) == 0:
        raise SchemaError("sensitivity sweep needs non-empty r and p grids")
    rows = sensitivity_sweep(rs, ps, trunc=trunc)
    lines = [SENSITIVITY_HEADER]
    for row in rows:
        if progress:
            progress(f"sensitivity: r={row['r']} p={row['p']}")
        lines.append(
            ",".join(
                [
                    _fmt(row["r"]),
                    _fmt(row["p"]),
                    _fmt(row["rate"]),
                    _fmt(row["pi_star"]),
                    _fmt(row["lam_star"]),
                    _fmt(row["gap"]),
                    _fmt(row["p_pos_given_alloc"]),
                    _fmt(row["fairness_utility_ratio"]),
                    _fmt(row["info_cost_utility_ratio"]),
                    row["instance"],
                ]
            )
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle = out_dir / "sensitivity.csv"
    bundle.write_text("\n".join(lines) + "\n")
    return bundle


# --- subcommand plumbing -------------------------------------------------------------


def _resolve_threads(arg: Optional[int]) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get(_THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise SchemaError(f"{_THREADS_ENV} must be an integer, got {env!r}") from exc
    return 1


def _parse_seeds_flag(text: str) -> Any:
    if "," in text:
        return [int(s) for s in text.split(",") if s]
    return int(text)


def cmd_run(args: argparse.Namespace) -> int:
    overrides: Dict[str, Any] = {}
    if args.seeds is not None:
        overrides["seeds"] = _parse_seeds_flag(args.seeds)
    if args.T is not None:
        overrides["horizon"] = args.T
    if args.variant is not None:
        overrides["variant"] = args.variant
    if args.out is not None:
        overrides["out"] = args.out
    cfg = load_config(Path(args.config), overrides)
    threads = _resolve_threads(args.threads)
    out_dir = Path(cfg.out) if cfg.out else Path("runs") / cfg.config_hash()
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        result = execute_run(cfg, out_dir, threads)
    except InvariantViolation as exc:
        dump = out_dir / "invariant_dump.json"
        dump.write_text(
            json.dumps(
                {"error": str(exc), "context": exc.context, "config": cfg.to_mapping()},
                sort_keys=True,
                indent=2,
                default=str,
            )
            + "\n"
        )
        print(f"invariant violation: {exc}\ndump written to {dump}", file=sys.stderr)
        return EXIT_INVARIANT
    write_run_outputs(result, out_dir, threads)
    agg = result.to_json_dict()["aggregate"]
    print(
        f"{len(cfg.seeds)} seeds x T={cfg.horizon} [{cfg.variant}/{cfg.estimator}] "
        f"-> {out_dir}  mean_rate={agg['mean_utility_rate']:.6g}"
        + (f"  opt_rate={result.opt_rate:.6g}" if result.opt_rate is not None else "")
    )
    return EXIT_OK


def _parse_float_list(text: str, flag: str) -> List[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip() != ""]
    except ValueError as exc:
        raise SchemaError(f"{flag} must be a comma-separated float list, got {text!r}") from exc


def cmd_figure(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    progress = (lambda msg: print(msg, file=sys.stderr)) if not args.quiet else None
    if args.name == "multi_arms":
        bundle = build_multi_arms_bundle(
            out_dir,
            t_max=args.T,
            n_seeds=args.seeds,
            master_seed=args.master_seed,
            progress=progress,
        )
    else:
        rs = _parse_float_list(args.rs, "--rs")
        ps = _parse_float_list(args.ps, "--ps")
        bundle = build_sensitivity_bundle(out_dir, rs, ps, trunc=args.trunc, progress=progress)
    print(bundle)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    from fairalloc import acceptance

    wanted = None
    if args.criteria:
        wanted = [c.strip().upper() for c in args.criteria.split(",") if c.strip()]
    results = acceptance.run_criteria(wanted, progress=lambda m: print(m, file=sys.stderr))
    width = max(len(r.name) for r in results)
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{res.name:<{width}}  {status}  {res.detail}  ({res.runtime_s:.1f}s)")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return EXIT_FAIL
    print("all criteria passed")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    cfg = load_config(Path(args.config), {})
    instance = build_instance(cfg.instance)
    saddle = solve_opt(instance, mc_samples=args.mc_samples, seed=args.seed)
    static_rate, static_k = solve_static_opt(instance, mc_samples=args.mc_samples, seed=args.seed)
    print(
        json.dumps(
            {
                "opt_rate": saddle.rate,
                "pi_star": list(saddle.pi_star),
                "lam_star": list(np.atleast_1d(saddle.lam_star)),
                "gap": saddle.gap,
                "static_rate": static_rate,
                "static_source": static_k,
            },
            sort_keys=True,
            indent=2,
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairalloc",
        description="Seeded allocation experiments, figure bundles, and the acceptance gate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a config over its seed list")
    run_p.add_argument("--config", required=True, help="JSON config path")
    run_p.add_argument("--seeds", help="override: count or comma list of seed indices")
    run_p.add_argument("--T", type=int, help="override: horizon")
    run_p.add_argument("--variant", help="override: algorithm variant")
    run_p.add_argument("--out", help="override: output directory")
    run_p.add_argument("--threads", type=int, help=f"seed-level workers (or ${_THREADS_ENV})")
    run_p.set_defaults(func=cmd_run)

    fig_p = sub.add_parser("figure", help="build a plotting bundle")
    fig_p.add_argument("name", choices=["multi_arms", "sensitivity"])
    fig_p.add_argument("--out", required=True, help="bundle output directory")
    fig_p.add_argument("--T", type=int, default=100_000, help="largest horizon (multi_arms)")
    fig_p.add_argument("--seeds", type=int, default=20, help="seeds per horizon (multi_arms)")
    fig_p.add_argument("--master-seed", type=int, default=0)
    fig_p.add_argument("--rs", default="0,0.5,1,2,5", help="penalty scales (sensitivity)")
    fig_p.add_argument("--ps", default="0,0.1,0.3,1", help="source prices (sensitivity)")
    fig_p.add_argument("--trunc", type=float, default=8.0, help="utility truncation (sensitivity)")
    fig_p.add_argument("--quiet", action="store_true", help="suppress progress lines")
    fig_p.set_defaults(func=cmd_figure)

    ver_p = sub.add_parser("verify", help="run the acceptance battery")
    ver_p.add_argument("--criteria", help="comma list, e.g. A1,A5 (default: all)")
    ver_p.set_defaults(func=cmd_verify)

    orc_p = sub.add_parser("oracle", help="solve the offline benchmark for a config")
    orc_p.add_argument("--config", required=True, help="JSON config path")
    orc_p.add_argument("--mc-samples", type=int, help="Monte Carlo sample count")
    orc_p.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")
    orc_p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except NumericalError as exc:
        print(f"numeric certification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
