"""Experiment engine: trials, parameter sweeps, comparisons and lemma checks.

A sweep is described by an :class:`ExperimentSpec` (usually loaded from a
YAML file).  Every trial draws its randomness from streams derived from
``(seed, trial_index, purpose)`` only, so all grid points of a sweep see the
same datasets and hash draws for the same trial index (paired comparisons),
and results do not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np
import yaml

from . import oracles
from .adversary import (
    AttackConfig,
    find_isolated_origin,
    random_baseline,
    run_walk,
    walk_until_success,
)
from .datasets import Dataset, gen_random, generate, load_points
from .defenses import DEFAULT_ALPHA, build_dp, build_resampled, sample_two_sided_geometric
from .hamming import child_rng, child_seed
from .index import build_index, derive_params, sample_hash, support_size

log = logging.getLogger(__name__)

PARAM_KEYS = ("n", "d", "r", "c", "lam")
ATTACK_KEYS = ("start_distance", "target_distance", "algo", "t")
FRACTION_KEYS = ("r_fraction", "start_fraction", "target_fraction")
GRID_KEYS = PARAM_KEYS + ATTACK_KEYS + FRACTION_KEYS
SUMMARY_COLUMNS = ("success_rate", "sem", "mean_queries", "sem_queries", "trials")
DEFAULT_BASE = {"n": 1000, "d": 300, "r": 30, "c": 2.0, "lam": 4.0, "algo": "fast"}

# stream purposes for child_rng(seed, trial, purpose)
_DATA, _INDEX, _ATTACK, _REQUERY = 0, 1, 2, 3


@dataclass
class ExperimentSpec:
    """One sweep: a dataset, a parameter grid and how to run each trial.

    ``grid_mode`` is ``product`` (cartesian product of the grid lists) or
    ``individual`` (vary one key at a time around ``base``).
    """

    name: str = "experiment"
    dataset: dict = field(default_factory=lambda: {"kind": "zero"})
    base: dict = field(default_factory=lambda: dict(DEFAULT_BASE))
    grid: dict = field(default_factory=dict)
    grid_mode: str = "product"
    trials: int = 1000
    seed: int = 0
    origin: str = "isolated"
    defense: dict = field(default_factory=lambda: {"kind": "none"})
    restarts: int = 1000
    max_queries: int = 1_000_000
    requeries: int = 100
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        unknown = set(self.grid) - set(GRID_KEYS)
        if unknown:
            raise ValueError(f"unknown grid keys: {sorted(unknown)}")
        if self.grid_mode not in ("product", "individual"):
            raise ValueError("grid_mode must be 'product' or 'individual'")
        if self.origin not in ("isolated", "first", "random"):
            raise ValueError("origin must be 'isolated', 'first' or 'random'")
        if self.defense.get("kind", "none") not in ("none", "resample", "dp"):
            raise ValueError("defense kind must be none, resample or dp")
        base = dict(DEFAULT_BASE)
        base.update(self.base)
        self.base = base

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_yaml(cls, path) -> "ExperimentSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh) or {})

    def grid_columns(self) -> list[str]:
        return list(self.grid)

    def points(self) -> list[dict]:
        """Grid points, each a dict of the grid keys only."""
        keys = list(self.grid)
        if not keys:
            return [{}]
        if self.grid_mode == "product":
            return [dict(zip(keys, vals)) for vals in itertools.product(*(self.grid[k] for k in keys))]
        out = []
        for key in keys:
            for val in self.grid[key]:
                point = {k: self.base.get(k, "") for k in keys}
                point[key] = val
                out.append(point)
        return out

    def settings(self, point: dict) -> dict:
        merged = dict(self.base)
        merged.update({k: v for k, v in point.items() if v != ""})
        return merged


@dataclass
class TrialResult:
    point: dict
    trial: int
    seed: int
    success: bool = False
    lsh_queries: int = 0
    wall_time_ms: int = 0
    error: str = ""
    extra: dict = field(default_factory=dict)


@dataclass
class SweepResult:
    columns: list[str]
    rows: list[dict]
    name: str = "experiment"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(row.get(c, "")) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"name": self.name, "columns": self.columns, "rows": self.rows},
                          indent=2, default=_json_default)

    def write(self, path, json_path=None) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())
        if json_path:
            with open(json_path, "w", encoding="utf-8") as fh:
                fh.write(self.to_json())


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.6g}"
    return str(value)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(type(obj).__name__)


def mean_sem(values) -> tuple[float, float]:
    """Mean and standard error of the mean (sample std / sqrt(count))."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


# ---------------------------------------------------------------- trials


@lru_cache(maxsize=8)
def _file_dataset(path: str, limit: int | None) -> Dataset:
    return load_points(path, limit=limit)


def resolve_point(spec: ExperimentSpec, point: dict):
    """LSH parameters and attack config for one grid point."""
    s = spec.settings(point)
    ds = spec.dataset
    if ds.get("kind") == "file":
        data = _file_dataset(ds["path"], ds.get("limit", 10_000))
        s["n"], s["d"] = data.n, data.d
    if "r_fraction" in s and "r" not in point:
        s["r"] = max(1, round(float(s["r_fraction"]) * s["d"]))
    params = derive_params(int(s["n"]), int(s["d"]), int(s["r"]), float(s["c"]), float(s["lam"]))
    start = s.get("start_distance")
    if "start_fraction" in s and "start_distance" not in point:
        start = round(float(s["start_fraction"]) * params.r)
    target = s.get("target_distance")
    if "target_fraction" in s and "target_distance" not in point:
        target = max(1, math.floor(float(s["target_fraction"]) * params.cr + 1e-9))
    config = AttackConfig(
        algo=s.get("algo", "fast"),
        t=s.get("t"),
        start_distance=None if start is None else int(start),
        target_distance=None if target is None else int(target),
        max_outer_iterations=s.get("max_outer_iterations"),
    )
    config.resolve(params)
    return params, config


def _dataset_for(spec: ExperimentSpec, params, trial: int) -> Dataset:
    ds = spec.dataset
    if ds.get("kind") == "file":
        return _file_dataset(ds["path"], ds.get("limit", 10_000))
    rng = child_rng(spec.seed, trial, _DATA)
    return generate(ds.get("kind", "zero"), params.n, params.d, rng, p=ds.get("p", 1 / 15))


def _origin(spec: ExperimentSpec, dataset: Dataset, trial: int):
    if spec.origin == "first" or spec.dataset.get("kind") == "file":
        return dataset[0]
    if spec.origin == "random":
        return dataset[int(child_rng(spec.seed, trial, _DATA, 1).integers(dataset.n))]
    return find_isolated_origin(dataset)[0]


def _structure(spec: ExperimentSpec, dataset, params, trial: int):
    rng = child_rng(spec.seed, trial, _INDEX)
    defense = spec.defense
    kind = defense.get("kind", "none")
    if kind == "none":
        return build_index(dataset, params, rng)
    copies = int(defense.get("copies", round(params.lam)))
    qs = int(defense.get("query_samples", 1))
    if kind == "resample":
        return build_resampled(dataset, params, copies, qs, rng)
    return build_dp(dataset, params, copies, qs, rng, float(defense.get("alpha", DEFAULT_ALPHA)))


def run_trial(spec: ExperimentSpec, point: dict, trial: int, mode: str = "attack") -> TrialResult:
    """Run one trial of ``mode`` (``attack``, ``compare`` or ``defense``)."""
    result = TrialResult(point=point, trial=trial, seed=child_seed(spec.seed, trial))
    started = time.perf_counter()
    try:
        params, config = resolve_point(spec, point)
        dataset = _dataset_for(spec, params, trial)
        z = _origin(spec, dataset, trial)
        index = _structure(spec, dataset, params, trial)
        rng = child_rng(spec.seed, trial, _ATTACK)
        if mode == "compare":
            adaptive = walk_until_success(index, z, config, rng, max_attempts=spec.restarts)
            baseline = random_baseline(index, z, params.r, rng, spec.max_queries)
            result.success = adaptive.success
            result.lsh_queries = adaptive.lsh_queries_used
            result.extra = {"random_success": baseline.success,
                            "random_queries": baseline.lsh_queries_used}
        else:
            outcome = run_walk(index, z, config, rng)
            result.success = outcome.success
            result.lsh_queries = outcome.lsh_queries_used
            if mode == "defense" and outcome.success:
                requery_rng = child_rng(spec.seed, trial, _REQUERY)
                misses = 0
                for _ in range(spec.requeries):
                    pid = (index.query(outcome.query, requery_rng)
                           if hasattr(index, "copies") else index.query(outcome.query))
                    misses += pid is None
                result.extra = {"miss_fraction": misses / spec.requeries}
    except ValueError as exc:
        result.error = str(exc)
    result.wall_time_ms = int((time.perf_counter() - started) * 1000)
    return result


def _run_task(args):
    spec, gi, point, trial, mode = args
    return gi, run_trial(spec, point, trial, mode)


def run_trials(spec: ExperimentSpec, mode: str = "attack", workers: int | None = None):
    """All trials of all grid points, grouped per grid point in trial order."""
    points = spec.points()
    tasks = [(spec, gi, p, t, mode) for gi, p in enumerate(points) for t in range(spec.trials)]
    workers = spec.workers if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        done = [_run_task(t) for t in tasks]
    grouped: list[list[TrialResult]] = [[] for _ in points]
    for gi, res in sorted(done, key=lambda x: (x[0], x[1].trial)):
        grouped[gi].append(res)
    return points, grouped


def _summary(point: dict, results: list[TrialResult]) -> dict:
    ok = [r for r in results if not r.error]
    row = dict(point)
    if not ok:
        row.update(success_rate=math.nan, sem=math.nan, mean_queries=math.nan,
                   sem_queries=math.nan, trials=0)
        row["error"] = results[0].error if results else "no trials"
        log.warning("grid point %s failed: %s", point, row["error"])
        return row
    rate, sem = mean_sem([r.success for r in ok])
    mq, sq = mean_sem([r.lsh_queries for r in ok])
    row.update(success_rate=rate, sem=sem, mean_queries=mq, sem_queries=sq, trials=len(ok))
    return row


def run_sweep(spec: ExperimentSpec, workers: int | None = None) -> SweepResult:
    points, grouped = run_trials(spec, "attack", workers)
    rows = [_summary(p, res) for p, res in zip(points, grouped)]
    return SweepResult(spec.grid_columns() + list(SUMMARY_COLUMNS), rows, spec.name)


def compare_adaptive_random(spec: ExperimentSpec, workers: int | None = None) -> SweepResult:
    """Queries until the first false negative: restarted fast walk vs random sampling."""
    points, grouped = run_trials(spec, "compare", workers)
    rows = []
    for p, res in zip(points, grouped):
        row = _summary(p, res)
        ok = [r for r in res if not r.error]
        if ok:
            rs, rs_sem = mean_sem([r.extra["random_success"] for r in ok])
            rq, rq_sem = mean_sem([r.extra["random_queries"] for r in ok])
            aq, aq_sem = row["mean_queries"], row["sem_queries"]
            ratio = rq / aq if aq > 0 else math.nan
            ratio_sem = ratio * math.hypot(rq_sem / rq if rq else 0.0, aq_sem / aq if aq else 0.0)
            row.update(random_success_rate=rs, random_mean_queries=rq,
                       random_sem_queries=rq_sem, ratio=ratio, ratio_sem=ratio_sem)
        rows.append(row)
    extra = ["random_success_rate", "random_mean_queries", "random_sem_queries", "ratio", "ratio_sem"]
    return SweepResult(spec.grid_columns() + list(SUMMARY_COLUMNS) + extra, rows, spec.name)


PERSISTENCE_LEVELS = (0.9, 0.5, 0.1)


def defense_eval(spec: ExperimentSpec, workers: int | None = None) -> SweepResult:
    """Report rate plus how often reported queries stay unanswered on re-query.

    ``persist90`` is the fraction of reported queries that got no answer in
    at least 90% of the re-queries (likewise 50 and 10); ``nan`` when the
    adversary reported nothing.
    """
    points, grouped = run_trials(spec, "defense", workers)
    rows = []
    for p, res in zip(points, grouped):
        row = _summary(p, res)
        reported = [r for r in res if not r.error and r.success]
        row["reported"] = len(reported)
        for level in PERSISTENCE_LEVELS:
            tag = f"persist{round(level * 100)}"
            frac, frac_sem = mean_sem([r.extra["miss_fraction"] >= level - 1e-12 for r in reported])
            row[tag], row[tag + "_sem"] = frac, frac_sem
        rows.append(row)
    extra = ["reported"] + [f"persist{round(l * 100)}{s}" for l in PERSISTENCE_LEVELS for s in ("", "_sem")]
    return SweepResult(spec.grid_columns() + list(SUMMARY_COLUMNS) + extra, rows, spec.name)


# ---------------------------------------------------------------- lemma checks


@dataclass
class Check:
    name: str
    passed: bool
    measured: Any
    bound: Any
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured={self.measured} bound={self.bound} {self.detail}".rstrip()


def k_bounds_grid() -> list:
    """100 parameter tuples with ``cr/d <= 1/5`` and ``n > e``."""
    out = []
    for n in (10, 100, 1000, 10_000, 100_000):
        for d in (100, 300, 1000, 3000):
            for cr_frac, c in ((0.2, 2.0), (0.15, 1.5), (0.1, 2.0), (0.05, 4.0), (0.02, 2.0)):
                r = max(1, round(cr_frac * d / c))
                if c * r <= d / 5:
                    out.append(derive_params(n, d, r, c, 4.0))
    return out[:100]


def check_k_bounds() -> Check:
    grid = k_bounds_grid()
    ok = sum(oracles.k_bounds_hold(p) for p in grid)
    return Check("k bounds", ok == len(grid) == 100, f"{ok}/{len(grid)}", "100/100")


def check_support_bound(builds: int = 1000, seed: int = 0) -> Check:
    params = derive_params(1000, 300, 30, 2.0, 4.0)
    bound = oracles.support_lower_bound(params)
    rng = child_rng(seed, 10)
    violations = 0
    for _ in range(builds):
        if any(support_size(sample_hash(params, rng)) < bound for _ in range(params.L)):
            violations += 1
    p = 1 / params.n
    limit = p + 3 * math.sqrt(p * (1 - p) / builds)
    rate = violations / builds
    return Check("support lower bound", rate <= limit, f"{rate:.4f}", f"<= {limit:.4f}",
                 f"(support bound {bound:.2f}, {builds} builds)")


def near_coll_params():
    """Smallest-scale tuple found where the near-collision lemma applies."""
    return derive_params(10_000, 36_000, 271, 9.0, 1.0)


def check_near_coll(samples: int = 200, seed: int = 0) -> Check:
    params = near_coll_params()
    if not oracles.near_coll_regime(params):
        return Check("near collision expectation", False, "out of regime", "in regime")
    t = oracles.walk_offset(params.lam)
    m = params.r - math.ceil(t)
    bound = math.e**2 * (params.lam + 1)
    rng = child_rng(seed, 11)
    worst = 0.0
    for _ in range(samples):
        supports = [support_size(sample_hash(params, rng)) for _ in range(params.L)]
        worst = max(worst, oracles.expected_collisions(params, m, supports))
    return Check("near collision expectation", worst <= bound, f"{worst:.3f}", f"<= {bound:.3f}",
                 f"(n={params.n}, d={params.d}, r={params.r}, c={params.c:g}, m={m})")


def check_far_coll() -> Check:
    """Exact far-collision probability against its closed-form bound."""
    params = derive_params(10**17, 3000, 100, 4.0, 1.0)
    d, r, k, cr = params.d, params.r, params.k, params.far_radius
    s = math.ceil(k / 2)
    bound = (1 - k / (2 * d)) ** ((params.c - 1) * r)
    worst = 0.0
    for dist_q in range(r + 1):
        # q' flips cr - dist_q of the d - dist_q coordinates where q agrees with z
        worst = max(worst, oracles.exact_collision_prob(d - dist_q, s, cr - dist_q))
    cap = params.n ** (-(params.c - 1) / (4 * params.c))
    return Check("far collision probability", worst <= bound <= cap, f"{worst:.3e}",
                 f"<= {bound:.3e} <= {cap:.3e}")


def check_random_separation(reps: int = 100, seed: int = 0) -> Check:
    n, d = 100, 256
    good = 0
    for rep in range(reps):
        data = gen_random(n, d, child_rng(seed, 12, rep))
        dist = np.bitwise_count(data.packed[:, None, :] ^ data.packed[None, :, :]).sum(axis=-1)
        np.fill_diagonal(dist, d)
        good += int(dist.min() >= d // 4)
    need = reps - reps // 100
    return Check("random point separation", good >= need, f"{good}/{reps}", f">= {need}/{reps}")


def check_geometric_pmf(samples: int = 100_000, seed: int = 0) -> Check:
    alpha = DEFAULT_ALPHA
    z = sample_two_sided_geometric(alpha, child_rng(seed, 13), size=samples)
    freq = float(np.mean(z == 0))
    expected = (1 - alpha) / (1 + alpha)
    return Check("geometric noise P[Z=0]", abs(freq - expected) <= 0.005, f"{freq:.4f}",
                 f"{expected:.4f} +- 0.005")


def verify_lemmas(seed: int = 0, quick: bool = False) -> list[Check]:
    builds = 200 if quick else 1000
    return [
        check_k_bounds(),
        check_support_bound(builds, seed),
        check_near_coll(50 if quick else 200, seed),
        check_far_coll(),
        check_random_separation(100, seed),
        check_geometric_pmf(100_000, seed),
    ]

