"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line (collected again in the
terminal summary) and fails when its criterion is not met.
"""

import dataclasses
import math
from fractions import Fraction

import numpy as np

from advlsh import harness
from advlsh.adversary import AttackConfig, fast_walk
from advlsh.cli import main
from advlsh.datasets import Dataset, gen_zero
from advlsh.harness import ExperimentSpec
from advlsh.hamming import child_rng, sample_at_distance
from advlsh.index import build_index, derive_params, sample_hash, support_size
from advlsh.oracles import exact_collision_prob, expected_collisions, expected_support
from bruteforce import enumerate_collision_prob, first_scan_answer, scan_query

SEED = 20240


def combined(*sems):
    return math.sqrt(sum(s * s for s in sems))


def test_c1_oracle_equivalence(acceptance):
    mismatches = cases = 0
    for d in range(1, 11):
        for s in range(d + 1):
            for m in range(d + 1):
                cases += 1
                exact = Fraction(math.comb(d - s, m), math.comb(d, m))
                enum = enumerate_collision_prob(d, s, m)
                if enum != exact or exact_collision_prob(d, s, m) != float(enum):
                    mismatches += 1
    acceptance("C1 oracle equivalence", mismatches == 0, f"{mismatches} mismatches in {cases} (d, s, m) cases")


def test_c2_index_matches_brute_force(acceptance):
    rng = child_rng(SEED, 2)
    disagreements = queries = 0
    for _ in range(200):
        d = int(rng.integers(4, 33))
        n = int(rng.integers(2, 51))
        c = float(rng.choice([1.5, 2.0, 3.0]))
        r = int(rng.integers(1, max(2, int(d / c))))
        params = derive_params(n, d, r, c, float(rng.uniform(0.3, 4.0)))
        params = dataclasses.replace(params, L=min(params.L, 50))
        bits = (rng.random((n, d)) < rng.uniform(0.05, 0.5)).astype(np.uint8)
        index = build_index(Dataset(bits), params, rng)
        for _ in range(5):
            base = bits[int(rng.integers(n))]
            q = sample_at_distance(base, int(rng.integers(0, min(d, 2 * params.far_radius) + 1)), rng)
            queries += 1
            got = index.query(q)
            hits = scan_query(index, q)
            if (got is None) != (not hits) or got != first_scan_answer(index, q):
                disagreements += 1
    acceptance("C2 index vs brute force", disagreements == 0,
               f"{disagreements} disagreements over {queries} queries on 200 instances")


def test_c3_collision_expectation(acceptance):
    params = derive_params(1000, 300, 30, 2.0, 4.0)
    rng = child_rng(SEED, 3)
    data = gen_zero(1000, 300)
    index = build_index(data, params, rng)
    z = data[0]
    supports = index.supports()
    parts, ok = [], True
    for m in (10, 20, 30):
        sizes = np.array([len(index.coll_set(sample_at_distance(z, m, rng), z)) for _ in range(10_000)])
        expect = expected_collisions(params, m, supports)
        sem = sizes.std(ddof=1) / math.sqrt(sizes.size)
        good = abs(sizes.mean() - expect) <= 3 * sem
        ok &= good
        parts.append(f"m={m}: {sizes.mean():.3f} vs {expect:.3f} (3σ={3 * sem:.3f})")
    acceptance("C3 collision expectation", ok, "; ".join(parts))


def test_c4_support_statistics(acceptance):
    params = derive_params(1000, 300, 30, 2.0, 4.0)
    rng = child_rng(SEED, 4)
    sizes = [support_size(sample_hash(params, rng)) for _ in range(10_000)]
    mean = float(np.mean(sizes))
    mean_ok = abs(mean - 29.498) <= 0.05 and abs(expected_support(300, 31) - 29.498) < 1e-3
    bound = harness.check_support_bound(1000, SEED)
    acceptance("C4 support statistics", mean_ok and bound.passed,
               f"mean support {mean:.4f} (target 29.498 ± 0.05, formula {expected_support(300, 31):.4f}); "
               f"bound violations {bound.measured} {bound.bound} {bound.detail}")


def test_c5_success_trend_in_start_distance(acceptance):
    starts = [0, 8, 15, 23, 30]
    spec = ExperimentSpec(name="c5", dataset={"kind": "zero"}, grid={"start_distance": starts},
                          trials=500, seed=SEED + 5)
    rows = harness.run_sweep(spec).rows
    rates = [row["success_rate"] for row in rows]
    sems = [row["sem"] for row in rows]
    violations = sum(rates[i + 1] - rates[i] > 2 * combined(sems[i], sems[i + 1])
                     for i in range(len(starts) - 1))
    gap = rates[0] - rates[-1]
    gap_ok = gap >= 5 * combined(sems[0], sems[-1])
    table = ", ".join(f"{s}:{r:.3f}±{e:.3f}" for s, r, e in zip(starts, rates, sems))
    acceptance("C5 success vs start distance", violations == 0 and gap_ok,
               f"{table}; {violations} adjacent violations beyond 2·SEM; "
               f"start 0 minus start 30 = {gap:.3f} (needs ≥ {5 * combined(sems[0], sems[-1]):.3f})")


def test_c6_query_budget_scaling(acceptance):
    spec = ExperimentSpec(name="c6", dataset={"kind": "zero"}, grid={"algo": ["fast", "simple"]},
                          trials=500, seed=SEED + 6)
    _, grouped = harness.run_trials(spec, "attack")
    fast = np.array([r.lsh_queries for r in grouped[0]], dtype=float)
    simple = np.array([r.lsh_queries for r in grouped[1]], dtype=float)
    diff = simple - fast
    diff_sem = diff.std(ddof=1) / math.sqrt(diff.size)
    paired_ok = diff.mean() > 3 * diff_sem

    spec_c = ExperimentSpec(name="c6c", dataset={"kind": "zero"}, grid={"c": [2.0, 4.0, 8.0]},
                            trials=500, seed=SEED + 16)
    means = [row["mean_queries"] for row in harness.run_sweep(spec_c).rows]
    ratios = [means[1] / means[0], means[2] / means[1]]
    scaling_ok = all(x <= 1.6 for x in ratios)
    acceptance("C6 query budget scaling", paired_ok and scaling_ok,
               f"fast {fast.mean():.1f} vs simple {simple.mean():.1f} "
               f"(paired diff {diff.mean():.1f}, 3σ={3 * diff_sem:.1f}); "
               f"fast means over c=2,4,8: {', '.join(f'{m:.1f}' for m in means)} "
               f"ratios {ratios[0]:.3f}, {ratios[1]:.3f} (≤ 1.6)")


def test_c7_adaptive_vs_random(acceptance):
    lams = [1, 2, 4, 8]
    spec = ExperimentSpec(name="c7", dataset={"kind": "random"}, grid={"lam": lams},
                          trials=200, seed=SEED + 7)
    rows = harness.compare_adaptive_random(spec).rows
    ratios = [row["ratio"] for row in rows]
    sems = [row["ratio_sem"] for row in rows]
    at4 = ratios[lams.index(4)]
    speedup_ok = at4 - 3 * sems[lams.index(4)] > 1
    trend_ok = all(ratios[i + 1] >= ratios[i] - 2 * combined(sems[i], sems[i + 1])
                   for i in range(len(lams) - 1))
    table = ", ".join(f"λ={l}:{r:.3f}±{e:.3f}" for l, r, e in zip(lams, ratios, sems))
    acceptance("C7 adaptive vs random", speedup_ok and trend_ok,
               f"random/adaptive query ratio {table}; λ=4 beats 1 at 3σ: {speedup_ok}; "
               f"monotone within 2·SEM: {trend_ok}")


def test_c8_lemma_verification(acceptance, capsys):
    code = main(["verify", "--seed", str(SEED)])
    out = capsys.readouterr().out.strip().splitlines()
    acceptance("C8 lemma verification", code == 0,
               f"verify exit code {code}; " + " | ".join(out))


def test_c9_white_box_descent(acceptance):
    params = derive_params(1000, 300, 30, 2.0, 4.0)
    data = gen_zero(1000, 300)
    z = data[0]
    successes = violations = runs = 0
    while successes < 100 and runs < 10_000:
        rng = child_rng(SEED, 9, runs)
        runs += 1
        index = build_index(data, params, rng)
        out = fast_walk(index, z, AttackConfig(trace=True), rng)
        if not out.success:
            continue
        successes += 1
        sizes = [len(index.coll_set(step.q, z)) for step in out.trace]
        sizes.append(len(index.coll_set(out.query, z)))
        violations += sum(b >= a for a, b in zip(sizes, sizes[1:]))
    acceptance("C9 white-box descent", successes == 100 and violations == 0,
               f"{violations} non-decreasing steps over {successes} successful runs ({runs} attempts)")


def _defense_row(lam, defense, seed):
    spec = ExperimentSpec(name="c10", dataset={"kind": "random"}, base={"lam": lam},
                          trials=300, seed=seed, defense=defense)
    return harness.defense_eval(spec).rows[0]


def test_c10_defense_trends(acceptance):
    plain8 = _defense_row(8, {"kind": "none"}, SEED + 10)
    res = _defense_row(8, {"kind": "resample", "copies": 8, "query_samples": 2}, SEED + 10)
    resample_ok = res["persist50"] <= plain8["persist50"] + 3 * combined(res["persist50_sem"],
                                                                       plain8["persist50_sem"])
    plain16 = _defense_row(16, {"kind": "none"}, SEED + 11)
    dp = _defense_row(16, {"kind": "dp", "copies": 16, "query_samples": 16}, SEED + 11)
    report_ok = dp["success_rate"] - plain16["success_rate"] > 3 * combined(dp["sem"], plain16["sem"])
    persist_ok = dp["persist10"] < 0.5
    acceptance("C10 defense trends", resample_ok and report_ok and persist_ok,
               f"budget 8: ≥50% persistence resample {res['persist50']:.3f} "
               f"({res['reported']} reports) vs plain {plain8['persist50']:.3f} ({plain8['reported']} reports); "
               f"budget 16: report rate dp {dp['success_rate']:.3f} vs plain {plain16['success_rate']:.3f}, "
               f"dp ≥10% persistence {dp['persist10']:.3f} (< 0.5)")


def test_c11_determinism(acceptance):
    spec = ExperimentSpec(name="c11", dataset={"kind": "random"},
                          grid={"lam": [2, 4], "start_distance": [0, 15]}, trials=40, seed=SEED + 11)
    first = harness.run_sweep(spec, workers=1).to_csv()
    again = harness.run_sweep(spec, workers=1).to_csv()
    parallel = harness.run_sweep(spec, workers=3).to_csv()
    dspec = dataclasses.replace(spec, grid={"lam": [2]}, trials=10,
                                defense={"kind": "dp", "copies": 2, "query_samples": 2})
    d1 = harness.defense_eval(dspec, workers=1).to_csv()
    d2 = harness.defense_eval(dspec, workers=2).to_csv()
    ok = first == again == parallel and d1 == d2
    acceptance("C11 determinism", ok,
               f"sweep CSV identical across reruns and 1/3 workers: {first == again == parallel}; "
               f"defense CSV identical across 1/2 workers: {d1 == d2}")
