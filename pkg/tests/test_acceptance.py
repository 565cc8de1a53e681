"""Acceptance suite.  Each criterion prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py``.
"""

import contextlib
import filecmp
import io
from pathlib import Path
import sys
import tempfile
import time

import numpy as np
import pytest

from quadmap import (
    EncodedInnovation,
    FormatError,
    OccupancyGrid,
    clip_decode,
    delta_distortion,
    delta_distortion_quadratic,
    deserialize_payload,
    encoder_distortion,
    root_tree,
    serialize_payload,
    solve_branch_and_bound,
    solve_bruteforce,
    solve_budgeted_tree,
    step,
)
from quadmap.cli import main as cli_main
from quadmap.config import STATIC_SCHEDULE_PCT
from quadmap.encoder import objective
from quadmap.pipeline import BandwidthSchedule, run, start_session
from quadmap.quadtree import TreeTopology, enumerate_valid, n_interior
from quadmap.sim import amoeba_scenario, dynamic_sequence, random_map, static_sequence

SEED = 12345
# every StepRecord produced by the criteria below, for the bound check
_RECORDS = []


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({detail})"
    print(line, flush=True)
    return ok


def _innovations(rng, depth, count):
    side = 1 << depth
    return [rng.uniform(-1.0, 1.0, (side, side)) for _ in range(count)]


def criterion_1():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    topologies = enumerate_valid(2)
    worst = 0.0
    for xi in _innovations(rng, 2, 200):
        delta = delta_distortion(xi)
        base = encoder_distortion(xi, root_tree(2)) ** 2
        for t in topologies:
            lhs = encoder_distortion(xi, t) ** 2
            worst = max(worst, abs(lhs - base - objective(delta, t)) / max(lhs, base))
    elapsed = time.perf_counter() - t0
    ok = len(topologies) == 17 and worst <= 1e-9 and elapsed < 5
    return report(1, "decomposition identity", ok,
                  f"200 maps x {len(topologies)} topologies, max rel err {worst:.2e}, {elapsed:.2f}s")


def criterion_2():
    rng = np.random.default_rng(SEED + 2)
    t0 = time.perf_counter()
    dp_gap = bnb_gap = 0.0
    over = 0
    for xi in _innovations(rng, 2, 100):
        delta = delta_distortion(xi)
        for budget in range(1, 17):
            ref = objective(delta, solve_bruteforce(xi, budget))
            dp = solve_budgeted_tree(xi, budget)
            bnb = solve_branch_and_bound(xi, budget)
            over += (3 * dp.n_expanded + 1 > budget) + (3 * bnb.n_expanded + 1 > budget)
            dp_gap = max(dp_gap, abs(objective(delta, dp) - ref))
            bnb_gap = max(bnb_gap, abs(objective(delta, bnb) - ref))
    elapsed = time.perf_counter() - t0
    ok = dp_gap <= 1e-12 and bnb_gap <= 1e-12 and over == 0 and elapsed < 30
    return report(2, "solver exactness vs brute force", ok,
                  f"dp gap {dp_gap:.1e}, bnb gap {bnb_gap:.1e}, {elapsed:.2f}s")


def criterion_3():
    rng = np.random.default_rng(SEED + 3)
    n = 128 * 128
    xhat = rng.random(n)
    z = rng.uniform(-1.0, 1.0, n)
    # a third of the pairs are forced feasible to exercise pass-through
    feas = rng.random(n) < 1 / 3
    z[feas] = rng.uniform(-xhat[feas], 1.0 - xhat[feas])
    v = clip_decode(z.reshape(128, 128), xhat.reshape(128, 128)).values.ravel()
    violations = 0
    for k in range(n):
        lo, hi = -xhat[k], 1.0 - xhat[k]
        w = np.append(np.arange(lo, hi, 1e-3), hi)
        if abs(z[k] - v[k]) > np.min(np.abs(z[k] - w)):
            violations += 1
    inside = (z >= -xhat) & (z <= 1.0 - xhat)
    passthrough = bool(np.array_equal(v[inside], z[inside]))
    ok = violations == 0 and passthrough
    return report(3, "clipping decoder optimality", ok,
                  f"{n} pairs, {violations} violations, {int(inside.sum())} exact pass-throughs")


def criterion_5():
    rng = np.random.default_rng(SEED + 5)
    depth, budget = 5, 4**5
    side = 1 << depth
    dyadic = [random_map(depth, seed=s) for s in range(5)]
    dyadic += [OccupancyGrid(rng.random((side, side))) for _ in range(5)]
    dyadic += [OccupancyGrid(rng.integers(0, 257, (side, side)) / 256)]
    arbitrary = [OccupancyGrid(rng.integers(0, 256, (side, side)) / 255),
                 OccupancyGrid(rng.random((side, side)) / 3)] + dyadic
    exact = []
    for x in dyadic:
        _, rec, new = step(start_session(depth), x, budget)
        exact.append(rec.estimate_error == 0.0 and new.estimate == x)
    wire = max(step(start_session(depth, init), x, budget, through_payload=True)[1].estimate_error
               for x in arbitrary for init in (0.5, 0.0, 0.3))
    ok = all(exact) and wire <= 1e-6
    return report(5, "full-budget losslessness", ok,
                  f"in-memory exact on {sum(exact)}/{len(exact)} maps, "
                  f"payload path max error {wire:.1e}")


def criterion_6():
    t0 = time.perf_counter()
    schedule = BandwidthSchedule.from_percentages(STATIC_SCHEDULE_PCT, 5)
    monotone = ratio_ok = 0
    worst_ratio = 0.0
    for seed in range(20):
        recs = run(static_sequence(random_map(5, seed=seed), 11), schedule)
        _RECORDS.extend(recs)
        errs = [r.estimate_error for r in recs]
        initial = float(np.linalg.norm(random_map(5, seed=seed).values - 0.5))
        monotone += all(b <= a for a, b in zip(errs, errs[1:]))
        worst_ratio = max(worst_ratio, errs[-1] / initial)
        ratio_ok += errs[-1] < 0.1 * initial
    elapsed = time.perf_counter() - t0
    ok = monotone == 20 and ratio_ok == 20 and elapsed < 10
    return report(6, "static experiment", ok,
                  f"{monotone}/20 monotone, worst final/initial {worst_ratio:.3f}, {elapsed:.2f}s")


def criterion_7():
    t0 = time.perf_counter()
    scenario = amoeba_scenario(7, seed=0, radius=8)
    steps = len(scenario.path)
    maps = dynamic_sequence(scenario, steps)
    budget = BandwidthSchedule.from_fractions(["0.01"], 7).budgets[0]
    recs = run(maps, [budget] * steps)
    elapsed = time.perf_counter() - t0
    _RECORDS.extend(recs)
    errs = [r.estimate_error for r in recs]
    increases = sum(b > a for a, b in zip(errs, errs[1:]))
    within = all(r.leaves_used <= budget for r in recs)
    ok = steps >= 100 and budget == 163 and within and elapsed < 60 and increases >= 1
    return report(7, "dynamic experiment", ok,
                  f"{steps} steps at {budget} leaves, {increases} error increases, {elapsed:.2f}s")


def criterion_4():
    # the static and dynamic runs above plus randomized schedules and initial estimates
    rng = np.random.default_rng(SEED + 4)
    for k in range(30):
        depth = int(rng.integers(1, 6))
        maps = static_sequence(random_map(depth, seed=k, smoothness=int(rng.integers(0, 3))), 6)
        budgets = [int(b) for b in rng.integers(1, 4**depth + 1, size=6)]
        _RECORDS.extend(run(maps, budgets, initial_value=float(rng.random()),
                            through_payload=bool(k % 2)))
    scenario = amoeba_scenario(5, seed=3, radius=4)
    _RECORDS.extend(run(dynamic_sequence(scenario, 20), [int(b) for b in rng.integers(1, 60, 20)]))
    slack = min(r.innovation_distortion + r.decode_distortion + 1e-9 - r.estimate_error
                for r in _RECORDS)
    ok = slack >= 0
    return report(4, "estimate error bound", ok,
                  f"{len(_RECORDS)} steps, min slack {slack:.2e}")


def criterion_8():
    rng = np.random.default_rng(SEED + 8)
    worst_diff = 0.0
    worst_pos = -np.inf
    count = 0
    for depth in range(0, 7):
        for xi in _innovations(rng, depth, 15):
            a = delta_distortion(xi)
            b = delta_distortion_quadratic(xi)
            if a.size:
                worst_diff = max(worst_diff, float(np.max(np.abs(a - b))))
                worst_pos = max(worst_pos, float(a.max()))
            count += 1
    ok = count >= 100 and worst_diff <= 1e-12 and worst_pos <= 1e-12
    return report(8, "delta nonpositivity and quadratic form", ok,
                  f"{count} maps to depth 6, max |agg-quad| {worst_diff:.1e}, max delta {worst_pos:.1e}")


def _random_encoding(rng, depth):
    bits = np.zeros(n_interior(depth), dtype=bool)
    p = rng.random()
    for t in range(bits.size):
        bits[t] = (t == 0 or bits[(t - 1) // 4]) and rng.random() < p
    topo = TreeTopology(depth, bits)
    values = rng.uniform(-1, 1, 3 * topo.n_expanded + 1).astype(np.float32)
    return EncodedInnovation(topo, values.astype(np.float64))


def criterion_9():
    rng = np.random.default_rng(SEED + 9)
    exact = 0
    blobs = []
    for _ in range(1000):
        enc = _random_encoding(rng, int(rng.integers(0, 5)))
        data = serialize_payload(enc)
        back = deserialize_payload(data)
        exact += back == enc and serialize_payload(back) == data
        blobs.append(data)
    malformed = errors = 0
    for data in blobs[:200]:
        bad = [data[:k] for k in range(len(data))] + [b"QTCM" + data[4:]]
        for b in bad:
            malformed += 1
            try:
                deserialize_payload(b)
            except FormatError:
                errors += 1
    ok = exact == 1000 and errors == malformed
    return report(9, "payload round-trip", ok,
                  f"{exact}/1000 bit-exact, {errors}/{malformed} malformed inputs rejected")


def _identical_dirs(a, b):
    files_a = sorted(p.relative_to(a) for p in Path(a).rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in Path(b).rglob("*") if p.is_file())
    if files_a != files_b:
        return False, len(files_a)
    return all(filecmp.cmp(Path(a) / f, Path(b) / f, shallow=False) for f in files_a), len(files_a)


def criterion_10():
    configs = [
        ["--scenario", "static", "--ell", "5", "--steps", "11",
         "--schedule-pct", "1,5,2,20,30,5,8,15,40,15,10", "--seed", "7"],
        ["--scenario", "amoeba", "--ell", "5", "--steps", "15", "--radius", "4",
         "--schedule-leaves", "20", "--seed", "3"],
    ]
    same = True
    nfiles = 0
    with tempfile.TemporaryDirectory() as tmp:
        for k, flags in enumerate(configs):
            a, b = Path(tmp) / f"a{k}", Path(tmp) / f"b{k}"
            with contextlib.redirect_stdout(io.StringIO()):
                codes = [cli_main(["simulate", *flags, "--out", str(d)]) for d in (a, b)]
            match, n = _identical_dirs(a, b)
            same = same and codes == [0, 0] and match
            nfiles += n
    return report(10, "determinism", same, f"{len(configs)} configs, {nfiles} files compared")


# criterion 4 runs last so it sees the records of 6 and 7
CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_4]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_acceptance(criterion, capsys):
    with capsys.disabled():
        print()
        ok = criterion()
    assert ok


@pytest.mark.xfail(strict=True, reason="float64 rounding: X^ + (X - X^) != X for some values")
def test_in_memory_exactness_for_arbitrary_float_maps():
    rng = np.random.default_rng(SEED)
    x = OccupancyGrid(rng.integers(0, 256, (32, 32)) / 255)
    _, rec, _ = step(start_session(5), x, 1024)
    assert rec.estimate_error == 0.0


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
