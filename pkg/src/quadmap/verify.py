"""Self-check suite behind ``quadmap verify``: oracle comparisons at depth <= 2."""

import numpy as np

from .encoder import (
    delta_distortion,
    delta_distortion_quadratic,
    encoder_distortion,
    objective,
    solve_branch_and_bound,
    solve_budgeted_tree,
    solve_bruteforce,
)
from .quadtree import enumerate_valid, leaf_count, root_tree


def _random_innovations(rng, depth, count):
    side = 1 << depth
    return [rng.uniform(-1.0, 1.0, (side, side)) for _ in range(count)]


def check_decomposition(rng, depth=2, count=50):
    worst = 0.0
    topologies = enumerate_valid(depth)
    for xi in _random_innovations(rng, depth, count):
        delta = delta_distortion(xi)
        base = encoder_distortion(xi, root_tree(depth)) ** 2
        for t in topologies:
            lhs = encoder_distortion(xi, t) ** 2
            rhs = base + objective(delta, t)
            worst = max(worst, abs(lhs - rhs) / max(lhs, base, 1e-300))
    return worst <= 1e-9, f"max relative error {worst:.3e}"


def check_quadratic_form(rng, depth=2, count=50):
    worst = 0.0
    for xi in _random_innovations(rng, depth, count):
        a = delta_distortion(xi)
        worst = max(worst, float(np.max(np.abs(a - delta_distortion_quadratic(xi)))))
        if a.max() > 1e-12:
            return False, f"positive delta {a.max()!r}"
    return worst <= 1e-12, f"max abs difference {worst:.3e}"


def check_solvers(rng, depth=2, count=30):
    worst = 0.0
    max_budget = 4**depth
    for xi in _random_innovations(rng, depth, count):
        delta = delta_distortion(xi)
        for budget in range(1, max_budget + 1):
            ref = objective(delta, solve_bruteforce(xi, budget))
            for solver in (solve_budgeted_tree, solve_branch_and_bound):
                topo = solver(xi, budget)
                if leaf_count(topo) > budget:
                    return False, f"{solver.__name__} exceeded budget {budget}"
                worst = max(worst, abs(objective(delta, topo) - ref))
    return worst <= 1e-12, f"max objective gap {worst:.3e}"


CHECKS = {
    "decomposition identity": check_decomposition,
    "delta quadratic form": check_quadratic_form,
    "solver agreement": check_solvers,
}


def run_checks(seed=0):
    """Run every check; returns ``[(name, passed, detail), ...]``."""
    rng = np.random.default_rng(seed)
    results = []
    for name, check in CHECKS.items():
        passed, detail = check(rng)
        results.append((name, bool(passed), detail))
    return results
