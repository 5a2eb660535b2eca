"""Seeded self-checks for the oracle suite.

Covers finite-difference agreement at smooth points, the subgradient
inequality on random pairs, and projection idempotence/nonexpansiveness.
Used by both the test suite (at full sample counts) and the CLI ``selftest``
subcommand (at lighter counts).
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .oracles import (Oracle, ball_dist_eval, logistic_eval, outer_l1_quad_eval,
                      outer_quad_anchor_eval, project_box)
from .problem import BoxConstraint
from .rng import STREAM_CHECKS, make_rng

_DIM = 7

# A case is (oracle, is_smooth predicate); the predicate guards the
# finite-difference stencil away from kinks.


def _logistic_case(rng) -> tuple[Oracle, Callable]:
    a = rng.standard_normal(_DIM)
    b = 1.0 if rng.random() < 0.5 else -1.0
    return (lambda x: logistic_eval(a, b, x)), (lambda x: True)


def _ball_case(rng) -> tuple[Oracle, Callable]:
    c = rng.uniform(-2.0, 2.0, _DIM)
    r = float(rng.uniform(0.5, 1.5))

    def smooth(x, margin=1e-3):
        dist = float(np.linalg.norm(x - c))
        return dist > margin and abs(dist - r) > margin

    return (lambda x: ball_dist_eval(x, c, r)), smooth


def _l1_quad_case(rng) -> tuple[Oracle, Callable]:
    return outer_l1_quad_eval, (lambda x: float(np.min(np.abs(x))) > 1e-3)


def _quad_anchor_case(rng) -> tuple[Oracle, Callable]:
    anchor = rng.uniform(-2.0, 2.0, _DIM)
    return (lambda x: outer_quad_anchor_eval(x, anchor)), (lambda x: True)


_CASES: dict[str, Callable] = {
    "logistic": _logistic_case,
    "ball-distance": _ball_case,
    "l1-quad": _l1_quad_case,
    "quad-anchor": _quad_anchor_case,
}


def finite_difference_failures(points: int = 500, seed: int = 2024, step: float = 1e-6,
                               tol: float = 1e-5) -> dict[str, int]:
    """Count per-oracle coordinates where central differences disagree with
    the reported subgradient beyond tol * (1 + |g|), at smooth points."""
    out: dict[str, int] = {}
    for name, case in _CASES.items():
        rng = make_rng(seed, STREAM_CHECKS)
        failures = 0
        for _ in range(points):
            oracle, smooth = case(rng)
            x = rng.uniform(-4.0, 4.0, _DIM)
            while not smooth(x):
                x = rng.uniform(-4.0, 4.0, _DIM)
            g = oracle(x).subgrad
            for d in range(_DIM):
                e = np.zeros(_DIM)
                e[d] = step
                fd = (oracle(x + e).value - oracle(x - e).value) / (2.0 * step)
                if abs(fd - g[d]) > tol * (1.0 + abs(g[d])):
                    failures += 1
        out[name] = failures
    return out


def subgradient_inequality_failures(pairs: int = 100, seed: int = 2024,
                                    slack: float = 1e-9) -> dict[str, int]:
    """Count per-oracle pairs violating f(y) >= f(x) + <g(x), y - x> - slack."""
    out: dict[str, int] = {}
    for name, case in _CASES.items():
        rng = make_rng(seed, STREAM_CHECKS)
        failures = 0
        for _ in range(pairs):
            oracle, _ = case(rng)
            x = rng.uniform(-4.0, 4.0, _DIM)
            y = rng.uniform(-4.0, 4.0, _DIM)
            fx, gx = oracle(x)
            fy = oracle(y).value
            if fy < fx + float(np.dot(gx, y - x)) - slack:
                failures += 1
        out[name] = failures
    return out


def projection_failures(pairs: int = 100, seed: int = 2024) -> dict[str, int]:
    """Count failures of projection idempotence (exact), nonexpansiveness
    (1e-12 slack), and identity on interior points (exact)."""
    rng = make_rng(seed, STREAM_CHECKS)
    idempotence = 0
    nonexpansive = 0
    identity = 0
    for _ in range(pairs):
        lo = rng.uniform(-3.0, -0.5, _DIM)
        hi = rng.uniform(0.5, 3.0, _DIM)
        box = BoxConstraint(lo, hi)
        x = rng.uniform(-5.0, 5.0, _DIM)
        y = rng.uniform(-5.0, 5.0, _DIM)
        px = project_box(x, box)
        py = project_box(y, box)
        if not np.array_equal(project_box(px, box), px):
            idempotence += 1
        if np.linalg.norm(px - py) > np.linalg.norm(x - y) + 1e-12:
            nonexpansive += 1
        mid = (box.lo + box.hi) / 2.0
        if not np.array_equal(project_box(mid, box), mid):
            identity += 1
    return {"idempotence": idempotence, "nonexpansiveness": nonexpansive,
            "interior-identity": identity}


def run_selftest(points: int = 100, pairs: int = 100, seed: int = 2024) -> list[tuple[str, bool, str]]:
    """All checks as (name, passed, detail) tuples."""
    results: list[tuple[str, bool, str]] = []
    for name, fails in finite_difference_failures(points=points, seed=seed).items():
        results.append((f"finite-difference {name}", fails == 0, f"{fails} failing coordinates"))
    for name, fails in subgradient_inequality_failures(pairs=pairs, seed=seed).items():
        results.append((f"subgradient-inequality {name}", fails == 0, f"{fails} failing pairs"))
    for name, fails in projection_failures(pairs=pairs, seed=seed).items():
        results.append((f"projection {name}", fails == 0, f"{fails} failing pairs"))
    return results
