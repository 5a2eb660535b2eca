"""Independent test oracles: closed forms and brute-force grid searches.

Everything here is written directly from the objective definitions (no calls
into the package's oracle or solver code) so it can serve as an independent
check of the library path.
"""
from __future__ import annotations

import numpy as np

# Closed-form solution of the 1-d selection instance: the inner solution set
# is the interval [0, 1]; the anchored outer objective 0.5 (y - 2)^2 picks
# the endpoint nearest 2.
SELECTION_1D_OPTIMUM = 1.0


def selection_inner_1d(y):
    """dist(y, [0, 1]) elementwise."""
    return np.maximum(np.abs(np.asarray(y) - 0.5) - 0.5, 0.0)


def selection_outer_1d(y):
    return 0.5 * (np.asarray(y) - 2.0) ** 2


def grid_min_selection_composite(lam: float, lo: float = -10.0, hi: float = 10.0,
                                 resolution: float = 1e-4) -> float:
    """Brute-force minimizer of inner + lam * outer on a uniform 1-d grid."""
    ys = np.arange(lo, hi + resolution / 2, resolution)
    values = selection_inner_1d(ys) + lam * selection_outer_1d(ys)
    return float(ys[int(np.argmin(values))])


def grid_min_selection_inner(lo: float = -10.0, hi: float = 10.0,
                             resolution: float = 1e-4) -> float:
    """Brute-force minimum value of the 1-d inner objective."""
    ys = np.arange(lo, hi + resolution / 2, resolution)
    return float(np.min(selection_inner_1d(ys)))


def _balls_inner_2d(xs, ys, centers, radii):
    total = np.zeros_like(xs)
    for c, r in zip(centers, radii):
        total += np.maximum(np.hypot(xs - c[0], ys - c[1]) - r, 0.0)
    return total


def grid_bilevel_2d(centers, radii, anchor, lo: float = -10.0, hi: float = 10.0,
                    coarse: float = 1e-2, fine: float = 1e-3) -> np.ndarray:
    """Two-stage grid search for the 2-d bilevel optimum.

    Stage 1 scans the whole box at the coarse resolution and brackets the
    inner-optimal region; stage 2 rescans that bracket (padded) at the fine
    resolution and returns the outer-objective argmin over the near-optimal
    set. Tolerances follow the inner objective's Lipschitz constant (one per
    ball) times the grid diagonal.
    """
    centers = [np.asarray(c, dtype=float) for c in centers]
    lip = len(centers)

    def scan(x_lo, x_hi, y_lo, y_hi, res):
        gx = np.arange(x_lo, x_hi + res / 2, res)
        gy = np.arange(y_lo, y_hi + res / 2, res)
        xs, ys = np.meshgrid(gx, gy, indexing="ij")
        inner = _balls_inner_2d(xs, ys, centers, radii)
        outer = 0.5 * ((xs - anchor[0]) ** 2 + (ys - anchor[1]) ** 2)
        return xs, ys, inner, outer

    xs, ys, inner, outer = scan(lo, hi, lo, hi, coarse)
    f_tol = 2.0 * lip * coarse
    feasible = inner <= inner.min() + f_tol
    pad = 5 * coarse
    x_lo, x_hi = xs[feasible].min() - pad, xs[feasible].max() + pad
    y_lo, y_hi = ys[feasible].min() - pad, ys[feasible].max() + pad

    xs, ys, inner, outer = scan(max(lo, x_lo), min(hi, x_hi),
                                max(lo, y_lo), min(hi, y_hi), fine)
    f_tol = 2.0 * lip * fine
    feasible = inner <= inner.min() + f_tol
    masked = np.where(feasible, outer, np.inf)
    idx = np.unravel_index(int(np.argmin(masked)), masked.shape)
    return np.array([xs[idx], ys[idx]])


# Minimal hand-rolled oracles for solver unit tests.

def abs_oracle():
    from fedbilevel.oracles import EvalResult

    def oracle(x):
        return EvalResult(float(np.sum(np.abs(x))), np.sign(x))

    return oracle


def zero_oracle():
    from fedbilevel.oracles import EvalResult

    def oracle(x):
        return EvalResult(0.0, np.zeros_like(x))

    return oracle


def counting(oracle):
    """Wrap an oracle with an invocation counter (counts in calls['n'])."""
    calls = {"n": 0}

    def wrapped(x):
        calls["n"] += 1
        return oracle(x)

    return wrapped, calls
