"""Value/subgradient oracles for the shipped objectives, plus box projection.

Every oracle maps a query point to an :class:`EvalResult` holding the
objective value and one valid subgradient. At nondifferentiable points the
minimum-norm subgradient is returned (sign(0) = 0 for the L1 term, the zero
vector inside closed balls), which keeps norm bounds small and updates
stable. Custom objectives plug into the solvers through the same
``x -> EvalResult`` callable interface.

All oracles are pure functions of their inputs and safe to call from
concurrent client passes.
"""
from __future__ import annotations

import math
from typing import TYPE_CHECKING, Callable, NamedTuple, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover - typing only, avoids an import cycle
    from .problem import BoxConstraint


class EvalResult(NamedTuple):
    value: float
    subgrad: np.ndarray


Oracle = Callable[[np.ndarray], EvalResult]


def project_box(x: np.ndarray, box: "BoxConstraint") -> np.ndarray:
    """Componentwise clamp of ``x`` onto ``[box.lo, box.hi]``."""
    if x.shape != box.lo.shape:
        raise ValueError(f"point has shape {x.shape}, box has shape {box.lo.shape}")
    return np.clip(x, box.lo, box.hi)


def _sigmoid(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _softplus(z: float) -> float:
    # log(1 + exp(z)) without overflow for large positive z
    if z > 0.0:
        return z + math.log1p(math.exp(-z))
    return math.log1p(math.exp(z))


def logistic_eval(a: np.ndarray, b: float, x: np.ndarray) -> EvalResult:
    """Logistic loss log(1 + exp(-b<a, x>)) for a label b in {-1, +1}."""
    if b != 1 and b != -1:
        raise ValueError(f"label must be -1 or +1, got {b!r}")
    bf = float(b)
    z = -bf * float(np.dot(a, x))
    return EvalResult(_softplus(z), (-bf * _sigmoid(z)) * a)


def ball_dist_eval(x: np.ndarray, center: np.ndarray, radius: float) -> EvalResult:
    """Euclidean distance to the closed ball with the given center/radius."""
    if radius <= 0:
        raise ValueError(f"ball radius must be positive, got {radius}")
    d = x - center
    dist = float(np.linalg.norm(d))
    if dist > radius:
        return EvalResult(dist - radius, d / dist)
    return EvalResult(0.0, np.zeros_like(d))


def outer_l1_quad_eval(x: np.ndarray) -> EvalResult:
    """Sparsity-plus-norm selection objective: sum |x_d| + 0.5 sum x_d^2."""
    value = float(np.sum(np.abs(x)) + 0.5 * np.dot(x, x))
    return EvalResult(value, np.sign(x) + x)


def outer_quad_anchor_eval(x: np.ndarray, anchor: np.ndarray) -> EvalResult:
    """Anchored squared-distance selection objective: 0.5 ||x - anchor||^2."""
    if x.shape != anchor.shape:
        raise ValueError(f"point has shape {x.shape}, anchor has shape {anchor.shape}")
    d = x - anchor
    return EvalResult(0.5 * float(np.dot(d, d)), d)


# Factories binding data to the oracle interface consumed by ProblemSpec.

def logistic_oracle(a: Sequence[float] | np.ndarray, b: float) -> Oracle:
    a = np.asarray(a, dtype=float)
    if b != 1 and b != -1:
        raise ValueError(f"label must be -1 or +1, got {b!r}")
    bf = float(b)
    return lambda x: logistic_eval(a, bf, x)


def ball_oracle(center: Sequence[float] | np.ndarray, radius: float) -> Oracle:
    center = np.asarray(center, dtype=float)
    if radius <= 0:
        raise ValueError(f"ball radius must be positive, got {radius}")
    r = float(radius)
    return lambda x: ball_dist_eval(x, center, r)


def l1_quad_oracle() -> Oracle:
    return outer_l1_quad_eval


def quad_anchor_oracle(anchor: Sequence[float] | np.ndarray) -> Oracle:
    anchor = np.asarray(anchor, dtype=float)
    return lambda x: outer_quad_anchor_eval(x, anchor)
