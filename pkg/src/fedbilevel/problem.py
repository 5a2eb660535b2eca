"""Bilevel problem structure shared by every solver.

A problem is an inner objective given as a finite sum of convex per-sample
functions partitioned across clients, an outer strongly convex selection
objective, and a box constraint. Stepsize schedules and sampled norm bounds
live here too. All types are immutable after construction and safe to share
across concurrent client evaluations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .oracles import Oracle, project_box
from .rng import STREAM_BOUNDS, make_rng


@dataclass(frozen=True)
class BoxConstraint:
    """Per-coordinate bounds [lo, hi] defining the feasible box."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("box bounds must be 1-d arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("box lower bounds must not exceed upper bounds")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dimension(self) -> int:
        return self.lo.shape[0]

    @classmethod
    def symmetric(cls, dimension: int, half_width: float) -> "BoxConstraint":
        """The box [-half_width, half_width]^dimension."""
        if half_width <= 0:
            raise ValueError("half_width must be positive")
        hw = float(half_width)
        return cls(np.full(dimension, -hw), np.full(dimension, hw))

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


@dataclass(frozen=True)
class ProblemSpec:
    """One bilevel instance: client-partitioned inner sum, outer selector,
    box constraint, and the outer strong-convexity modulus (known
    analytically for the shipped objectives, never estimated)."""

    dimension: int
    clients: tuple[tuple[Oracle, ...], ...]
    outer: Oracle
    constraint: BoxConstraint
    mu_H: float
    name: str = ""

    def __post_init__(self):
        clients = tuple(tuple(group) for group in self.clients)
        object.__setattr__(self, "clients", clients)
        if len(clients) < 1:
            raise ValueError("need at least one client")
        if any(len(group) == 0 for group in clients):
            raise ValueError("every client needs at least one inner function")
        if self.mu_H <= 0:
            raise ValueError("outer strong-convexity modulus must be positive")
        if self.constraint.dimension != self.dimension:
            raise ValueError("constraint dimension does not match problem dimension")

    @property
    def n_clients(self) -> int:
        return len(self.clients)

    @property
    def n_inner(self) -> int:
        """Total number of inner functions across all clients."""
        return sum(len(group) for group in self.clients)

    @property
    def client_sizes(self) -> tuple[int, ...]:
        return tuple(len(group) for group in self.clients)

    def inner_functions(self) -> Iterator[Oracle]:
        """All inner functions in global order (client 0 first)."""
        for group in self.clients:
            yield from group

    def inner_objective(self, x: np.ndarray) -> float:
        return float(sum(fn(x).value for fn in self.inner_functions()))

    def outer_objective(self, x: np.ndarray) -> float:
        return float(self.outer(x).value)


@dataclass(frozen=True)
class StepSchedule:
    """Power-law stepsizes gamma1/k^a and regularization weights lambda1/k^b.

    ``feasible`` records whether gamma1 * lambda1 * mu_H <= 2m held at
    construction; infeasible combinations are flagged, never rejected, so
    small unit-test instances can still run arbitrary schedules.
    """

    gamma1: float
    a: float
    lambda1: float
    b: float
    feasible: bool = True

    def at(self, k: int) -> tuple[float, float]:
        """Stepsize and regularization weight for round k >= 1."""
        if k < 1:
            raise ValueError(f"round index must be >= 1, got {k}")
        kf = float(k)
        return self.gamma1 / kf**self.a, self.lambda1 / kf**self.b


def make_schedule(gamma1: float, a: float, lambda1: float, b: float,
                  mu_H: float, m: int) -> StepSchedule:
    """Validated schedule constructor; sets the feasibility flag."""
    if gamma1 <= 0:
        raise ValueError(f"gamma1 must be positive, got {gamma1}")
    if lambda1 <= 0:
        raise ValueError(f"lambda1 must be positive, got {lambda1}")
    if a < 0 or b < 0:
        raise ValueError("exponents must be nonnegative so the sequences are nonincreasing")
    feasible = gamma1 * lambda1 * mu_H <= 2 * m
    return StepSchedule(float(gamma1), float(a), float(lambda1), float(b), feasible)


def schedule_at(sched: StepSchedule, k: int) -> tuple[float, float]:
    return sched.at(k)


@dataclass(frozen=True)
class BoundEstimates:
    """Sampled upper estimates of the inner subgradient-norm bound (Cf) and
    the outer norm/value bound (CH) over the feasible box."""

    Cf: float
    CH: float

    def __post_init__(self):
        if self.Cf < 0 or self.CH < 0:
            raise ValueError("bound estimates must be nonnegative")


def estimate_bounds(problem: ProblemSpec, samples: int = 1000, seed: int = 0) -> BoundEstimates:
    """Estimate Cf and CH by sampling projected random points of the box.

    Points are drawn uniformly from a 1.5x inflation of the box and projected
    back, which puts mass on faces and corners where norms peak. CH covers
    both the outer subgradient norm and the outer value magnitude. Test-time
    helper for drift-bound checks; the solvers never read these.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = make_rng(seed, STREAM_BOUNDS)
    box = problem.constraint
    center = (box.lo + box.hi) / 2.0
    half = (box.hi - box.lo) / 2.0
    cf = 0.0
    ch = 0.0
    inner = tuple(problem.inner_functions())
    for _ in range(samples):
        raw = center + rng.uniform(-1.5, 1.5, box.dimension) * half
        x = project_box(raw, box)
        for fn in inner:
            res = fn(x)
            g = float(np.linalg.norm(res.subgrad))
            if g > cf:
                cf = g
        res = problem.outer(x)
        ch = max(ch, float(np.linalg.norm(res.subgrad)), abs(res.value))
    return BoundEstimates(cf, ch)
