"""Solver rounds, the run driver, and a high-accuracy reference solver.

The federated round picks one outer subgradient per round, broadcasts it,
lets every client run an incremental projected-subgradient pass over its own
inner functions (in parallel if an executor is given), and averages the
returned iterates. The incremental baseline sweeps all inner functions
sequentially, refreshing the outer subgradient at every local step. Both
share the identical single-step arithmetic so the two methods coincide
bitwise when one client holds one function.

Client passes within a round read only shared immutable inputs and are
aggregated in ascending client index, so results are bitwise independent of
the execution interleaving and of the thread count.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .federation import FISM, METHODS, CostModel, round_time_from_sizes, uniform_costs
from .metrics import RoundRow, RunRecord
from .oracles import Oracle, project_box
from .problem import BoxConstraint, ProblemSpec, StepSchedule
from .rng import STREAM_INIT, make_rng, open_uniform


@dataclass
class RoundState:
    """Driver-owned state between rounds: the current global iterate, the
    round index, the running numerator/denominator of the stepsize-weighted
    average, and cumulative subgradient-evaluation counters."""

    x: np.ndarray
    k: int
    avg_num: np.ndarray
    avg_den: float
    inner_evals: int
    outer_evals: int

    @classmethod
    def initial(cls, x: np.ndarray) -> "RoundState":
        x = np.asarray(x, dtype=float)
        return cls(x=x, k=1, avg_num=np.zeros_like(x), avg_den=0.0,
                   inner_evals=0, outer_evals=0)


@dataclass
class ClientResult:
    """One client's returned iterate plus its simulated local cost; ``path``
    holds the within-round local iterates when recording was requested."""

    x_out: np.ndarray
    local_cost_units: float
    path: list[np.ndarray] | None = None


def _local_step(x: np.ndarray, g: np.ndarray, outer_subgrad: np.ndarray,
                gamma: float, coef: float, box: BoxConstraint) -> np.ndarray:
    # Shared by both methods so their single-function iterates agree bitwise.
    return project_box(x - gamma * g - coef * outer_subgrad, box)


def client_local_pass(x_start: np.ndarray, outer_subgrad: np.ndarray,
                      gamma: float, lam: float, m_total: int,
                      local_fns: Sequence[Oracle], box: BoxConstraint,
                      costs: Sequence[float] | None = None,
                      record_path: bool = False) -> ClientResult:
    """One client's in-round pass: an incremental projected subgradient step
    per local function, reusing the frozen outer subgradient throughout.

    Performs exactly ``len(local_fns)`` inner subgradient evaluations and no
    outer ones. ``costs`` overrides the default unit cost per local update.
    """
    if len(local_fns) == 0:
        raise ValueError("client holds no inner functions")
    if x_start.shape != outer_subgrad.shape:
        raise ValueError("outer subgradient dimension does not match the iterate")
    coef = gamma * lam / m_total
    x = x_start
    path = [x] if record_path else None
    for fn in local_fns:
        x = _local_step(x, fn(x).subgrad, outer_subgrad, gamma, coef, box)
        if record_path:
            path.append(x)
    cost = float(len(local_fns)) if costs is None else float(sum(costs))
    return ClientResult(x_out=x, local_cost_units=cost, path=path)


def fism_round(state: RoundState, sched: StepSchedule, problem: ProblemSpec,
               executor: ThreadPoolExecutor | None = None,
               path_sink: list | None = None) -> RoundState:
    """One federated round: freeze the outer subgradient at the current
    iterate, run every client's local pass on it, average the results in
    ascending client index.

    The weighted-average accumulators pick up the round's starting iterate
    before the update. Counters grow by (total inner functions, 1).
    When ``path_sink`` is a list, the per-client local iterate paths of this
    round are appended to it.
    """
    gamma, lam = sched.at(state.k)
    outer_subgrad = problem.outer(state.x).subgrad
    m = problem.n_inner
    record = path_sink is not None
    args = [(state.x, outer_subgrad, gamma, lam, m, group, problem.constraint)
            for group in problem.clients]
    if executor is None:
        results = [client_local_pass(*a, record_path=record) for a in args]
    else:
        futures = [executor.submit(client_local_pass, *a, record_path=record) for a in args]
        results = [f.result() for f in futures]
    if record:
        path_sink.append([r.path for r in results])
    acc = results[0].x_out
    for r in results[1:]:
        acc = acc + r.x_out
    x_next = acc / problem.n_clients
    return RoundState(
        x=x_next,
        k=state.k + 1,
        avg_num=state.avg_num + gamma * state.x,
        avg_den=state.avg_den + gamma,
        inner_evals=state.inner_evals + m,
        outer_evals=state.outer_evals + 1,
    )


def irig_round(state: RoundState, sched: StepSchedule, problem: ProblemSpec) -> RoundState:
    """One incremental-baseline round: a sequential pass over all inner
    functions in global order, with a fresh outer subgradient at every local
    step. Counters grow by (total inner functions, total inner functions)."""
    gamma, lam = sched.at(state.k)
    m = problem.n_inner
    coef = gamma * lam / m
    box = problem.constraint
    x = state.x
    for fn in problem.inner_functions():
        outer_subgrad = problem.outer(x).subgrad
        x = _local_step(x, fn(x).subgrad, outer_subgrad, gamma, coef, box)
    return RoundState(
        x=x,
        k=state.k + 1,
        avg_num=state.avg_num + gamma * state.x,
        avg_den=state.avg_den + gamma,
        inner_evals=state.inner_evals + m,
        outer_evals=state.outer_evals + m,
    )


def weighted_average(state: RoundState) -> np.ndarray:
    """Stepsize-weighted mean of the global iterates seen so far."""
    if state.avg_den <= 0.0:
        raise ValueError("weighted average is undefined before the first round")
    return state.avg_num / state.avg_den


def stopping_criterion(x_prev: np.ndarray, x_next: np.ndarray,
                       f_prev: float, f_next: float,
                       h_prev: float, h_next: float, tol: float) -> bool:
    """Composite relative-change test with +1-shifted denominators.

    Applied verbatim (no absolute values in the denominators); intended for
    nonnegative objectives.
    """
    rx = float(np.linalg.norm(x_next - x_prev)) / (float(np.linalg.norm(x_prev)) + 1.0)
    rh = abs(h_next - h_prev) / (h_prev + 1.0)
    rf = abs(f_next - f_prev) / (f_prev + 1.0)
    return max(rx, rh, rf) <= tol


def run_solver(problem: ProblemSpec, sched: StepSchedule, method: str,
               x_init: np.ndarray, max_rounds: int, tol: float | None = None,
               seed: int = 0, costs: CostModel | None = None, threads: int = 1,
               keep_iterates: bool = False) -> RunRecord:
    """Drive rounds of the chosen method and record per-round metrics.

    Deterministic given its arguments (and bitwise independent of
    ``threads``). The initial point is projected onto the box before round 1
    so every logged iterate is feasible. With ``tol`` set, the composite
    relative-change test is evaluated on the full inner/outer objectives
    after every round; otherwise the round budget alone stops the run.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    x0 = project_box(np.asarray(x_init, dtype=float), problem.constraint)
    state = RoundState.initial(x0)
    cost_model = costs if costs is not None else uniform_costs(problem.client_sizes)
    round_time = round_time_from_sizes(problem.client_sizes, cost_model, method)
    executor = ThreadPoolExecutor(max_workers=threads) if (threads > 1 and method == FISM) else None
    rows: list[RoundRow] = []
    iterates: list[np.ndarray] | None = [x0] if keep_iterates else None
    m = problem.n_inner
    f_cur = problem.inner_objective(state.x)
    h_cur = problem.outer_objective(state.x)
    cum_time = 0.0
    stop_reason = "max_rounds"
    try:
        for _ in range(max_rounds):
            wall0 = time.perf_counter()
            prev = state
            if method == FISM:
                state = fism_round(state, sched, problem, executor=executor)
            else:
                state = irig_round(state, sched, problem)
            wall = time.perf_counter() - wall0
            f_next = problem.inner_objective(state.x)
            h_next = problem.outer_objective(state.x)
            f_avg = problem.inner_objective(weighted_average(state))
            cum_time += round_time
            rows.append(RoundRow(
                k=prev.k,
                inner_value=f_cur,
                inner_value_mean=f_cur / m,
                inner_value_avg_iterate=f_avg,
                outer_value=h_cur,
                step_norm=float(np.linalg.norm(state.x - prev.x)),
                round_time_units=round_time,
                total_time_units=cum_time,
                inner_subgrad_evals=state.inner_evals,
                outer_subgrad_evals=state.outer_evals,
                wall_clock_sec=wall,
            ))
            if keep_iterates:
                iterates.append(state.x)
            stop = tol is not None and stopping_criterion(prev.x, state.x, f_cur, f_next,
                                                          h_cur, h_next, tol)
            f_cur, h_cur = f_next, h_next
            if stop:
                stop_reason = "tolerance"
                break
    finally:
        if executor is not None:
            executor.shutdown()
    return RunRecord(
        method=method,
        problem_id=problem.name,
        gamma1=sched.gamma1, a=sched.a, lambda1=sched.lambda1, b=sched.b,
        n_clients=problem.n_clients, n_inner=m, dimension=problem.dimension,
        seed=seed,
        rows=rows,
        final_x=state.x,
        final_avg_x=weighted_average(state),
        final_inner_value=f_cur,
        final_outer_value=h_cur,
        stop_reason=stop_reason,
        iterates=iterates,
    )


def reference_solve(problem: ProblemSpec, lam: float, iters: int, seed: int = 0) -> np.ndarray:
    """High-accuracy approximation of the regularized minimizer over the box.

    Projected subgradient on (inner + lam * outer) with the strongly convex
    stepsize c/k, c = 2 / (lam * mu_H), averaging the tail half of the
    iterates. Test oracle only; the solvers never call it.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    box = problem.constraint
    rng = make_rng(seed, STREAM_INIT)
    x = open_uniform(rng, box.lo, box.hi, box.dimension)
    c = 2.0 / (lam * problem.mu_H)
    inner = tuple(problem.inner_functions())
    acc = np.zeros_like(x)
    count = 0
    half = iters // 2
    for k in range(1, iters + 1):
        g = lam * problem.outer(x).subgrad
        for fn in inner:
            g = g + fn(x).subgrad
        x = project_box(x - (c / k) * g, box)
        if k > half:
            acc += x
            count += 1
    return acc / count
