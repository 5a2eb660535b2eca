"""Configuration-driven experiment runner.

Subcommands:
  run <config>      execute a single run (first method, first client count)
  sweep <config>    execute the full methods x client-counts x repeats grid
                    and write a merged summary.csv
  selftest          oracle finite-difference and projection property suite
  inspect <file>    print a saved run summary

Every run writes a JSON summary and a JSONL stream of per-round rows
(optionally a CSV of the same rows) into the output directory. Exit codes:
0 all runs complete, 1 partial run failures, 2 invalid configuration,
3 data errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .data import (FormatError, LabeledDataset, filter_binary, load_digit_images,
                   make_location_instance, make_synthetic_logistic)
from .federation import CostModel, partition_data
from .instances import location_problem, logistic_problem, selection_1d_problem
from .metrics import RunRecord, accuracy, write_rows_csv, write_rows_jsonl, write_run_json
from .problem import ProblemSpec, make_schedule
from .rng import STREAM_INIT, make_rng, open_uniform
from .solvers import run_solver


def _build_datasets(cfg: ExperimentConfig) -> dict:
    """Load or generate the problem data shared by all runs of a sweep."""
    ctx: dict = {}
    if cfg.problem == "location":
        ctx["instance"] = make_location_instance(cfg.n, cfg.m, seed=cfg.seed)
    elif cfg.problem == "logistic-synthetic":
        if cfg.test_size > 0:
            pool = make_synthetic_logistic(cfg.n, cfg.m + cfg.test_size, cfg.margin,
                                           seed=cfg.seed)
            ctx["train"], ctx["test"] = _split_balanced(pool, cfg.m)
        else:
            ctx["train"] = make_synthetic_logistic(cfg.n, cfg.m, cfg.margin, seed=cfg.seed)
    elif cfg.problem == "logistic-mnist":
        if not cfg.images_path or not cfg.labels_path:
            raise FormatError("logistic-mnist needs images_path and labels_path")
        digits = load_digit_images(cfg.images_path, cfg.labels_path, name="mnist")
        ctx["train"] = filter_binary(digits, cfg.pos_digit, cfg.neg_digit)
        if cfg.test_images_path and cfg.test_labels_path:
            test_digits = load_digit_images(cfg.test_images_path, cfg.test_labels_path,
                                            name="mnist-test")
            ctx["test"] = filter_binary(test_digits, cfg.pos_digit, cfg.neg_digit)
    return ctx


def _split_balanced(pool: LabeledDataset, train_size: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Split a balanced pool into balanced train/test parts, preserving draw
    order within each class; both parts keep the pool's separator."""
    if train_size % 2 or (len(pool) - train_size) % 2:
        raise ConfigError("m and test_size must both be even for balanced splits", key="m")
    half = train_size // 2
    train_idx: list[int] = []
    test_idx: list[int] = []
    seen = {1: 0, -1: 0}
    for i, lab in enumerate(pool.labels):
        lab = int(lab)
        (train_idx if seen[lab] < half else test_idx).append(i)
        seen[lab] += 1
    train = LabeledDataset(pool.features[train_idx], pool.labels[train_idx],
                           name=pool.name, separator=pool.separator)
    test = LabeledDataset(pool.features[test_idx], pool.labels[test_idx],
                          name=pool.name + "-heldout", separator=pool.separator)
    return train, test


def _build_problem(cfg: ExperimentConfig, ctx: dict, n_clients: int,
                   run_seed: int) -> ProblemSpec:
    if cfg.problem == "selection-1d":
        part = partition_data(cfg.m, n_clients, cfg.partition, seed=run_seed)
        return _selection_with_sizes(part.sizes)
    if cfg.problem == "location":
        part = partition_data(cfg.m, n_clients, cfg.partition, seed=run_seed)
        return location_problem(ctx["instance"], part)
    part = partition_data(len(ctx["train"]), n_clients, cfg.partition, seed=run_seed)
    return logistic_problem(ctx["train"], part)


def _selection_with_sizes(sizes: tuple[int, ...]) -> ProblemSpec:
    # selection-1d with the ball replicas split per the partition sizes
    base = selection_1d_problem(n_clients=1, balls_per_client=1)
    ball = base.clients[0][0]
    clients = tuple(tuple(ball for _ in range(size)) for size in sizes)
    return ProblemSpec(dimension=1, clients=clients, outer=base.outer,
                       constraint=base.constraint, mu_H=base.mu_H, name=base.name)


def _cost_model(cfg: ExperimentConfig, sizes: tuple[int, ...]) -> CostModel:
    scale = cfg.client_cost_scale
    if scale is not None and len(scale) != len(sizes):
        raise ConfigError("client_cost_scale length must equal the client count",
                          key="client_cost_scale")
    comm = cfg.comm_cost
    if len(comm) not in (1, len(sizes)):
        raise ConfigError("comm_cost must hold one value or one per client",
                          key="comm_cost")
    per = {}
    for i, size in enumerate(sizes):
        s = cfg.unit_cost * (scale[i] if scale is not None else 1.0)
        for j in range(size):
            per[(i, j)] = s
    eps = {i: float(comm[i % len(comm)] if len(comm) > 1 else comm[0])
           for i in range(len(sizes))}
    return CostModel(per, eps)


def execute(cfg: ExperimentConfig, grid: bool, threads: int = 1,
            progress=print) -> tuple[list[tuple[str, RunRecord]], list[tuple[str, str]]]:
    """Run the configured experiment; returns (records, failures)."""
    ctx = _build_datasets(cfg)
    methods = cfg.methods if grid else cfg.methods[:1]
    s_values = cfg.s_values if grid else cfg.s_values[:1]
    repeats = cfg.repeats if grid else 1
    records: list[tuple[str, RunRecord]] = []
    failures: list[tuple[str, str]] = []
    for method in methods:
        for n_clients in s_values:
            for rep in range(repeats):
                run_seed = cfg.seed + rep
                run_id = f"{cfg.problem}_{method}_S{n_clients}_rep{rep}"
                try:
                    record = _single_run(cfg, ctx, method, n_clients, rep, run_seed,
                                         threads)
                except Exception as exc:  # noqa: BLE001 - runs are isolated
                    failures.append((run_id, f"{type(exc).__name__}: {exc}"))
                    progress(f"{run_id}: FAILED ({exc})")
                    continue
                records.append((run_id, record))
                progress(f"{run_id}: {record.rounds} rounds, stop={record.stop_reason}, "
                         f"final inner={record.final_inner_value:.6g}, "
                         f"outer={record.final_outer_value:.6g}")
    return records, failures


def _single_run(cfg: ExperimentConfig, ctx: dict, method: str, n_clients: int,
                rep: int, run_seed: int, threads: int) -> RunRecord:
    problem = _build_problem(cfg, ctx, n_clients, run_seed)
    sched = make_schedule(cfg.gamma1, cfg.a, cfg.lambda1, cfg.b,
                          mu_H=problem.mu_H, m=problem.n_inner)
    box = problem.constraint
    x_init = open_uniform(make_rng(run_seed, STREAM_INIT), box.lo, box.hi, box.dimension)
    costs = _cost_model(cfg, problem.client_sizes)
    record = run_solver(problem, sched, method, x_init, cfg.max_rounds, tol=cfg.tol,
                        seed=run_seed, costs=costs, threads=threads)
    if "test" in ctx:
        record.test_accuracy = accuracy(record.final_x, ctx["test"])
    record.config = dict(cfg.echo_dict(), method=method, n_clients=n_clients,
                         repeat=rep, run_seed=run_seed)
    return record


def write_outputs(records: list[tuple[str, RunRecord]], out_dir: Path,
                  write_csv: bool, summary: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for run_id, record in records:
        write_run_json(record, out_dir / f"{run_id}.json")
        write_rows_jsonl(record, out_dir / f"{run_id}.jsonl")
        if write_csv:
            write_rows_csv(record, out_dir / f"{run_id}.csv")
    if summary:
        _write_summary(records, out_dir / "summary.csv")


def _write_summary(records: list[tuple[str, RunRecord]], path: Path) -> None:
    groups: dict[tuple[str, int], list[RunRecord]] = {}
    order: list[tuple[str, int]] = []
    for _, record in records:
        key = (record.method, record.n_clients)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(record)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["problem", "method", "n_clients", "repeats", "rounds_mean",
                         "sim_time_mean", "final_inner_mean", "final_outer_mean",
                         "test_accuracy_mean"])
        for key in order:
            runs = groups[key]
            accs = [r.test_accuracy for r in runs if r.test_accuracy is not None]
            writer.writerow([
                runs[0].problem_id, key[0], key[1], len(runs),
                float(np.mean([r.rounds for r in runs])),
                float(np.mean([r.rows[-1].total_time_units for r in runs])),
                float(np.mean([r.final_inner_value for r in runs])),
                float(np.mean([r.final_outer_value for r in runs])),
                float(np.mean(accs)) if accs else "",
            ])


def _cmd_run(args: argparse.Namespace, grid: bool) -> int:
    try:
        cfg = load_config(args.config, args.set)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        records, failures = execute(cfg, grid=grid, threads=args.threads)
    except (FormatError, FileNotFoundError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    write_outputs(records, Path(cfg.out_dir), cfg.write_csv, summary=grid)
    if failures:
        for run_id, message in failures:
            print(f"failed: {run_id}: {message}", file=sys.stderr)
        return 1
    return 0


def _cmd_selftest(args: argparse.Namespace) -> int:
    from .selfcheck import run_selftest
    results = run_selftest(points=args.points, pairs=args.pairs)
    all_ok = True
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        print(f"{status} {name} ({detail})")
        all_ok = all_ok and ok
    return 0 if all_ok else 1


def _cmd_inspect(args: argparse.Namespace) -> int:
    try:
        summary = json.loads(Path(args.record).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    sched = summary.get("schedule", {})
    print(f"problem:  {summary.get('problem_id')}")
    print(f"method:   {summary.get('method')} (S={summary.get('n_clients')}, "
          f"m={summary.get('n_inner')}, n={summary.get('dimension')})")
    print(f"schedule: gamma1={sched.get('gamma1')} a={sched.get('a')} "
          f"lambda1={sched.get('lambda1')} b={sched.get('b')}")
    print(f"seed:     {summary.get('seed')} (prng {summary.get('prng')})")
    print(f"rounds:   {summary.get('rounds')} (stop: {summary.get('stop_reason')})")
    print(f"final:    inner={summary.get('final_inner_value')} "
          f"outer={summary.get('final_outer_value')}")
    print(f"time:     {summary.get('total_time_units')} units; "
          f"evals inner={summary.get('inner_subgrad_evals')} "
          f"outer={summary.get('outer_subgrad_evals')}")
    if summary.get("test_accuracy") is not None:
        print(f"accuracy: {summary['test_accuracy']}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="fedbilevel", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("config", help="path to a flat key = value config file")
        p.add_argument("--out", default=None, help="output directory (overrides out_dir)")
        p.add_argument("--seed", type=int, default=None, help="override the base seed")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key (repeatable)")
        p.add_argument("--threads", type=int, default=1,
                       help="client-pass threads per round (speed only, never results)")

    p_run = sub.add_parser("run", help="execute a single run")
    add_run_flags(p_run)
    p_sweep = sub.add_parser("sweep", help="execute the full config grid")
    add_run_flags(p_sweep)
    p_self = sub.add_parser("selftest", help="oracle and projection property suite")
    p_self.add_argument("--points", type=int, default=100)
    p_self.add_argument("--pairs", type=int, default=100)
    p_inspect = sub.add_parser("inspect", help="print a saved run summary")
    p_inspect.add_argument("record", help="path to a run .json summary")

    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args, grid=False)
    if args.command == "sweep":
        return _cmd_run(args, grid=True)
    if args.command == "selftest":
        return _cmd_selftest(args)
    return _cmd_inspect(args)


def script_main() -> None:  # console-script entry point
    sys.exit(main())


if __name__ == "__main__":
    script_main()
