"""Client partitioning and the simulated per-round timing model.

The timing model is pure accounting attached to run records: the federated
method pays the slowest client's summed local update costs plus the slowest
communication link, the incremental baseline pays the full sequential sweep.
Wall-clock time is measured separately and never enters acceptance checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .rng import STREAM_PARTITION, make_rng

CONTIGUOUS = "contiguous-balanced"
SHUFFLED = "seeded-shuffle-balanced"
STRATEGIES = (CONTIGUOUS, SHUFFLED)

FISM = "fism"
IRIG = "irig"
METHODS = (FISM, IRIG)


@dataclass(frozen=True)
class ClientPartition:
    """Disjoint ordered index groups covering the global inner-function pool."""

    assignments: tuple[tuple[int, ...], ...]
    strategy: str

    @property
    def n_clients(self) -> int:
        return len(self.assignments)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(group) for group in self.assignments)


def partition_data(m: int, n_clients: int, strategy: str = CONTIGUOUS,
                   seed: int = 0) -> ClientPartition:
    """Split the m global indices into n_clients balanced ordered groups.

    Group sizes differ by at most one, larger groups first. The shuffled
    strategy permutes the index pool with the seeded generator before
    splitting; ordering is fixed from then on.
    """
    if n_clients < 1 or n_clients > m:
        raise ValueError(f"need 1 <= n_clients <= m, got n_clients={n_clients}, m={m}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown partition strategy {strategy!r}")
    pool = np.arange(m)
    if strategy == SHUFFLED:
        pool = make_rng(seed, STREAM_PARTITION).permutation(m)
    base, extra = divmod(m, n_clients)
    groups = []
    start = 0
    for i in range(n_clients):
        size = base + (1 if i < extra else 0)
        groups.append(tuple(int(g) for g in pool[start:start + size]))
        start += size
    return ClientPartition(tuple(groups), strategy)


@dataclass(frozen=True)
class CostModel:
    """Per-update compute costs s[(client, local_index)] and per-client
    communication costs eps[client], in abstract time units."""

    per_update: Mapping[tuple[int, int], float]
    comm: Mapping[int, float]

    def __post_init__(self):
        if any(v < 0 for v in self.per_update.values()):
            raise ValueError("per-update costs must be nonnegative")
        if any(v < 0 for v in self.comm.values()):
            raise ValueError("communication costs must be nonnegative")


def uniform_costs(sizes: Sequence[int], per_update: float = 1.0,
                  comm: float = 0.0) -> CostModel:
    per = {(i, j): float(per_update) for i, size in enumerate(sizes) for j in range(size)}
    eps = {i: float(comm) for i in range(len(sizes))}
    return CostModel(per, eps)


def round_time_from_sizes(sizes: Sequence[int], costs: CostModel, method: str) -> float:
    """Simulated time of one round for clients holding ``sizes`` updates."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    sums = []
    for i, size in enumerate(sizes):
        total = 0.0
        for j in range(size):
            try:
                total += costs.per_update[(i, j)]
            except KeyError:
                raise ValueError(
                    f"cost model is missing the update cost for client {i}, local index {j}"
                ) from None
        sums.append(total)
    if method == IRIG:
        return float(sum(sums))
    comms = []
    for i in range(len(sizes)):
        try:
            comms.append(costs.comm[i])
        except KeyError:
            raise ValueError(f"cost model is missing the communication cost for client {i}") from None
    return float(max(sums) + max(comms))


def simulate_round_time(partition: ClientPartition, costs: CostModel, method: str) -> float:
    return round_time_from_sizes(partition.sizes, costs, method)
