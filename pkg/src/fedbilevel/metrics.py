"""Per-round run records, classification accuracy, and rate diagnostics.

Records serialize to a JSON summary plus a JSONL stream of per-round rows
(optionally a CSV of the same rows); the row field names are part of the
documented output schema, see README.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, fields
from typing import TYPE_CHECKING

import numpy as np

from .rng import PRNG_ID

if TYPE_CHECKING:  # pragma: no cover
    from .data import LabeledDataset


class RateDiagnosticUnavailable(RuntimeError):
    """Every objective gap in the fit window sits below the clip threshold."""


GAP_CLIP = 1e-12


@dataclass(frozen=True)
class RoundRow:
    k: int
    inner_value: float
    inner_value_mean: float
    inner_value_avg_iterate: float
    outer_value: float
    step_norm: float
    round_time_units: float
    total_time_units: float
    inner_subgrad_evals: int
    outer_subgrad_evals: int
    wall_clock_sec: float


ROW_FIELDS = tuple(f.name for f in fields(RoundRow))


@dataclass
class RunRecord:
    """Everything a single solver run produces."""

    method: str
    problem_id: str
    gamma1: float
    a: float
    lambda1: float
    b: float
    n_clients: int
    n_inner: int
    dimension: int
    seed: int
    rows: list[RoundRow]
    final_x: np.ndarray
    final_avg_x: np.ndarray
    final_inner_value: float
    final_outer_value: float
    stop_reason: str
    prng: str = PRNG_ID
    test_accuracy: float | None = None
    config: dict | None = None
    iterates: list[np.ndarray] | None = None

    @property
    def rounds(self) -> int:
        return len(self.rows)

    def summary_dict(self) -> dict:
        last = self.rows[-1] if self.rows else None
        return {
            "method": self.method,
            "problem_id": self.problem_id,
            "schedule": {"gamma1": self.gamma1, "a": self.a,
                         "lambda1": self.lambda1, "b": self.b},
            "n_clients": self.n_clients,
            "n_inner": self.n_inner,
            "dimension": self.dimension,
            "seed": self.seed,
            "prng": self.prng,
            "rounds": self.rounds,
            "stop_reason": self.stop_reason,
            "final_inner_value": self.final_inner_value,
            "final_outer_value": self.final_outer_value,
            "total_time_units": last.total_time_units if last else 0.0,
            "inner_subgrad_evals": last.inner_subgrad_evals if last else 0,
            "outer_subgrad_evals": last.outer_subgrad_evals if last else 0,
            "test_accuracy": self.test_accuracy,
            "final_x": [float(v) for v in self.final_x],
            "final_avg_x": [float(v) for v in self.final_avg_x],
            "config": self.config,
        }


def write_run_json(record: RunRecord, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(record.summary_dict(), f, indent=2)
        f.write("\n")


def write_rows_jsonl(record: RunRecord, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for row in record.rows:
            f.write(json.dumps(asdict(row)))
            f.write("\n")


def write_rows_csv(record: RunRecord, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(ROW_FIELDS)
        for row in record.rows:
            writer.writerow([getattr(row, name) for name in ROW_FIELDS])


def accuracy(x: np.ndarray, ds: "LabeledDataset") -> float:
    """Fraction of samples whose sign(<a, x>) matches the label.

    A zero score predicts +1 (fixed tie rule; matters only on measure-zero
    inputs for real data).
    """
    if len(ds) == 0:
        raise ValueError("accuracy of an empty dataset is undefined")
    if ds.features.shape[1] != x.shape[0]:
        raise ValueError("classifier dimension does not match the dataset")
    pred = np.where(ds.features @ x >= 0.0, 1, -1)
    return float(np.mean(pred == ds.labels))


def rate_diagnostic(record: RunRecord, f_star: float, window: float = 0.8,
                    clip: float = GAP_CLIP) -> float:
    """Fitted log-log slope of the averaged-iterate objective gap.

    Least-squares slope of log(F(avg iterate) - f_star) against log k over
    the trailing ``window`` fraction of rounds; gaps are clipped below
    ``clip`` before the log. ``f_star`` must come from an independent oracle,
    never from the run itself.
    """
    rows = record.rows
    if len(rows) < 100:
        raise ValueError("rate diagnostic needs at least 100 recorded rounds")
    start = len(rows) - int(window * len(rows))
    tail = rows[start:]
    gaps = np.array([r.inner_value_avg_iterate for r in tail]) - f_star
    if np.all(gaps < clip):
        raise RateDiagnosticUnavailable("all objective gaps sit below the clip threshold")
    ks = np.array([r.k for r in tail], dtype=float)
    logs = np.log(np.clip(gaps, clip, None))
    return float(np.polyfit(np.log(ks), logs, 1)[0])
