"""Serialization of samples, trajectories, run summaries and benchmark tables."""

import csv
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field

from .base import TargetModel
from .diagnostics import MIN_SERIES_LENGTH, MomentSummary, ess, summarize
from .integrate import TrajectoryPoint
from .sampler import ChainOutput


SCHEMA_VERSION = "1.0"
FLOAT_FORMAT = ".17g"

BENCHMARK_COLUMNS = (
    "label",
    "metric",
    "alpha",
    "epsilon",
    "n_steps",
    "accept_rate",
    "ess",
    "ess_per_sample",
    "ess_per_second",
    "elapsed_seconds",
    "n_divergent",
    "failure",
)


class RunSummary(BaseModel):
    """JSON summary written next to every samples CSV."""

    schema_version: str = SCHEMA_VERSION
    target: str
    dim: int
    metric: str
    alpha: float
    epsilon_final: float
    n_steps: int
    accept_rate: float
    accepted_fraction: float
    n_samples: int
    n_divergent: int
    n_warmup_divergent: int
    ess: Dict[str, Optional[float]] = Field(default_factory=dict)
    moments: Dict[str, MomentSummary] = Field(default_factory=dict)
    elapsed_seconds: float
    seed: int
    failure: Optional[str] = None
    config: Dict[str, Any] = Field(default_factory=dict)


class BenchmarkRow(BaseModel):
    """One line of a benchmark comparison table."""

    label: str
    metric: str
    alpha: float
    epsilon: float
    n_steps: int
    accept_rate: float
    ess: Optional[float] = None
    ess_per_sample: Optional[float] = None
    ess_per_second: Optional[float] = None
    elapsed_seconds: float
    n_divergent: int
    failure: Optional[str] = None


class BenchmarkTable(BaseModel):
    schema_version: str = SCHEMA_VERSION
    rows: List[BenchmarkRow] = Field(default_factory=list)


def _fmt(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


def _ensure_parent(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def samples_header(dim: int) -> List[str]:
    return ["iter"] + [f"q_{i}" for i in range(dim)] + ["accept", "delta_H"]


def write_samples_csv(path: Path, output: ChainOutput) -> Path:
    """Write one row per recorded transition; floats keep 17 significant digits."""
    path = _ensure_parent(path)
    dim = output.samples.shape[1]
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(samples_header(dim))
        for i, row in enumerate(output.samples):
            writer.writerow(
                [i]
                + [_fmt(value) for value in row]
                + [int(output.accepted[i]), _fmt(output.delta_h[i])]
            )
    return path


def read_samples_csv(path: Path) -> Tuple[NDArray, NDArray, NDArray]:
    """Parse a samples CSV back into (samples, accept flags, delta_H)."""
    with Path(path).open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header[0] != "iter" or header[-2:] != ["accept", "delta_H"]:
            raise ValueError(f"{path} is not a samples file")
        rows = list(reader)

    dim = len(header) - 3
    samples = np.array([[float(v) for v in row[1 : 1 + dim]] for row in rows]).reshape(len(rows), dim)
    accepted = np.array([row[1 + dim] == "1" for row in rows], dtype=bool)
    delta_h = np.array([float(row[2 + dim]) for row in rows])
    return samples, accepted, delta_h


def write_trajectory_csv(path: Path, log: Sequence[TrajectoryPoint]) -> Path:
    """Rows ``step,q_...,p_...,H`` for external plotting."""
    path = _ensure_parent(path)
    dim = log[0].q.shape[0] if log else 0
    header = ["step"] + [f"q_{i}" for i in range(dim)] + [f"p_{i}" for i in range(dim)] + ["H"]
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for point in log:
            writer.writerow(
                [point.step]
                + [_fmt(v) for v in point.q]
                + [_fmt(v) for v in point.p]
                + [_fmt(point.energy)]
            )
    return path


def coordinate_ess(output: ChainOutput, names: Sequence[str]) -> Dict[str, Optional[float]]:
    """ESS per named coordinate; None where the column is too short or constant."""
    values: Dict[str, Optional[float]] = {}
    for i, name in enumerate(names):
        column = output.samples[:, i]
        if column.size >= MIN_SERIES_LENGTH and np.ptp(column) > 0.0:
            values[name] = ess(column).ess
        else:
            values[name] = None
    return values


def build_summary(
    output: ChainOutput,
    model: TargetModel,
    metric: str,
    alpha: float,
    seed: int,
    config: Optional[Dict[str, Any]] = None,
) -> RunSummary:
    """Assemble the JSON summary, with moments for every coordinate of known marginal."""
    names = model.coordinate_names
    moments: Dict[str, MomentSummary] = {}
    if output.samples.shape[0] > 0:
        for index, reference in model.reference_marginals.items():
            moments[names[index]] = summarize(output.samples, index, reference, name=names[index])

    return RunSummary(
        target=model.name,
        dim=model.dim,
        metric=metric,
        alpha=alpha,
        epsilon_final=output.epsilon,
        n_steps=output.n_steps,
        accept_rate=output.accept_rate,
        accepted_fraction=output.accepted_fraction,
        n_samples=int(output.samples.shape[0]),
        n_divergent=output.n_divergent,
        n_warmup_divergent=output.n_warmup_divergent,
        ess=coordinate_ess(output, names),
        moments=moments,
        elapsed_seconds=output.elapsed,
        seed=seed,
        failure=output.failure,
        config=config or {},
    )


def benchmark_row(label: str, output: ChainOutput, model: TargetModel, metric: str, alpha: float) -> BenchmarkRow:
    """Table row with ESS taken on the target's diagnostic coordinate."""
    n = output.samples.shape[0]
    column = output.samples[:, model.diagnostic_index] if n else np.empty(0)
    value = ess(column).ess if n >= MIN_SERIES_LENGTH and np.ptp(column) > 0.0 else None
    return BenchmarkRow(
        label=label,
        metric=metric,
        alpha=alpha,
        epsilon=output.epsilon,
        n_steps=output.n_steps,
        accept_rate=output.accept_rate,
        ess=value,
        ess_per_sample=value / n if value is not None else None,
        ess_per_second=value / output.elapsed if value is not None and output.elapsed > 0 else None,
        elapsed_seconds=output.elapsed,
        n_divergent=output.n_divergent,
        failure=output.failure,
    )


def write_summary_json(path: Path, summary: RunSummary) -> Path:
    path = _ensure_parent(path)
    path.write_text(summary.model_dump_json(indent=2) + "\n")
    return path


def write_benchmark(csv_path: Path, json_path: Path, rows: Sequence[BenchmarkRow]) -> Tuple[Path, Path]:
    """Write the comparison table as CSV and as a JSON list, rows in the order given."""
    csv_path = _ensure_parent(csv_path)
    with csv_path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(BENCHMARK_COLUMNS)
        for row in rows:
            data = row.model_dump()
            writer.writerow(
                ["" if data[col] is None else data[col] for col in BENCHMARK_COLUMNS]
            )

    json_path = _ensure_parent(json_path)
    table = BenchmarkTable(rows=list(rows))
    json_path.write_text(table.model_dump_json(indent=2) + "\n")
    return csv_path, json_path
