"""
Monte-Carlo experiment runner.

A sweep is a grid of (SNR, run) cells. Every cell derives its own seed from
the master seed and its indices, generates one noisy data set and runs every
requested method on it, so methods are compared on paired data and any cell
can be re-run in isolation. Cells execute sequentially or in a process pool;
results are collected in grid order either way.

The known-row sweep holds the SNR fixed and compares PCA with cPCA as more
true rows are handed to cPCA, scoring theta and the reconciliation errors.
"""

import csv
import logging
import math
import platform
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Literal, TypeVar

import numpy as np
import scipy
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from structured_pca import __version__
from structured_pca.core.artifacts import load_json, read_matrix, save_json
from structured_pca.core.datagen import RNG_ALGORITHM, derive_seed, generate_dataset
from structured_pca.core.faults import FaultExperimentResult, FaultMagnitudeLaw, fault_experiment
from structured_pca.core.identify import IdentifyOptions, identify
from structured_pca.core.metrics import (
    MatrixNorm,
    best_instance_counts,
    reconciliation_error,
    subspace_dependence,
)
from structured_pca.core.models import Method, snr_to_json
from structured_pca.core.structure import ConstraintModel, StructureMask
from structured_pca.experiments.registry import DEFAULT_SNR_GRID, get_case, load_model_files
from structured_pca.utils.checksum import checksum_map
from structured_pca.utils.exceptions import ConfigurationError, StructuredPCAError, UnknownCase
from structured_pca.utils.logging import bind, log_execution_time

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.csv"
RUNS_FILE = "runs.csv"
ENVELOPE_FILE = "envelope.json"
KNOWN_ROWS_FILE = "known_rows.csv"
KNOWN_ROWS_ENVELOPE_FILE = "known_rows.json"

C = TypeVar("C", bound="CaseSource")
T = TypeVar("T")
R = TypeVar("R")


def _parse_snr(value: Any) -> Any:
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return value


def _check_snr(value: float) -> float:
    if not value > 0:
        raise ValueError("'snr' must be positive")
    return value


def _format_float(value: float) -> str:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf"
    return format(value, ".17g")


def _json_float(value: float) -> float | None:
    return None if math.isnan(value) else value


def _versions() -> dict[str, str]:
    return {
        "structured_pca": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def _map_tasks(fn: Callable[[T], R], tasks: Sequence[T], workers: int) -> list[R]:
    """Apply ``fn`` in task order, in-process or in a process pool."""
    if workers > 1:
        chunksize = max(1, len(tasks) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, tasks, chunksize=chunksize))
    return [fn(t) for t in tasks]


class CaseSource(BaseModel):
    """Where the true model comes from: a registry case or model/mask files."""

    case: str | None = None
    model_path: Path | None = None
    mask_path: Path | None = None
    methods: list[Method] = Field(default_factory=lambda: [Method.PCA, Method.SPCA])
    known_rows: list[int] = Field(default_factory=list)
    n_samples: int = Field(default=1000, ge=1)
    options: IdentifyOptions = Field(default_factory=IdentifyOptions)

    @property
    def needs_known_rows(self) -> bool:
        return Method.CPCA in self.methods

    @model_validator(mode="after")
    def check_source(self) -> "CaseSource":
        if (self.case is None) == (self.model_path is None):
            raise ValueError("give exactly one of 'case' or 'model_path'")
        if self.mask_path is not None and self.model_path is None:
            raise ValueError("'mask_path' requires 'model_path'")
        if not self.methods:
            raise ValueError("'methods' must not be empty")
        if self.case is not None:
            try:
                case = get_case(self.case)
            except UnknownCase as e:
                raise ValueError(str(e)) from None
            if self.needs_known_rows and not self.known_rows:
                self.known_rows = list(case.known_rows)
        if self.needs_known_rows and not self.known_rows:
            raise ValueError("method 'cpca' requires non-empty 'known_rows'")
        if len(set(self.known_rows)) != len(self.known_rows):
            raise ValueError("'known_rows' must not repeat")
        return self

    def resolve(self) -> tuple[ConstraintModel, StructureMask]:
        """
        Load the true model and check ``known_rows`` against it.

        Raises:
            ConfigurationError: If known rows are out of range or leave nothing to estimate
        """
        if self.case is not None:
            case = get_case(self.case)
            model, mask = case.model(), case.mask()
        else:
            assert self.model_path is not None
            model, mask = load_model_files(self.model_path, self.mask_path)

        if any(not 0 <= k < model.m for k in self.known_rows):
            raise ConfigurationError(f"known_rows {self.known_rows} out of range for {model.m} rows")
        if Method.CPCA in self.methods and len(self.known_rows) >= model.m:
            raise ConfigurationError("known_rows must leave at least one row to estimate")
        return model, mask

    @property
    def source_name(self) -> str:
        return self.case if self.case is not None else str(self.model_path)


class ExperimentConfig(CaseSource):
    """
    A Monte-Carlo SNR sweep.

    A registry case supplies the SNR grid and sample count when the
    configuration leaves them out.
    """

    snr_grid: list[float] = Field(default_factory=lambda: list(DEFAULT_SNR_GRID))
    runs: int | None = Field(default=None, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    theta_normalize: bool = False

    @field_validator("snr_grid", mode="before")
    @classmethod
    def parse_snr_grid(cls, v: Any) -> Any:
        return [_parse_snr(s) for s in v] if isinstance(v, list) else v

    @field_validator("snr_grid")
    @classmethod
    def check_snr_grid(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("'snr_grid' must not be empty")
        if any(not s > 0 for s in v):
            raise ValueError("SNR values must be positive")
        return v

    @model_validator(mode="after")
    def apply_case_defaults(self) -> "ExperimentConfig":
        if self.case is None:
            return self
        case = get_case(self.case)
        if "snr_grid" not in self.model_fields_set:
            self.snr_grid = list(case.snr_grid)
        if "n_samples" not in self.model_fields_set:
            self.n_samples = case.n_samples
        return self

    @property
    def run_count(self) -> int:
        if self.runs is not None:
            return self.runs
        return get_case(self.case).default_runs if self.case is not None else 100

    def echo(self) -> dict[str, Any]:
        """JSON-safe copy of the configuration."""
        d = self.model_dump(mode="json")
        d["snr_grid"] = [snr_to_json(s) for s in self.snr_grid]
        d["runs"] = self.run_count
        return d


class FaultExperimentConfig(CaseSource):
    """Identify, average, inject faults and count detections."""

    methods: list[Method] = Field(
        default_factory=lambda: [Method.PCA, Method.SPCA, Method.CSPCA]
    )
    snr: float = 1000.0
    n_faulty: int = Field(default=50, ge=0)
    runs: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    tolerance: float = Field(default=1.0, gt=0.0)
    norm: Literal["l1", "l2"] = "l1"
    magnitude: FaultMagnitudeLaw = Field(default_factory=FaultMagnitudeLaw)
    fixed_models: dict[str, Path] = Field(default_factory=dict)

    @field_validator("snr", mode="before")
    @classmethod
    def parse_snr(cls, v: Any) -> Any:
        return _parse_snr(v)

    @field_validator("snr")
    @classmethod
    def check_snr(cls, v: float) -> float:
        return _check_snr(v)

    @model_validator(mode="after")
    def check_counts(self) -> "FaultExperimentConfig":
        if self.n_faulty > self.n_samples:
            raise ValueError("'n_faulty' cannot exceed 'n_samples'")
        reserved = {m.value for m in Method} | {"true"}
        clash = reserved & set(self.fixed_models)
        if clash:
            raise ValueError(f"fixed model names {sorted(clash)} are reserved")
        return self

    def echo(self) -> dict[str, Any]:
        d = self.model_dump(mode="json")
        d["snr"] = snr_to_json(self.snr)
        return d


class KnownRowSweepConfig(CaseSource):
    """
    PCA against cPCA at one SNR as true rows become known one at a time.

    ``known_rows`` gives the order in which rows are handed to cPCA; empty
    means rows 0 .. m-2 in index order.
    """

    methods: list[Method] = Field(default_factory=lambda: [Method.PCA, Method.CPCA])
    snr: float = 10.0
    runs: int = Field(default=100, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    error_norm: MatrixNorm = "spectral"

    @property
    def needs_known_rows(self) -> bool:
        return False

    @field_validator("snr", mode="before")
    @classmethod
    def parse_snr(cls, v: Any) -> Any:
        return _parse_snr(v)

    @field_validator("snr")
    @classmethod
    def check_snr(cls, v: float) -> float:
        return _check_snr(v)

    @field_validator("methods")
    @classmethod
    def check_methods(cls, v: list[Method]) -> list[Method]:
        other = [m.value for m in v if m not in (Method.PCA, Method.CPCA)]
        if other:
            raise ValueError(f"the known-row sweep compares pca and cpca only, got {other}")
        return v

    def row_order(self, m: int) -> list[int]:
        return list(self.known_rows) if self.known_rows else list(range(m - 1))

    def echo(self) -> dict[str, Any]:
        d = self.model_dump(mode="json")
        d["snr"] = snr_to_json(self.snr)
        return d


def load_config(path: Path, config_cls: type[C]) -> C:
    """
    Load and validate an experiment file.

    Raises:
        ConfigurationError: If the file is missing or fails validation
    """
    document = load_json(Path(path))
    if document is None:
        raise ConfigurationError(f"config file not found: {path}")
    try:
        return config_cls.model_validate(document)
    except ValidationError as e:
        raise ConfigurationError(f"invalid config {path}:\n{e}") from e


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one method in one cell."""

    method: str
    snr: float
    snr_index: int
    run: int
    theta: float
    theta_normalized: float
    error: str | None = None
    message: str | None = None


@dataclass(frozen=True)
class CellTask:
    """Everything one (SNR, run) cell needs; picklable for worker processes."""

    model: ConstraintModel
    mask: StructureMask
    methods: tuple[Method, ...]
    known_rows: tuple[int, ...]
    n_samples: int
    snr: float
    snr_index: int
    run: int
    master_seed: int
    options: IdentifyOptions


def run_cell(task: CellTask) -> list[RunRecord]:
    """Generate the cell's data set and score every method on it."""
    seed = derive_seed(task.master_seed, task.snr_index, task.run)
    ds = generate_dataset(task.model, task.n_samples, task.snr, seed)
    a_kn = task.model.a[list(task.known_rows)] if task.known_rows else None

    records: list[RunRecord] = []
    for method in task.methods:
        log = bind(logger, method=method.value, snr=task.snr, run=task.run)
        try:
            result = identify(
                method, ds.y, m=task.model.m, mask=task.mask, a_kn=a_kn, opts=task.options
            )
            raw = subspace_dependence(task.model.a, result.a_hat).theta
            normalized = subspace_dependence(task.model.a, result.a_hat, normalize_rows=True).theta
        except StructuredPCAError as e:
            log.warning(f"{method} failed: {type(e).__name__}: {e}")
            records.append(
                RunRecord(
                    method.value,
                    task.snr,
                    task.snr_index,
                    task.run,
                    math.nan,
                    math.nan,
                    type(e).__name__,
                    str(e),
                )
            )
            continue
        records.append(RunRecord(method.value, task.snr, task.snr_index, task.run, raw, normalized))
    return records


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    finite = values[~np.isnan(values)]
    if finite.size == 0:
        return math.nan, math.nan
    std = float(np.std(finite, ddof=1)) if finite.size > 1 else 0.0
    return float(np.mean(finite)), std


@dataclass
class ResultsTable:
    """Per-run thetas of a sweep with summary statistics."""

    config: ExperimentConfig
    records: list[RunRecord]
    wall_time: float = 0.0
    methods: list[str] = field(init=False)
    snr_grid: list[float] = field(init=False)

    def __post_init__(self) -> None:
        self.methods = [m.value for m in self.config.methods]
        self.snr_grid = list(self.config.snr_grid)

    @property
    def theta_mode(self) -> str:
        return "normalized" if self.config.theta_normalize else "raw"

    def theta_runs(self, method: str, snr_index: int, normalized: bool | None = None) -> np.ndarray:
        """Per-run thetas of one method at one grid position; failed runs are NaN."""
        if normalized is None:
            normalized = self.config.theta_normalize
        values = np.full(self.config.run_count, math.nan)
        for r in self.records:
            if r.method == method and r.snr_index == snr_index:
                values[r.run] = r.theta_normalized if normalized else r.theta
        return values

    def failures(self) -> list[RunRecord]:
        return [r for r in self.records if r.error is not None]

    def mean_theta(self, method: str, snr_index: int, normalized: bool | None = None) -> float:
        return _mean_std(self.theta_runs(method, snr_index, normalized))[0]

    def summary_rows(self, normalized: bool | None = None) -> list[dict[str, Any]]:
        rows = []
        for k, snr in enumerate(self.snr_grid):
            thetas = {m: self.theta_runs(m, k, normalized) for m in self.methods}
            best = best_instance_counts(thetas)
            for method in self.methods:
                mean, std = _mean_std(thetas[method])
                rows.append(
                    {
                        "method": method,
                        "snr": snr,
                        "snr_index": k,
                        "mean_theta": mean,
                        "std_theta": std,
                        "best_count": best[method],
                        "failed_runs": int(np.count_nonzero(np.isnan(thetas[method]))),
                    }
                )
        return rows

    def reference_rows(self) -> list[dict[str, Any]]:
        """Published mean thetas of the case next to the means of this sweep, both modes."""
        if self.config.case is None:
            return []
        rows = []
        for ref in get_case(self.config.case).reference:
            if ref.method not in self.methods:
                continue
            for k, snr in enumerate(self.snr_grid):
                if snr != ref.snr:
                    continue
                raw = self.mean_theta(ref.method, k, normalized=False)
                normalized = self.mean_theta(ref.method, k, normalized=True)
                rows.append(
                    {
                        "method": ref.method,
                        "snr": snr_to_json(snr),
                        "snr_index": k,
                        "target": ref.theta,
                        "achieved_raw": _json_float(raw),
                        "achieved_normalized": _json_float(normalized),
                        "relative_error_raw": _json_float((raw - ref.theta) / ref.theta),
                        "relative_error_normalized": _json_float((normalized - ref.theta) / ref.theta),
                    }
                )
        return rows

    def write(self, out_dir: Path) -> dict[str, Path]:
        """
        Write summary.csv, runs.csv and envelope.json into ``out_dir``.

        Wall time is logged, not written, so repeated sweeps give identical files.
        """
        out_dir.mkdir(parents=True, exist_ok=True)
        summary_path = out_dir / SUMMARY_FILE
        runs_path = out_dir / RUNS_FILE

        with open(summary_path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["method", "snr", "mean_theta", "std_theta", "best_count"])
            for row in self.summary_rows():
                writer.writerow(
                    [
                        row["method"],
                        _format_float(row["snr"]),
                        _format_float(row["mean_theta"]),
                        _format_float(row["std_theta"]),
                        row["best_count"],
                    ]
                )

        normalized = self.config.theta_normalize
        with open(runs_path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["method", "snr", "run", "theta"])
            for r in self.records:
                theta = r.theta_normalized if normalized else r.theta
                writer.writerow([r.method, _format_float(r.snr), r.run, _format_float(theta)])

        other = not normalized
        envelope = {
            "config": self.config.echo(),
            "case": self.config.source_name,
            "versions": _versions(),
            "rng_algorithm": RNG_ALGORITHM,
            "seed_derivation": "SeedSequence(master_seed, spawn_key=(snr_index, run_index))",
            "theta_mode": self.theta_mode,
            "other_mode": {
                "theta_mode": "normalized" if other else "raw",
                "mean_theta": {
                    m: [_json_float(self.mean_theta(m, k, other)) for k in range(len(self.snr_grid))]
                    for m in self.methods
                },
            },
            "reference": self.reference_rows(),
            "failures": [
                {
                    "method": r.method,
                    "snr": snr_to_json(r.snr),
                    "snr_index": r.snr_index,
                    "run": r.run,
                    "error": r.error,
                    "message": r.message,
                }
                for r in self.failures()
            ],
            "checksums": checksum_map([summary_path, runs_path]),
        }
        envelope_path = out_dir / ENVELOPE_FILE
        save_json(envelope_path, envelope)
        return {"summary": summary_path, "runs": runs_path, "envelope": envelope_path}


def build_tasks(config: ExperimentConfig) -> list[CellTask]:
    model, mask = config.resolve()
    return [
        CellTask(
            model=model,
            mask=mask,
            methods=tuple(config.methods),
            known_rows=tuple(config.known_rows),
            n_samples=config.n_samples,
            snr=snr,
            snr_index=k,
            run=run,
            master_seed=config.master_seed,
            options=config.options,
        )
        for k, snr in enumerate(config.snr_grid)
        for run in range(config.run_count)
    ]


@log_execution_time
def run_mc(config: ExperimentConfig, workers: int = 1) -> ResultsTable:
    """
    Run a sweep.

    Args:
        config: Validated sweep configuration
        workers: Worker processes; 1 runs in-process

    Returns:
        ResultsTable, identical for any worker count
    """
    tasks = build_tasks(config)
    log = bind(logger, case=config.source_name)
    log.info(
        f"Sweep of {config.source_name}: {len(config.snr_grid)} SNRs x {config.run_count} runs, "
        f"N={config.n_samples}, methods {[m.value for m in config.methods]}, {workers} worker(s)"
    )

    start = time.perf_counter()
    cells = _map_tasks(run_cell, tasks, workers)
    wall_time = time.perf_counter() - start

    table = ResultsTable(config=config, records=[r for cell in cells for r in cell], wall_time=wall_time)
    log.info(f"Sweep finished in {wall_time:.1f}s with {len(table.failures())} failed method runs")
    return table


@dataclass(frozen=True)
class KnownRowRecord:
    """One method in one run with ``known`` true rows given to cPCA."""

    known: int
    method: str
    run: int
    theta: float
    error_meas: float
    error_true: float
    error: str | None = None


@dataclass(frozen=True)
class KnownRowTask:
    """One run of the known-row sweep; picklable for worker processes."""

    model: ConstraintModel
    order: tuple[int, ...]
    methods: tuple[Method, ...]
    n_samples: int
    snr: float
    run: int
    master_seed: int
    options: IdentifyOptions
    error_norm: MatrixNorm


def _score(
    task: KnownRowTask, method: Method, known: int, y: np.ndarray, x: np.ndarray
) -> KnownRowRecord:
    a_kn = task.model.a[list(task.order[:known])] if method is Method.CPCA else None
    try:
        result = identify(method, y, m=task.model.m, a_kn=a_kn, opts=task.options)
        theta = subspace_dependence(task.model.a, result.a_hat).theta
        errors = reconciliation_error(result.a_hat, y, x, norm=task.error_norm)
    except StructuredPCAError as e:
        bind(logger, method=method.value, run=task.run).warning(
            f"{method} with {known} known rows failed: {type(e).__name__}: {e}"
        )
        return KnownRowRecord(known, method.value, task.run, math.nan, math.nan, math.nan, type(e).__name__)
    assert errors.true is not None
    return KnownRowRecord(known, method.value, task.run, theta, errors.meas, errors.true)


def run_known_row_cell(task: KnownRowTask) -> list[KnownRowRecord]:
    """Score every method at every known-row count on the run's data set."""
    ds = generate_dataset(task.model, task.n_samples, task.snr, derive_seed(task.master_seed, 0, task.run))
    records: list[KnownRowRecord] = []
    pca: KnownRowRecord | None = None
    for known in range(1, len(task.order) + 1):
        for method in task.methods:
            if method is Method.PCA:
                # PCA ignores the known rows; score it once and repeat
                if pca is None:
                    pca = _score(task, method, known, ds.y, ds.x)
                records.append(replace(pca, known=known))
            else:
                records.append(_score(task, method, known, ds.y, ds.x))
    return records


@dataclass
class KnownRowSweepTable:
    """Per-run scores of a known-row sweep."""

    config: KnownRowSweepConfig
    order: list[int]
    records: list[KnownRowRecord]

    def values(self, method: str, known: int, column: str) -> np.ndarray:
        """One score column (``theta``, ``error_meas`` or ``error_true``) over runs."""
        values = np.full(self.config.runs, math.nan)
        for r in self.records:
            if r.method == method and r.known == known:
                values[r.run] = getattr(r, column)
        return values

    def summary_rows(self) -> list[dict[str, Any]]:
        rows = []
        for known in range(1, len(self.order) + 1):
            for method in (m.value for m in self.config.methods):
                row: dict[str, Any] = {"known": known, "method": method}
                for column in ("theta", "error_meas", "error_true"):
                    row[f"mean_{column}"] = _mean_std(self.values(method, known, column))[0]
                rows.append(row)
        return rows

    def write(self, out_dir: Path) -> dict[str, Path]:
        """Write known_rows.csv and known_rows.json into ``out_dir``."""
        out_dir.mkdir(parents=True, exist_ok=True)
        summary_path = out_dir / KNOWN_ROWS_FILE
        columns = ["known", "method", "mean_theta", "mean_error_meas", "mean_error_true"]
        with open(summary_path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in self.summary_rows():
                writer.writerow(
                    [row["known"], row["method"]] + [_format_float(row[c]) for c in columns[2:]]
                )

        envelope = {
            "config": self.config.echo(),
            "case": self.config.source_name,
            "row_order": self.order,
            "versions": _versions(),
            "rng_algorithm": RNG_ALGORITHM,
            "seed_derivation": "SeedSequence(master_seed, spawn_key=(0, run_index))",
            "failures": [
                {"method": r.method, "known": r.known, "run": r.run, "error": r.error}
                for r in self.records
                if r.error is not None
            ],
            "checksums": checksum_map([summary_path]),
        }
        envelope_path = out_dir / KNOWN_ROWS_ENVELOPE_FILE
        save_json(envelope_path, envelope)
        return {"summary": summary_path, "envelope": envelope_path}


@log_execution_time
def run_known_row_sweep(config: KnownRowSweepConfig, workers: int = 1) -> KnownRowSweepTable:
    """
    Compare PCA and cPCA as the number of known rows grows.

    Every run draws one data set; all known-row counts and methods are
    scored on it.
    """
    model, _ = config.resolve()
    order = config.row_order(model.m)
    if not order or len(order) >= model.m:
        raise ConfigurationError(f"row order {order} must name between 1 and {model.m - 1} rows")
    tasks = [
        KnownRowTask(
            model=model,
            order=tuple(order),
            methods=tuple(config.methods),
            n_samples=config.n_samples,
            snr=config.snr,
            run=run,
            master_seed=config.master_seed,
            options=config.options,
            error_norm=config.error_norm,
        )
        for run in range(config.runs)
    ]
    log = bind(logger, case=config.source_name, snr=config.snr)
    log.info(f"Known-row sweep over rows {order}: {config.runs} runs, {workers} worker(s)")
    cells = _map_tasks(run_known_row_cell, tasks, workers)
    return KnownRowSweepTable(config=config, order=order, records=[r for cell in cells for r in cell])


def run_fault_experiment(config: FaultExperimentConfig) -> FaultExperimentResult:
    """Resolve the configured sources and run ``fault_experiment``."""
    model, mask = config.resolve()
    fixed = {name: read_matrix(path) for name, path in config.fixed_models.items()}
    return fault_experiment(
        model,
        config.methods,
        config.snr,
        config.n_faulty,
        config.magnitude,
        config.runs,
        config.seed,
        mask=mask,
        known_rows=config.known_rows,
        n_samples=config.n_samples,
        tolerance=config.tolerance,
        norm=config.norm,
        fixed_models=fixed,
        opts=config.options,
    )
