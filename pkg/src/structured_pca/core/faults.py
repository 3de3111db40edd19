"""
Residual-based fault detection with an identified constraint matrix.

A sample is flagged when the sum of its absolute constraint residuals
exceeds a tolerance. ``fault_experiment`` runs the full protocol: identify
a model per Monte-Carlo run, average the estimates, inject faults into a
fresh noisy data set and count what each averaged model detects.
"""

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from structured_pca.core.datagen import Stream, derive_seed, generate_dataset, make_rng
from structured_pca.core.identify import DEFAULT_OPTIONS, IdentifyOptions, identify
from structured_pca.core.matops import Mat, as_matrix
from structured_pca.core.metrics import reconcile
from structured_pca.core.models import FaultReport, Method, snr_to_json
from structured_pca.core.structure import ConstraintModel, StructureMask
from structured_pca.utils.exceptions import ShapeMismatch, StructuredPCAError
from structured_pca.utils.logging import bind, log_execution_time

logger = logging.getLogger(__name__)

Norm = Literal["l1", "l2"]

TRUE_MODEL = "true"


class FaultMagnitudeLaw(BaseModel):
    """
    How large an injected fault is.

    ``uniform`` draws the size from [``low``, ``scale``] times the standard
    deviation of the faulted channel, with a random sign; ``constant`` adds
    ``value`` as is.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["uniform", "constant"] = "uniform"
    scale: float = Field(default=5.0, ge=0.0)
    low: float = Field(default=0.0, ge=0.0)
    value: float = 0.0

    @model_validator(mode="after")
    def check_band(self) -> "FaultMagnitudeLaw":
        if self.low > self.scale:
            raise ValueError(f"low={self.low} exceeds scale={self.scale}")
        return self


def _check_shapes(a_hat: Mat, y: Mat) -> None:
    if a_hat.shape[1] != y.shape[0]:
        raise ShapeMismatch(f"model has {a_hat.shape[1]} columns, data has {y.shape[0]} variables")


def detect(
    a_hat: ArrayLike,
    y: ArrayLike,
    tolerance: float = 1.0,
    norm: Norm = "l1",
    oracle: ArrayLike | None = None,
    with_adjustments: bool = False,
) -> FaultReport:
    """
    Flag samples whose constraint residual exceeds ``tolerance``.

    Args:
        a_hat: m x n constraint matrix
        y: n x N samples
        tolerance: Flag threshold (> 0)
        norm: ``l1`` sums absolute residuals per sample, ``l2`` takes their Euclidean norm
        oracle: Optional N booleans marking truly faulty samples
        with_adjustments: Also report the reconciliation adjustment norm per sample

    Raises:
        ShapeMismatch: If the model width or oracle length does not match the data
    """
    if not tolerance > 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    a = as_matrix(a_hat, "model")
    data = as_matrix(y, "data")
    _check_shapes(a, data)

    r = a @ data
    residuals = np.sum(np.abs(r), axis=0) if norm == "l1" else np.linalg.norm(r, axis=0)

    truth = None
    if oracle is not None:
        truth = np.asarray(oracle, dtype=bool)
        if truth.shape != residuals.shape:
            raise ShapeMismatch(f"oracle has {truth.size} entries for {residuals.size} samples")

    adjustments = None
    if with_adjustments:
        adjustments = np.linalg.norm(data - reconcile(a, data), axis=0)

    return FaultReport(
        residuals=residuals,
        tolerance=tolerance,
        norm=norm,
        adjustments=adjustments,
        oracle=truth,
    )


def inject_faults(
    y: ArrayLike, n_faulty: int, law: FaultMagnitudeLaw, rng: np.random.Generator
) -> tuple[Mat, NDArray[np.bool_], NDArray[np.int_]]:
    """
    Perturb one random variable in each of ``n_faulty`` random samples.

    Returns:
        Faulty data, oracle flags (N booleans) and the perturbed variable per sample
    """
    data = as_matrix(y, "data").copy()
    n, n_samples = data.shape
    if not 0 <= n_faulty <= n_samples:
        raise ValueError(f"n_faulty={n_faulty} must lie in [0, {n_samples}]")

    samples = rng.choice(n_samples, size=n_faulty, replace=False)
    variables = rng.integers(0, n, size=n_faulty)
    if law.kind == "uniform":
        std = np.std(data, axis=1, ddof=1)[variables]
        sizes = rng.uniform(law.low, law.scale, size=n_faulty)
        signs = rng.choice([-1.0, 1.0], size=n_faulty)
        magnitudes = signs * sizes * std
    else:
        magnitudes = np.full(n_faulty, law.value)

    data[variables, samples] += magnitudes
    oracle = np.zeros(n_samples, dtype=bool)
    oracle[samples] = True
    return data, oracle, variables


def _match_rows(est: Mat, ref: Mat, rescale: bool) -> Mat:
    """
    Give each reference row the unmatched estimate row with the largest
    absolute cosine, sign-flipped to a non-negative inner product and, with
    ``rescale``, stretched to the reference row's norm.
    """
    if est.shape != ref.shape:
        raise ShapeMismatch(f"estimate shape {est.shape} differs from {ref.shape}")
    est_norms = np.linalg.norm(est, axis=1)
    ref_norms = np.linalg.norm(ref, axis=1)
    out = np.empty_like(est)
    free = list(range(est.shape[0]))
    for i, row in enumerate(ref):
        products = est[free] @ row
        cosines = products / np.where(est_norms[free] > 0.0, est_norms[free], 1.0)
        k = int(np.argmax(np.abs(cosines)))
        j = free.pop(k)
        matched = est[j] if products[k] >= 0 else -est[j]
        if rescale and est_norms[j] > 0.0:
            matched = matched * (ref_norms[i] / est_norms[j])
        out[i] = matched
    return out


def align_signs(estimates: Sequence[ArrayLike], reference: ArrayLike | None = None) -> list[Mat]:
    """
    Match the rows of every estimate to a reference.

    Without ``reference`` the first estimate is the reference and rows keep
    their scale. With ``reference`` (the true model in an experiment) every
    matched row is also rescaled to the norm of its reference row, so all
    estimates share the reference's row scaling.
    """
    mats = [as_matrix(e, "estimate") for e in estimates]
    if not mats:
        return []
    if reference is None:
        ref = mats[0]
        return [ref.copy()] + [_match_rows(est, ref, rescale=False) for est in mats[1:]]
    ref = as_matrix(reference, "reference")
    return [_match_rows(est, ref, rescale=True) for est in mats]


def average_estimates(estimates: Sequence[ArrayLike], reference: ArrayLike | None = None) -> Mat:
    """Elementwise mean of estimates aligned by ``align_signs``."""
    if not estimates:
        raise ValueError("no estimates to average")
    return np.mean(np.stack(align_signs(estimates, reference)), axis=0)


@dataclass
class FaultExperimentResult:
    """Per-source detection reports of one fault experiment."""

    n_faulty: int
    runs: int
    snr: float
    seed: int
    reports: dict[str, FaultReport]
    successful_runs: dict[str, int]
    failures: list[dict[str, Any]] = field(default_factory=list)
    averaged: dict[str, Mat] = field(default_factory=dict)

    @property
    def oracle_count(self) -> int:
        """Faults detected by the true model."""
        return int(self.reports[TRUE_MODEL].true_positive or 0)

    def detected(self) -> dict[str, int]:
        return {name: int(r.true_positive or 0) for name, r in self.reports.items()}

    def to_dict(self) -> dict[str, Any]:
        sources = {}
        for name, report in self.reports.items():
            sources[name] = {
                "detected": report.true_positive,
                "flagged": report.n_flagged,
                "false_positive": report.false_positive,
                "false_negative": report.false_negative,
                "successful_runs": self.successful_runs.get(name),
            }
        return {
            "n_faulty": self.n_faulty,
            "runs": self.runs,
            "snr": snr_to_json(self.snr),
            "seed": self.seed,
            "oracle_count": self.oracle_count,
            "sources": sources,
            "failures": self.failures,
        }


@log_execution_time
def fault_experiment(
    model: ConstraintModel,
    methods: Sequence[Method | str],
    snr: float,
    n_faulty: int,
    law: FaultMagnitudeLaw,
    runs: int,
    seed: int,
    *,
    mask: StructureMask | None = None,
    known_rows: Sequence[int] = (),
    n_samples: int = 1000,
    tolerance: float = 1.0,
    norm: Norm = "l1",
    fixed_models: Mapping[str, ArrayLike] | None = None,
    opts: IdentifyOptions = DEFAULT_OPTIONS,
) -> FaultExperimentResult:
    """
    Identify, average, inject and detect.

    Run r identifies every method on data seeded by ``derive_seed(seed, 0, r)``.
    Each estimate is matched row by row to the true model, sign-aligned and
    rescaled to the true row norms, then averaged per method, so every
    source is scored on the true model's row scaling. Faults are then
    injected into the noisy data set seeded by ``derive_seed(seed, 1, 0)``
    and each averaged model, the true model and any fixed models are scored
    against the injected faults.
    """
    methods = [Method(m) for m in methods]
    a_kn = model.a[list(known_rows)] if known_rows else None
    estimates: dict[str, list[Mat]] = {m.value: [] for m in methods}
    failures: list[dict[str, Any]] = []

    for run in range(runs):
        ds = generate_dataset(model, n_samples, snr, derive_seed(seed, 0, run))
        for method in methods:
            try:
                result = identify(method, ds.y, m=model.m, mask=mask, a_kn=a_kn, opts=opts)
            except StructuredPCAError as e:
                log = bind(logger, method=method.value, run=run)
                log.warning(f"Run {run} failed: {type(e).__name__}: {e}")
                failures.append(
                    {"method": method.value, "run": run, "error": type(e).__name__, "message": str(e)}
                )
                continue
            estimates[method.value].append(result.a_hat)

    eval_seed = derive_seed(seed, 1, 0)
    ds = generate_dataset(model, n_samples, snr, eval_seed)
    faulty, oracle, _ = inject_faults(ds.y, n_faulty, law, make_rng(eval_seed, Stream.FAULTS))

    sources: dict[str, Mat] = {TRUE_MODEL: model.a}
    averaged: dict[str, Mat] = {}
    for name, runs_ok in estimates.items():
        if runs_ok:
            averaged[name] = average_estimates(runs_ok, reference=model.a)
            sources[name] = averaged[name]
    for name, a in (fixed_models or {}).items():
        sources[name] = as_matrix(a, name)

    reports = {
        name: detect(a, faulty, tolerance=tolerance, norm=norm, oracle=oracle)
        for name, a in sources.items()
    }
    for name, report in reports.items():
        bind(logger, method=name, snr=snr).info(
            f"{name}: detected {report.true_positive}/{n_faulty} faults, {report.n_flagged} flags"
        )

    return FaultExperimentResult(
        n_faulty=n_faulty,
        runs=runs,
        snr=snr,
        seed=seed,
        reports=reports,
        successful_runs={name: len(v) for name, v in estimates.items()},
        failures=failures,
        averaged=averaged,
    )
