"""
Synthetic data in the null space of a true model, corrupted by
SNR-calibrated white Gaussian noise.

Randomness flows from one integer seed through ``numpy.random.SeedSequence``
spawn keys, so the signal coefficients, the noise and the fault draws use
independent PCG64 streams: changing the SNR never perturbs the signal.
"""

import logging
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Literal

import numpy as np

from structured_pca.core.matops import Mat, as_matrix, null_space_basis
from structured_pca.core.models import DataSet
from structured_pca.core.structure import ConstraintModel
from structured_pca.utils.exceptions import DegenerateSignal, InvalidGenSpec

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "PCG64"

CoeffLaw = Literal["standard-normal", "uniform"]


class Stream(IntEnum):
    """Independent random streams derived from one seed."""

    SIGNAL = 0
    NOISE = 1
    FAULTS = 2


def make_rng(seed: int, stream: Stream) -> np.random.Generator:
    """PCG64 generator for ``stream`` of ``seed``."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),)))
    )


@dataclass(frozen=True)
class GenSpec:
    """What to simulate: the true model, sample count, coefficient law and seed."""

    model: ConstraintModel
    n_samples: int
    seed: int
    coeff_law: CoeffLaw = "standard-normal"

    def __post_init__(self) -> None:
        min_samples = self.model.n - self.model.m + 1
        if self.n_samples < min_samples:
            raise InvalidGenSpec(
                f"n_samples={self.n_samples} cannot span a null space of dimension "
                f"{self.model.n - self.model.m}; need at least {min_samples}"
            )
        if self.coeff_law not in ("standard-normal", "uniform"):
            raise InvalidGenSpec(f"unknown coefficient law: {self.coeff_law}")


def simulate(spec: GenSpec) -> Mat:
    """
    Noise-free data X = B M with B an orthonormal null-space basis of A0.

    Returns:
        n x N matrix satisfying A0 X = 0 to rounding
    """
    basis = null_space_basis(spec.model.a)
    rng = make_rng(spec.seed, Stream.SIGNAL)
    shape = (basis.shape[1], spec.n_samples)
    if spec.coeff_law == "uniform":
        coeffs = rng.uniform(-1.0, 1.0, size=shape)
    else:
        coeffs = rng.standard_normal(size=shape)
    return basis @ coeffs


def add_noise(
    x: Mat, snr: float, seed: int, per_channel: bool = False
) -> tuple[Mat, float | np.ndarray]:
    """
    Corrupt ``x`` with white Gaussian noise at the given SNR.

    The default homoscedastic mode uses one sigma for all channels:
    sigma^2 = mean_i var(x_i) / snr. ``per_channel=True`` calibrates each
    channel to its own variance and returns the vector of sigmas.

    Raises:
        DegenerateSignal: If every channel variance is zero
        ValueError: If snr is not positive
    """
    x = as_matrix(x, "x")
    if not snr > 0:
        raise ValueError(f"snr must be positive, got {snr}")
    if math.isinf(snr):
        return x.copy(), (np.zeros(x.shape[0]) if per_channel else 0.0)

    variances = np.var(x, axis=1, ddof=1)
    if not np.any(variances > 0.0):
        raise DegenerateSignal("all channel variances are zero; SNR is undefined")

    rng = make_rng(seed, Stream.NOISE)
    e = rng.standard_normal(size=x.shape)
    if per_channel:
        sigmas = np.sqrt(variances / snr)
        return x + sigmas[:, None] * e, sigmas

    sigma = math.sqrt(float(np.mean(variances)) / snr)
    return x + sigma * e, sigma


def generate_dataset(
    model: ConstraintModel,
    n_samples: int,
    snr: float,
    seed: int,
    coeff_law: CoeffLaw = "standard-normal",
    per_channel: bool = False,
) -> DataSet:
    """Simulate noise-free data for ``model`` and add noise at ``snr``."""
    x = simulate(GenSpec(model=model, n_samples=n_samples, seed=seed, coeff_law=coeff_law))
    y, sigma = add_noise(x, snr, seed, per_channel=per_channel)
    # per-channel mode reports the RMS sigma
    sigma_value = float(np.sqrt(np.mean(np.square(sigma)))) if per_channel else float(sigma)
    logger.debug(f"Generated {model.n}x{n_samples} data, snr={snr}, sigma={sigma_value:.4g}")
    return DataSet(
        x=x,
        y=y,
        sigma=sigma_value,
        seed=seed,
        snr=snr,
        rng_algorithm=RNG_ALGORITHM,
        coeff_law=coeff_law,
        per_channel=per_channel,
    )


def derive_seed(master_seed: int, *indices: int) -> int:
    """
    Seed for one experiment cell, a pure function of the master seed and
    the cell indices (e.g. SNR index and run index).
    """
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(i) for i in indices))
    return int(seq.generate_state(1, np.uint64)[0])
