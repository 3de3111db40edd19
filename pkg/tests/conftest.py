"""Shared fixtures: case-study models, data sets and random structured models."""

import logging

import numpy as np
import pytest

from structured_pca.core.datagen import GenSpec, generate_dataset, simulate
from structured_pca.core.structure import ConstraintModel, StructureMask
from structured_pca.experiments.registry import registry_lookup
from structured_pca.utils.logging import JsonFormatter, TextFormatter

CS3_LABELS = ["S", "C", "C", "C"]


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    """Keep tests independent of the caller's environment and .env file."""
    for name in (
        "LOG_LEVEL",
        "LOG_JSON",
        "LOG_FILE",
        "RANK_TOL_REL",
        "CENTER_DATA",
        "MC_WORKERS",
        "RESULTS_DIR",
    ):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)

    # drop whatever setup_logging() installed
    root = logging.getLogger()
    level = root.level
    yield
    for handler in list(root.handlers):
        if isinstance(handler.formatter, JsonFormatter | TextFormatter):
            root.removeHandler(handler)
            handler.close()
    root.setLevel(level)


@pytest.fixture
def flow_mix():
    return registry_lookup("flow-mix")


@pytest.fixture
def cs1():
    return registry_lookup("cs1")


@pytest.fixture
def cs3():
    return registry_lookup("cs3")


@pytest.fixture
def flow_mix_clean(flow_mix):
    model, _ = flow_mix
    return simulate(GenSpec(model=model, n_samples=1000, seed=11))


@pytest.fixture
def flow_mix_noisy(flow_mix):
    model, _ = flow_mix
    return generate_dataset(model, 1000, 10.0, seed=5)


def random_structured_model(rng: np.random.Generator, n: int, m: int) -> ConstraintModel:
    """
    Random model whose rows each own one private column plus a random set
    of shared columns.

    Every entry has magnitude in [0.5, 1.5], so each row keeps a clear
    component outside the span of the others.
    """
    if m > n - 2:
        raise ValueError("need at least two shared columns")
    shared = np.arange(m, n)
    mask = np.zeros((m, n), dtype=bool)
    for i in range(m):
        mask[i, i] = True
        k = rng.integers(1, shared.size + 1)
        mask[i, rng.choice(shared, size=k, replace=False)] = True
    values = rng.uniform(0.5, 1.5, size=(m, n)) * rng.choice([-1.0, 1.0], size=(m, n))
    return ConstraintModel(np.where(mask, values, 0.0), StructureMask(mask))


@pytest.fixture
def random_models():
    rng = np.random.default_rng(2024)
    models = []
    for _ in range(50):
        n = int(rng.integers(4, 9))
        m = int(rng.integers(1, n - 1))
        models.append(random_structured_model(rng, n, m))
    return models
