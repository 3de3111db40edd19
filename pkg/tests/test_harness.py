"""Sweep configuration, seeding and result files."""

import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from structured_pca.core.artifacts import write_matrix
from structured_pca.experiments.harness import (
    ENVELOPE_FILE,
    KNOWN_ROWS_ENVELOPE_FILE,
    KNOWN_ROWS_FILE,
    RUNS_FILE,
    SUMMARY_FILE,
    ExperimentConfig,
    FaultExperimentConfig,
    KnownRowSweepConfig,
    build_tasks,
    load_config,
    run_fault_experiment,
    run_known_row_sweep,
    run_mc,
)
from structured_pca.experiments.registry import DEFAULT_SNR_GRID
from structured_pca.utils.exceptions import ConfigurationError, StructureInfeasible


def small_config(**overrides) -> ExperimentConfig:
    fields = {
        "case": "flow-mix",
        "methods": ["pca", "spca", "cspca", "cpca"],
        "snr_grid": [10, 100],
        "runs": 4,
        "master_seed": 7,
        "n_samples": 200,
    }
    fields.update(overrides)
    return ExperimentConfig.model_validate(fields)


class TestExperimentConfig:
    def test_defaults(self):
        config = ExperimentConfig(case="flow-mix")
        assert config.run_count == 1000
        assert config.snr_grid[0] == 10.0
        assert [m.value for m in config.methods] == ["pca", "spca"]

    def test_case_supplies_grid_and_sample_count(self):
        flow = ExperimentConfig(case="flow-mix")
        assert flow.snr_grid == [10.0]
        assert flow.n_samples == 100
        other = ExperimentConfig(case="cs3")
        assert other.snr_grid == list(DEFAULT_SNR_GRID)
        assert other.n_samples == 1000

    def test_explicit_values_beat_case_defaults(self):
        config = ExperimentConfig(case="flow-mix", snr_grid=[50], n_samples=400)
        assert config.snr_grid == [50.0]
        assert config.n_samples == 400
        assert config.echo()["n_samples"] == 400

    def test_cpca_takes_case_known_rows(self):
        assert small_config().known_rows == [0]

    def test_inf_snr(self):
        config = small_config(snr_grid=[10, "inf"])
        assert math.isinf(config.snr_grid[1])
        assert config.echo()["snr_grid"] == [10.0, "inf"]

    @pytest.mark.parametrize(
        "overrides",
        [
            {"snr_grid": []},
            {"snr_grid": [10, -1]},
            {"case": "no-such-case"},
            {"model_path": "a.csv"},
            {"methods": []},
            {"methods": ["ica"]},
            {"known_rows": [0, 0]},
            {"runs": 0},
        ],
    )
    def test_rejects(self, overrides):
        with pytest.raises(ValidationError):
            small_config(**overrides)

    def test_file_source_needs_known_rows_for_cpca(self, tmp_path, flow_mix):
        write_matrix(tmp_path / "a.csv", flow_mix[0].a)
        with pytest.raises(ValidationError):
            ExperimentConfig(model_path=tmp_path / "a.csv", methods=["cpca"])
        config = ExperimentConfig(model_path=tmp_path / "a.csv")
        assert config.run_count == 100
        assert config.resolve()[1] == flow_mix[1]

    def test_known_rows_out_of_range(self):
        with pytest.raises(ConfigurationError):
            small_config(known_rows=[5]).resolve()
        with pytest.raises(ConfigurationError):
            small_config(known_rows=[0, 1, 2]).resolve()

    def test_load_config(self, tmp_path):
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps({"case": "cs3", "snr_grid": ["inf"], "runs": 2}))
        config = load_config(path, ExperimentConfig)
        assert config.case == "cs3"

    def test_load_config_errors(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "missing.json", ExperimentConfig)
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"case": "cs3", "runs": -1}))
        with pytest.raises(ConfigurationError):
            load_config(path, ExperimentConfig)


class TestRunMC:
    def test_grid_and_paired_seeds(self):
        tasks = build_tasks(small_config())
        assert [(t.snr_index, t.run) for t in tasks[:5]] == [(0, 0), (0, 1), (0, 2), (0, 3), (1, 0)]
        assert len(tasks) == 8

    def test_deterministic(self):
        a = run_mc(small_config())
        b = run_mc(small_config())
        assert a.records == b.records

    def test_master_seed_matters(self):
        a = run_mc(small_config())
        b = run_mc(small_config(master_seed=8))
        assert a.records != b.records

    def test_workers_do_not_change_results(self):
        assert run_mc(small_config(), workers=2).records == run_mc(small_config()).records

    def test_noise_free_sweep(self):
        table = run_mc(small_config(snr_grid=["inf"], runs=2))
        for method in table.methods:
            assert np.all(table.theta_runs(method, 0) < 1e-8)

    def test_summary(self):
        table = run_mc(small_config())
        rows = table.summary_rows()
        assert len(rows) == 8
        for k in range(2):
            assert sum(r["best_count"] for r in rows if r["snr_index"] == k) <= 4
        assert all(r["failed_runs"] == 0 for r in rows)

    def test_repeated_snr_cells_stay_apart(self):
        table = run_mc(small_config(snr_grid=[100, 100], runs=3))
        for method in table.methods:
            first, second = table.theta_runs(method, 0), table.theta_runs(method, 1)
            assert not np.any(np.isnan(first)) and not np.any(np.isnan(second))
            assert not np.array_equal(first, second)
        assert len(table.summary_rows()) == 2 * len(table.methods)

    def test_theta_decreases_with_snr(self):
        table = run_mc(small_config(snr_grid=[10, 5000], runs=20))
        for method in table.methods:
            assert table.mean_theta(method, 1) < table.mean_theta(method, 0)

    def test_failures_are_recorded(self, mocker, tmp_path):
        mocker.patch(
            "structured_pca.experiments.harness.identify",
            side_effect=StructureInfeasible("no admissible row"),
        )
        table = run_mc(small_config(methods=["spca"], runs=2))
        assert len(table.failures()) == 4
        assert all(math.isnan(v) for v in table.theta_runs("spca", 0))
        assert table.summary_rows()[0]["failed_runs"] == 2

        table.write(tmp_path)
        envelope = json.loads((tmp_path / ENVELOPE_FILE).read_text())
        assert envelope["failures"][0]["error"] == "StructureInfeasible"
        assert envelope["other_mode"]["mean_theta"]["spca"] == [None, None]
        assert "nan" in (tmp_path / SUMMARY_FILE).read_text()


class TestResultFiles:
    def test_repeatable_bytes(self, tmp_path):
        run_mc(small_config()).write(tmp_path / "a")
        run_mc(small_config(), workers=2).write(tmp_path / "b")
        for name in (SUMMARY_FILE, RUNS_FILE, ENVELOPE_FILE):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_layout(self, tmp_path):
        paths = run_mc(small_config(snr_grid=["inf"], runs=2)).write(tmp_path)
        summary = paths["summary"].read_text().splitlines()
        assert summary[0] == "method,snr,mean_theta,std_theta,best_count"
        assert summary[1].startswith("pca,inf,")
        runs = paths["runs"].read_text().splitlines()
        assert runs[0] == "method,snr,run,theta"
        assert len(runs) == 1 + 4 * 2

        envelope = json.loads(paths["envelope"].read_text())
        assert envelope["theta_mode"] == "raw"
        assert envelope["other_mode"]["theta_mode"] == "normalized"
        assert envelope["rng_algorithm"] == "PCG64"
        assert envelope["config"]["runs"] == 2
        assert set(envelope["checksums"]) == {SUMMARY_FILE, RUNS_FILE}
        assert "wall_time" not in envelope

    def test_reference_rows(self, tmp_path):
        table = run_mc(small_config(methods=["pca", "spca", "cpca"], runs=2))
        rows = table.reference_rows()
        assert [(r["method"], r["snr_index"], r["target"]) for r in rows] == [
            ("pca", 0, 0.1293),
            ("spca", 0, 0.1188),
            ("cpca", 0, 0.0747),
        ]
        row = rows[0]
        assert row["relative_error_raw"] == pytest.approx((row["achieved_raw"] - 0.1293) / 0.1293)
        paths = table.write(tmp_path)
        assert json.loads(paths["envelope"].read_text())["reference"] == rows

    def test_no_reference_for_other_cases(self):
        table = run_mc(small_config(case="cs3", methods=["pca"], snr_grid=[10], runs=2))
        assert table.reference_rows() == []

    def test_normalized_mode(self, tmp_path):
        raw = run_mc(small_config())
        normalized = run_mc(small_config(theta_normalize=True))
        assert normalized.summary_rows()[0]["mean_theta"] == pytest.approx(
            raw.mean_theta("pca", 0, normalized=True)
        )


class TestFaultExperimentConfig:
    def test_defaults(self):
        config = FaultExperimentConfig(case="flow-mix")
        assert [m.value for m in config.methods] == ["pca", "spca", "cspca"]
        assert config.snr == 1000.0 and config.n_faulty == 50

    @pytest.mark.parametrize(
        "overrides",
        [
            {"fixed_models": {"spca": "a.csv"}},
            {"fixed_models": {"true": "a.csv"}},
            {"n_faulty": 2000},
            {"tolerance": 0},
            {"snr": 0},
            {"magnitude": {"kind": "gaussian"}},
        ],
    )
    def test_rejects(self, overrides):
        with pytest.raises(ValidationError):
            FaultExperimentConfig(case="flow-mix", **overrides)

    def test_run_with_fixed_model(self, tmp_path, flow_mix):
        write_matrix(tmp_path / "given.csv", flow_mix[0].a)
        config = FaultExperimentConfig(
            case="flow-mix",
            methods=["spca"],
            snr="inf",
            n_faulty=10,
            runs=2,
            n_samples=100,
            magnitude={"kind": "constant", "value": 50.0},
            fixed_models={"given": tmp_path / "given.csv"},
        )
        result = run_fault_experiment(config)
        assert result.detected() == {"true": 10, "spca": 10, "given": 10}
        assert config.echo()["snr"] == "inf"


def small_sweep(**overrides) -> KnownRowSweepConfig:
    fields = {"case": "flow-mix", "snr": 10, "runs": 6, "master_seed": 5, "n_samples": 200}
    fields.update(overrides)
    return KnownRowSweepConfig.model_validate(fields)


class TestKnownRowSweep:
    def test_default_order(self):
        table = run_known_row_sweep(small_sweep(runs=1))
        assert table.order == [0, 1]
        assert {r.known for r in table.records} == {1, 2}

    def test_pca_fits_measurements_best(self):
        # the smallest-eigenvalue subspace minimises the spectral adjustment
        table = run_known_row_sweep(small_sweep())
        for known in (1, 2):
            pca = table.values("pca", known, "error_meas")
            cpca = table.values("cpca", known, "error_meas")
            assert np.all(pca <= cpca * (1 + 1e-9))

    def test_known_rows_help_cpca(self):
        table = run_known_row_sweep(small_sweep(runs=30))
        assert np.mean(table.values("cpca", 2, "theta")) < np.mean(table.values("pca", 2, "theta"))
        assert not any(r.error for r in table.records)

    def test_pca_scored_once_per_run(self):
        table = run_known_row_sweep(small_sweep(runs=2))
        np.testing.assert_array_equal(table.values("pca", 1, "theta"), table.values("pca", 2, "theta"))

    def test_order_too_long(self):
        with pytest.raises(ConfigurationError):
            run_known_row_sweep(small_sweep(known_rows=[0, 1, 2]))

    def test_rejects_structured_methods(self):
        with pytest.raises(ValidationError):
            small_sweep(methods=["pca", "spca"])

    def test_write(self, tmp_path):
        paths = run_known_row_sweep(small_sweep(runs=2, known_rows=[2])).write(tmp_path)
        lines = paths["summary"].read_text().splitlines()
        assert paths["summary"].name == KNOWN_ROWS_FILE
        assert lines[0] == "known,method,mean_theta,mean_error_meas,mean_error_true"
        assert [line.split(",")[:2] for line in lines[1:]] == [["1", "pca"], ["1", "cpca"]]
        envelope = json.loads((tmp_path / KNOWN_ROWS_ENVELOPE_FILE).read_text())
        assert envelope["row_order"] == [2]
        assert envelope["config"]["error_norm"] == "spectral"
        assert envelope["failures"] == []


@pytest.mark.slow
class TestFlowMixComparison:
    """Published flow-mixing comparison at SNR 10 over 1000 runs of 100 samples."""

    @pytest.fixture(scope="class")
    def table(self):
        config = ExperimentConfig(case="flow-mix", methods=["pca", "spca", "cpca"], master_seed=20240101)
        assert config.n_samples == 100 and config.snr_grid == [10.0]
        return run_mc(config, workers=4)

    def test_raw_levels(self, table):
        assert 0.10 <= table.mean_theta("pca", 0) <= 0.16
        assert 0.09 <= table.mean_theta("spca", 0) <= 0.15
        assert 0.75 * 0.0747 <= table.mean_theta("cpca", 0) <= 1.25 * 0.0747

    def test_ordering(self, table):
        for normalized in (False, True):
            means = {m: table.mean_theta(m, 0, normalized) for m in ("pca", "spca", "cpca")}
            assert means["cpca"] < means["spca"] < means["pca"]

    def test_reference_agreement(self, table):
        rows = table.reference_rows()
        assert len(rows) == 3
        assert all(abs(r["relative_error_raw"]) <= 0.25 for r in rows)


@pytest.mark.slow
def test_cs3_structured_methods_win():
    config = ExperimentConfig(case="cs3", methods=["pca", "spca", "cspca"], runs=300, master_seed=3)
    table = run_mc(config, workers=4)
    ratios = []
    for k, snr in enumerate(table.snr_grid):
        spca = table.theta_runs("spca", k)
        if snr >= 50:
            assert np.mean(spca) < table.mean_theta("pca", k)
        diff = table.theta_runs("cspca", k) - spca
        # paired over runs: cspca never significantly worse than spca
        assert np.mean(diff) <= 3.0 * np.std(diff, ddof=1) / np.sqrt(diff.size)
        ratios.append(table.mean_theta("cspca", k) / np.mean(spca))
    assert np.mean(ratios) < 1.0
