import math

import numpy as np
import pytest
from pydantic import ValidationError

from structured_pca.core.faults import (
    TRUE_MODEL,
    FaultMagnitudeLaw,
    align_signs,
    average_estimates,
    detect,
    fault_experiment,
    inject_faults,
)
from structured_pca.utils.exceptions import ShapeMismatch, StructureInfeasible


class TestDetect:
    def test_zero_data(self, flow_mix):
        report = detect(flow_mix[0].a, np.zeros((5, 20)))
        assert report.n_flagged == 0
        assert np.all(report.residuals == 0.0)

    def test_consistent_data_never_flagged(self, flow_mix, flow_mix_clean):
        for tol in (1e-6, 1e-3, 1.0):
            assert detect(flow_mix[0].a, flow_mix_clean, tolerance=tol).n_flagged == 0

    def test_perturbed_variable(self, flow_mix, flow_mix_clean):
        y = flow_mix_clean[:, :1].copy()
        y[1, 0] += 10.0
        report = detect(flow_mix[0].a, y)
        assert report.residuals[0] == pytest.approx(20.0)
        assert report.flags[0]

    def test_l2_norm(self, flow_mix):
        y = np.zeros((5, 1))
        y[1, 0] = 10.0
        report = detect(flow_mix[0].a, y, norm="l2")
        assert report.residuals[0] == pytest.approx(10.0 * math.sqrt(2.0))

    def test_sign_flip_invariance(self, flow_mix, flow_mix_noisy):
        a = flow_mix[0].a
        flipped = np.diag([-1.0, 1.0, -1.0]) @ a
        np.testing.assert_allclose(
            detect(a, flow_mix_noisy.y).residuals, detect(flipped, flow_mix_noisy.y).residuals
        )

    def test_tolerance_monotone(self, flow_mix, flow_mix_noisy):
        counts = [detect(flow_mix[0].a, flow_mix_noisy.y, tolerance=t).n_flagged for t in (0.1, 0.5, 1, 2, 5)]
        assert counts == sorted(counts, reverse=True)

    def test_oracle_accounting(self, flow_mix):
        y = np.zeros((5, 4))
        y[0, 0] = 5.0
        y[0, 1] = 5.0
        oracle = [True, False, True, False]
        report = detect(flow_mix[0].a, y, oracle=oracle)
        assert (report.true_positive, report.false_positive, report.false_negative) == (1, 1, 1)

    def test_shape_mismatch(self, flow_mix):
        with pytest.raises(ShapeMismatch):
            detect(flow_mix[0].a, np.zeros((4, 3)))

    def test_adjustments(self, flow_mix, flow_mix_clean):
        report = detect(flow_mix[0].a, flow_mix_clean, with_adjustments=True)
        assert np.max(report.adjustments) < 1e-9 * np.max(np.abs(flow_mix_clean))


class TestInjectFaults:
    def test_exact_separation(self, flow_mix, flow_mix_clean):
        rng = np.random.default_rng(0)
        faulty, oracle, _ = inject_faults(flow_mix_clean, 50, FaultMagnitudeLaw(kind="constant", value=100.0), rng)
        report = detect(flow_mix[0].a, faulty, oracle=oracle)
        assert oracle.sum() == 50
        assert report.true_positive == 50
        assert report.false_positive == 0

    def test_zero_magnitude(self, flow_mix, flow_mix_clean):
        rng = np.random.default_rng(0)
        faulty, oracle, _ = inject_faults(flow_mix_clean, 50, FaultMagnitudeLaw(kind="constant", value=0.0), rng)
        assert detect(flow_mix[0].a, faulty, oracle=oracle).n_flagged == 0

    def test_one_variable_per_sample(self, flow_mix_clean):
        rng = np.random.default_rng(1)
        faulty, oracle, _ = inject_faults(flow_mix_clean, 10, FaultMagnitudeLaw(), rng)
        changed = faulty != flow_mix_clean
        assert np.all(changed.sum(axis=0)[oracle] == 1)
        assert not np.any(changed[:, ~oracle])

    def test_too_many(self, flow_mix_clean):
        with pytest.raises(ValueError):
            inject_faults(flow_mix_clean, 2000, FaultMagnitudeLaw(), np.random.default_rng(0))

    def test_uniform_band(self, flow_mix_clean):
        law = FaultMagnitudeLaw(low=2.0, scale=5.0)
        faulty, oracle, _ = inject_faults(flow_mix_clean, 200, law, np.random.default_rng(3))
        std = np.std(flow_mix_clean, axis=1, ddof=1)
        diff = (faulty - flow_mix_clean)[:, oracle]
        rows = np.argmax(np.abs(diff), axis=0)
        deltas = diff[rows, np.arange(diff.shape[1])]
        ratios = np.abs(deltas) / std[rows]
        assert np.all(ratios >= 2.0 - 1e-9)
        assert np.all(ratios <= 5.0 + 1e-9)
        assert np.any(deltas > 0) and np.any(deltas < 0)

    def test_band_must_be_ordered(self):
        with pytest.raises(ValidationError):
            FaultMagnitudeLaw(low=6.0, scale=5.0)


class TestAveraging:
    def test_align_recovers_sign_and_order(self):
        ref = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        other = np.array([[0.0, -1.0, 0.0], [-1.0, 0.0, 0.0]])
        aligned = align_signs([ref, other])
        np.testing.assert_array_equal(aligned[1], ref)

    def test_average_does_not_cancel(self, flow_mix):
        a = flow_mix[0].a
        avg = average_estimates([a, -a, np.diag([1.0, -1.0, 1.0]) @ a])
        np.testing.assert_allclose(avg, a)

    def test_empty(self):
        with pytest.raises(ValueError):
            average_estimates([])

    def test_reference_restores_true_rows(self, flow_mix):
        a = flow_mix[0].a
        units = a / np.linalg.norm(a, axis=1, keepdims=True)
        shuffled = np.diag([-1.0, 1.0, -1.0]) @ units[[2, 0, 1]]
        for aligned in align_signs([units, shuffled], reference=a):
            np.testing.assert_allclose(aligned, a, atol=1e-12)

    def test_reference_scale_shrinks_rotated_estimates(self):
        ref = np.array([[2.0, 0.0, 0.0], [0.0, 3.0, 0.0]])
        rotated = np.array([[0.6, 0.8, 0.0], [-0.8, 0.6, 0.0]])
        avg = average_estimates([np.eye(3)[:2], rotated], reference=ref)
        np.testing.assert_allclose(avg, [[1.8, -0.6, 0.0], [0.9, 2.7, 0.0]], atol=1e-12)
        assert np.all(np.linalg.norm(avg, axis=1) < np.linalg.norm(ref, axis=1))

    def test_reference_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            align_signs([np.eye(3)], reference=np.eye(3)[:2])


class TestFaultExperiment:
    def test_noise_free_counts(self, flow_mix):
        model, mask = flow_mix
        result = fault_experiment(
            model,
            ["pca", "spca", "cspca"],
            math.inf,
            20,
            FaultMagnitudeLaw(kind="constant", value=100.0),
            runs=2,
            seed=1,
            mask=mask,
            n_samples=200,
            fixed_models={"given": model.a},
        )
        assert result.oracle_count == 20
        assert result.detected()["given"] == 20
        assert result.detected()["spca"] == 20
        np.testing.assert_allclose(result.averaged["spca"], model.a, atol=1e-6)
        assert result.successful_runs == {"pca": 2, "spca": 2, "cspca": 2}
        assert not result.failures

    def test_deterministic(self, flow_mix):
        model, mask = flow_mix
        kwargs = dict(mask=mask, n_samples=200)
        a = fault_experiment(model, ["spca"], 100.0, 10, FaultMagnitudeLaw(), 3, 5, **kwargs)
        b = fault_experiment(model, ["spca"], 100.0, 10, FaultMagnitudeLaw(), 3, 5, **kwargs)
        assert a.to_dict() == b.to_dict()
        assert TRUE_MODEL in a.to_dict()["sources"]

    def test_failures_recorded(self, flow_mix, mocker):
        mocker.patch("structured_pca.core.faults.identify", side_effect=StructureInfeasible("boom"))
        model, mask = flow_mix
        result = fault_experiment(model, ["spca"], 100.0, 5, FaultMagnitudeLaw(), 2, 0, mask=mask, n_samples=100)
        assert len(result.failures) == 2
        assert result.failures[0]["error"] == "StructureInfeasible"
        assert "spca" not in result.reports


@pytest.mark.slow
class TestFaultOrdering:
    def test_structured_methods_detect_more(self, flow_mix):
        model, mask = flow_mix
        totals = {"pca": 0, "spca": 0, "cspca": 0}
        for rep in range(10):
            result = fault_experiment(
                model, ["pca", "spca", "cspca"], 1000.0, 50, FaultMagnitudeLaw(), 100, rep, mask=mask
            )
            for name in totals:
                totals[name] += result.detected()[name]
        assert totals["cspca"] >= totals["spca"] >= totals["pca"]

