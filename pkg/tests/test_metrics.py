import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedpca.metrics import (
    REGISTERED_METRICS,
    MetricLog,
    procrustes_align_error,
    projection_error,
    qa_overlap,
    residual_rho,
    subspace_distance,
)
from oracles import projector_distance, rotation_grid_procrustes


class TestResidualRho:
    def test_diagonal_example(self):
        y = np.diag([3.0, 2.0, 1.0])
        assert residual_rho(y, 2) == pytest.approx(1.0, abs=1e-12)
        assert residual_rho(y, 1) == pytest.approx(np.sqrt(5.0), abs=1e-12)

    def test_zero_at_full_rank(self):
        y = np.random.default_rng(0).standard_normal((4, 9))
        assert residual_rho(y, 4) < 1e-12

    def test_r_zero_is_frobenius_norm(self):
        y = np.random.default_rng(1).standard_normal((5, 7))
        assert residual_rho(y, 0) == pytest.approx(np.linalg.norm(y), abs=1e-10)

    def test_monotone_in_r(self):
        y = np.random.default_rng(2).standard_normal((6, 10))
        vals = [residual_rho(y, r) for r in range(7)]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_range_check(self):
        with pytest.raises(ValueError):
            residual_rho(np.eye(3), 4)


class TestProjectionError:
    def test_axis_aligned_example(self):
        y = np.diag([3.0, 2.0])
        u = np.array([[1.0], [0.0]])
        # residual is the e2 column: ||(0,2)||^2 / 2
        assert projection_error(y, u) == pytest.approx(2.0, abs=1e-12)

    def test_zero_when_basis_spans_data(self):
        rng = np.random.default_rng(3)
        u = np.linalg.qr(rng.standard_normal((8, 3)))[0]
        y = u @ rng.standard_normal((3, 20))
        assert projection_error(y, u) < 1e-12

    def test_eckart_young_optimality(self):
        # the SVD basis beats any other basis of the same rank
        rng = np.random.default_rng(4)
        y = rng.standard_normal((7, 30))
        u_best = np.linalg.svd(y, full_matrices=False)[0][:, :3]
        best = projection_error(y, u_best)
        for seed in range(5):
            u_other = np.linalg.qr(np.random.default_rng(seed).standard_normal((7, 3)))[0]
            assert best <= projection_error(y, u_other) + 1e-12

    def test_matches_residual_rho(self):
        y = np.random.default_rng(5).standard_normal((6, 15))
        u = np.linalg.svd(y, full_matrices=False)[0][:, :2]
        assert projection_error(y, u) * 15 == pytest.approx(
            residual_rho(y, 2) ** 2, abs=1e-9
        )

    def test_rejects_skew_basis(self):
        with pytest.raises(ValueError):
            projection_error(np.eye(3), np.ones((3, 2)))


class TestQaOverlap:
    def test_identical_vectors(self):
        v = np.array([0.6, 0.8])
        assert qa_overlap(v, v) == pytest.approx(1.0)

    def test_sign_flip(self):
        v = np.array([0.6, 0.8])
        assert qa_overlap(v, -v) == pytest.approx(1.0)
        assert qa_overlap(v, -v, signed=True) == pytest.approx(-1.0)

    def test_orthogonal(self):
        assert qa_overlap(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            qa_overlap(np.array([1.0, 1.0]), np.array([1.0, 0.0]))


class TestSubspaceDistance:
    def test_axis_example_against_projector_oracle(self):
        e1 = np.eye(3)[:, :1]
        e2 = np.eye(3)[:, 1:2]
        assert subspace_distance(e1, e2) == pytest.approx(np.sqrt(2.0), abs=1e-12)
        assert projector_distance(e1, e2) == pytest.approx(np.sqrt(2.0), abs=1e-12)

    def test_matches_explicit_projectors(self):
        rng = np.random.default_rng(6)
        for _ in range(5):
            a = np.linalg.qr(rng.standard_normal((9, 3)))[0]
            b = np.linalg.qr(rng.standard_normal((9, 4)))[0]
            assert subspace_distance(a, b) == pytest.approx(
                projector_distance(a, b), abs=1e-10
            )

    def test_zero_on_same_span(self):
        rng = np.random.default_rng(7)
        a = np.linalg.qr(rng.standard_normal((6, 2)))[0]
        mix = np.linalg.qr(rng.standard_normal((2, 2)))[0]
        assert subspace_distance(a, a @ mix) < 1e-7


class TestProcrustesAlignError:
    def test_zero_under_exact_rotation(self):
        # the nuclear-norm route squares the norms before cancelling, so
        # an exact zero comes back as sqrt(rounding) ~ 1e-7
        rng = np.random.default_rng(8)
        a = rng.standard_normal((5, 5))
        w = np.linalg.qr(rng.standard_normal((5, 5)))[0]
        assert procrustes_align_error(a, a @ w.T) < 1e-6

    def test_zero_target_gives_source_norm(self):
        a = np.random.default_rng(9).standard_normal((4, 6))
        assert procrustes_align_error(a, np.zeros((4, 6))) == pytest.approx(
            np.linalg.norm(a), abs=1e-10
        )

    def test_matches_rotation_grid_oracle(self):
        rng = np.random.default_rng(10)
        a = rng.standard_normal((4, 2))
        b = rng.standard_normal((4, 2))
        fast = procrustes_align_error(a, b)
        brute = rotation_grid_procrustes(a, b)
        assert fast <= brute + 1e-9
        assert abs(fast - brute) < 1e-3  # grid resolution limits the match

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            procrustes_align_error(np.ones((3, 2)), np.ones((2, 3)))

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_never_exceeds_plain_distance(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((5, 3))
        b = rng.standard_normal((5, 3))
        assert procrustes_align_error(a, b) <= np.linalg.norm(a - b) + 1e-9


class TestMetricLog:
    def test_registry_enforced(self):
        log = MetricLog("run0")
        with pytest.raises(ValueError):
            log.add("made_up_metric", 1.0)

    def test_non_finite_rejected(self):
        log = MetricLog("run0")
        with pytest.raises(ValueError):
            log.add("rank", float("nan"))

    def test_csv_schema_and_params_encoding(self, tmp_path):
        log = MetricLog("abc123")
        log.add("rank", 4, t=0, client=2, alpha=0.5)
        log.add("merge_count", 3)
        p = tmp_path / "metrics.csv"
        log.write_csv(p)
        with open(p, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["run_id", "t", "metric", "value", "params"]
        assert rows[1] == ["abc123", "0", "rank", "4.0", '{"alpha":0.5,"client":2}']
        assert rows[2] == ["abc123", "", "merge_count", "3.0", "{}"]

    def test_params_keys_are_sorted(self):
        log = MetricLog("r")
        log.add("rank", 1, zebra=1, apple=2)
        assert log.rows()[0].params == '{"apple":2,"zebra":1}'

    def test_thread_safety(self):
        import threading

        log = MetricLog("r")

        def worker():
            for _ in range(500):
                log.add("rank", 1.0)

        threads = [threading.Thread(target=worker) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(log.rows()) == 4000

    def test_registry_contains_every_emitted_metric(self):
        for name in (
            "rank",
            "reconstruction_error",
            "global_value",
            "qa_signed",
            "qa_abs",
            "measured_error",
            "error_bound",
            "within_bound",
            "runtime_s",
        ):
            assert name in REGISTERED_METRICS
