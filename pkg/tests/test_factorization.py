import numpy as np
import pytest
from scipy.stats import spearmanr

from outlier_explorer.data import FeatureSubspace
from outlier_explorer.detectors import DetectorResult, normalize_scores
from outlier_explorer.errors import ParameterError
from outlier_explorer.factorization import (OutlierMatrix, PerspectiveSet,
                                            build_outlier_matrix,
                                            ensemble_scores,
                                            extract_perspectives, klnmf)
from outlier_explorer.subspaces import CandidateDetector


def matrix(values):
    values = np.asarray(values, dtype=float)
    return OutlierMatrix(values, tuple(f"d{i}" for i in range(values.shape[0])))


def block_rank_g(g, rng, t=None, n=36, bleed=0.02):
    """Strictly positive rank-g matrix with block-dominant factors."""
    t = t or 4 * g
    lam = np.full((t, g), bleed)
    for i in range(t):
        lam[i, i % g] = rng.uniform(0.8, 1.0)
    omega = np.full((g, n), bleed)
    for j in range(n):
        omega[j % g, j] = rng.uniform(0.8, 1.0)
    product = lam @ omega
    return matrix(product / product.max())


def fake_result(scores, name="lof"):
    scores = np.asarray(scores, dtype=float)
    cand = CandidateDetector(name, FeatureSubspace((0,)), "prioritized")
    return DetectorResult(cand, scores, normalize_scores(scores), 0.001)


class TestBuildOutlierMatrix:
    def test_stacks_rows_in_order(self):
        results = [fake_result([1.0, 2.0, 3.0, 4.0]),
                   fake_result([4.0, 3.0, 2.0, 1.0], name="md")]
        delta = build_outlier_matrix(results)
        assert delta.values.shape == (2, 4)
        assert np.allclose(delta.values[0], [0, 1 / 3, 2 / 3, 1.0])

    def test_identical_detectors_identical_rows(self):
        results = [fake_result([1.0, 5.0, 2.0])] * 2
        delta = build_outlier_matrix(results)
        assert np.array_equal(delta.values[0], delta.values[1])

    def test_mismatched_points_rejected(self):
        with pytest.raises(ParameterError):
            build_outlier_matrix([fake_result([1.0, 2.0]),
                                  fake_result([1.0, 2.0, 3.0])])

    def test_range_invariant(self):
        rng = np.random.default_rng(0)
        results = [fake_result(rng.standard_normal(30)) for _ in range(4)]
        delta = build_outlier_matrix(results)
        assert delta.values.min() >= 0.0 and delta.values.max() <= 1.0

    def test_out_of_range_rejected(self):
        with pytest.raises(ParameterError):
            matrix([[0.5, 1.5]])


class TestKlnmf:
    def test_rank_one_exact_recovery(self):
        rng = np.random.default_rng(1)
        delta = block_rank_g(1, rng)
        factors = klnmf(delta, g=1, tol=0.0, rng_seed=0)
        assert factors.kl_history[-1] <= 1e-8

    def test_rank_two_product_recovery(self):
        rng = np.random.default_rng(2)
        delta = block_rank_g(2, rng)
        factors = klnmf(delta, g=2, tol=0.0, rng_seed=0)
        assert factors.kl_history[-1] <= 1e-6

    def test_history_nonincreasing_across_seeds(self):
        rng = np.random.default_rng(3)
        delta = matrix(rng.random((6, 25)))
        for seed in range(8):
            history = np.array(klnmf(delta, g=3, rng_seed=seed).kl_history)
            assert np.all(np.diff(history) <= 1e-12)

    def test_factors_stay_nonnegative(self):
        rng = np.random.default_rng(4)
        delta = matrix(rng.random((5, 20)))
        factors = klnmf(delta, g=2, rng_seed=1)
        assert factors.lam.min() >= 0.0
        assert factors.omega.min() >= 0.0

    def test_zero_entries_handled(self):
        # min-max normalized rows always contain an exact zero
        results = [fake_result([0.0, 1.0, 0.5, 0.2]),
                   fake_result([3.0, 0.0, 1.0, 2.0], name="md")]
        delta = build_outlier_matrix(results)
        factors = klnmf(delta, g=1, rng_seed=0)
        assert np.isfinite(factors.kl_history).all()

    def test_rank_validated(self):
        rng = np.random.default_rng(5)
        delta = matrix(rng.random((3, 10)))
        with pytest.raises(ParameterError):
            klnmf(delta, g=4)
        with pytest.raises(ParameterError):
            klnmf(delta, g=0)

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(6)
        delta = matrix(rng.random((4, 15)))
        a = klnmf(delta, g=2, rng_seed=9)
        b = klnmf(delta, g=2, rng_seed=9)
        assert np.array_equal(a.lam, b.lam)
        assert np.array_equal(a.omega, b.omega)

    def test_round_trip(self):
        rng = np.random.default_rng(7)
        delta = matrix(rng.random((4, 12)))
        factors = klnmf(delta, g=2, rng_seed=0)
        restored = PerspectiveSet.from_dict(factors.to_dict())
        assert np.allclose(restored.lam, factors.lam)
        assert restored.detector_assignment == factors.detector_assignment


class TestExtractPerspectives:
    def test_single_perspective_holds_everything(self):
        rng = np.random.default_rng(8)
        delta = matrix(rng.random((5, 18)))
        factors = klnmf(delta, g=1, rng_seed=0)
        perspectives = extract_perspectives(factors)
        assert len(perspectives) == 1
        assert perspectives[0].member_detectors == tuple(range(5))

    def test_assignment_follows_argmax(self):
        factors = PerspectiveSet(
            lam=np.array([[0.9, 0.1], [0.2, 0.7]]),
            omega=np.ones((4, 2)), g=2, kl_history=(1.0,),
            detector_assignment=(0, 1))
        perspectives = extract_perspectives(factors)
        members = {p.component_index: p.member_detectors for p in perspectives}
        assert members[0] == (0,)
        assert members[1] == (1,)

    def test_block_structure_separates_detector_groups(self):
        # two detector groups scoring disjoint point sets
        rng = np.random.default_rng(9)
        top = np.hstack([rng.uniform(0.6, 1.0, (4, 12)),
                         rng.uniform(0.0, 0.05, (4, 12))])
        bottom = np.hstack([rng.uniform(0.0, 0.05, (4, 12)),
                            rng.uniform(0.6, 1.0, (4, 12))])
        delta = matrix(np.vstack([top, bottom]))
        factors = klnmf(delta, g=2, rng_seed=3)
        assignment = np.array(factors.detector_assignment)
        assert len(set(assignment[:4])) == 1
        assert len(set(assignment[4:])) == 1
        assert assignment[0] != assignment[4]

    def test_components_clipped_and_ordered_by_mass(self):
        rng = np.random.default_rng(10)
        delta = matrix(rng.random((6, 20)))
        perspectives = extract_perspectives(klnmf(delta, g=3, rng_seed=1))
        masses = [p.total_mass for p in perspectives]
        assert masses == sorted(masses, reverse=True)
        for p in perspectives:
            assert p.component.min() >= 0.0 and p.component.max() <= 1.0
            assert np.linalg.matrix_rank(p.component, tol=1e-9) <= 1


class TestEnsembleScores:
    def test_hot_column_ranks_first(self):
        values = np.full((3, 6), 0.2)
        values[:, 4] = 0.95
        scores = ensemble_scores(matrix(values), rng_seed=0)
        assert scores.argmax() == 4

    def test_ordering_matches_column_means(self):
        rng = np.random.default_rng(11)
        for seed in range(20):
            t, n = int(rng.integers(2, 9)), int(rng.integers(10, 40))
            delta = matrix(rng.random((t, n)))
            scores = ensemble_scores(delta, rng_seed=seed)
            rho = spearmanr(scores, delta.values.mean(axis=0)).statistic
            assert rho == pytest.approx(1.0)

    def test_single_detector_order_preserved(self):
        rng = np.random.default_rng(12)
        row = rng.random(25)
        delta = matrix(row[None, :])
        scores = ensemble_scores(delta, rng_seed=0)
        assert np.array_equal(np.argsort(scores), np.argsort(row))

    def test_row_permutation_leaves_point_ordering(self):
        rng = np.random.default_rng(13)
        values = rng.random((5, 20))
        order_a = np.argsort(ensemble_scores(matrix(values), rng_seed=4))
        order_b = np.argsort(ensemble_scores(matrix(values[::-1]), rng_seed=4))
        assert np.array_equal(order_a, order_b)

    def test_scores_in_unit_range(self):
        rng = np.random.default_rng(14)
        scores = ensemble_scores(matrix(rng.random((4, 16))), rng_seed=2)
        assert scores.min() == 0.0 and scores.max() == 1.0
