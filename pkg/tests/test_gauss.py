import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from bundlemw.errors import (
    DegenerateMatrix,
    DimensionMismatch,
    FrameMismatch,
    NotSymmetric,
)
from bundlemw.gauss import (
    BundleGaussian,
    CovarianceMatrix,
    GaussianMixture,
    bures_term,
    check_same_frame,
    load_mixture,
    mixture_from_dict,
    mixture_to_dict,
    normalize_minimal_form,
    pairwise_w2sq,
    psd_sqrt,
    save_mixture,
    single_gaussian_mixture,
    w2_bundle_gaussian,
    w2sq_bundle_gaussian,
)
from bundlemw.geometry import Point, build_reference_frame, standard_frame

from helpers import make_mixture, random_spd


class TestCovarianceMatrix:
    def test_symmetrizes_small_asymmetry(self):
        S = CovarianceMatrix([[1.0, 1e-8], [0.0, 2.0]])
        assert np.array_equal(S.mat, S.mat.T)

    def test_rejects_large_asymmetry(self):
        with pytest.raises(NotSymmetric):
            CovarianceMatrix([[1.0, 0.5], [0.0, 1.0]])

    def test_rejects_negative_definite(self):
        with pytest.raises(DegenerateMatrix):
            CovarianceMatrix([[-1.0, 0.0], [0.0, 1.0]])

    def test_allows_rank_deficient(self):
        S = CovarianceMatrix([[1.0, 0.0], [0.0, 0.0]])
        assert S.dim == 2

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            CovarianceMatrix(np.zeros((2, 3)))


class TestPsdSqrt:
    def test_identity(self):
        R = psd_sqrt(np.eye(3))
        assert np.allclose(R.mat, np.eye(3))

    def test_diagonal(self):
        R = psd_sqrt(np.diag([4.0, 9.0]))
        assert np.allclose(R.mat, np.diag([2.0, 3.0]))

    def test_square_recovers_input(self):
        rng = np.random.default_rng(0)
        for d in (2, 3, 6):
            S = random_spd(rng, d)
            R = psd_sqrt(S).mat
            rel = np.linalg.norm(R @ R - S) / np.linalg.norm(S)
            assert rel < 1e-8

    def test_rank_deficient_input(self):
        S = np.diag([1.0, 0.0])
        R = psd_sqrt(S)
        assert np.allclose(R.mat @ R.mat, S, atol=1e-12)


class TestBuresTerm:
    def test_equal_inputs_zero(self):
        rng = np.random.default_rng(1)
        S = random_spd(rng, 3)
        assert bures_term(S, S) == pytest.approx(0.0, abs=1e-10)

    def test_commuting_scaled_identity(self):
        assert bures_term(np.eye(2), 4.0 * np.eye(2)) == pytest.approx(2.0, abs=1e-12)

    def test_zero_against_s_gives_trace(self):
        rng = np.random.default_rng(2)
        S = random_spd(rng, 4)
        assert bures_term(np.zeros((4, 4)), S) == pytest.approx(np.trace(S), abs=1e-10)

    def test_symmetric_in_arguments(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            S0 = random_spd(rng, 3)
            S1 = random_spd(rng, 3)
            assert bures_term(S0, S1) == pytest.approx(bures_term(S1, S0), abs=1e-8)

    def test_commuting_case_is_frobenius_of_roots(self):
        rng = np.random.default_rng(4)
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        a = rng.random(3) + 0.1
        b = rng.random(3) + 0.1
        S0 = Q @ np.diag(a) @ Q.T
        S1 = Q @ np.diag(b) @ Q.T
        expect = np.sum((np.sqrt(a) - np.sqrt(b)) ** 2)
        assert bures_term(S0, S1) == pytest.approx(expect, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            bures_term(np.eye(2), np.eye(3))

    def test_monte_carlo_matches_discrete_ot(self):
        # empirical check: optimal matching cost between samples of two
        # centered Gaussians approaches the Bures term; a single n=2000
        # draw fluctuates by several percent, so average a few replicates
        rng = np.random.default_rng(5)
        S0 = np.array([[0.25, 0.05], [0.05, 0.3]])
        S1 = np.array([[4.0, -0.5], [-0.5, 3.0]])
        n = 2000
        costs = []
        for _ in range(4):
            X = rng.multivariate_normal(np.zeros(2), S0, size=n)
            Y = rng.multivariate_normal(np.zeros(2), S1, size=n)
            cost = ((X[:, None, :] - Y[None, :, :]) ** 2).sum(-1)
            rows, cols = linear_sum_assignment(cost)
            costs.append(cost[rows, cols].mean())
        emp = np.mean(costs)
        exact = bures_term(S0, S1)
        assert abs(emp - exact) / exact < 0.05


class TestBundleGaussianW2:
    def test_zero_for_identical(self):
        g = BundleGaussian(Point([0.0, 0.0, 1.0]), np.eye(2))
        assert w2sq_bundle_gaussian(g, g) == 0.0

    def test_pure_base_term(self):
        g0 = BundleGaussian(Point([0.0, 0.0, 1.0]), np.zeros((2, 2)))
        g1 = BundleGaussian(Point([1.0, 0.0, 0.0]), np.zeros((2, 2)))
        assert w2sq_bundle_gaussian(g0, g1) == pytest.approx((np.pi / 2) ** 2, abs=1e-12)

    def test_pure_bures_term(self):
        p = Point([0.0, 0.0, 1.0])
        g0 = BundleGaussian(p, np.eye(2))
        g1 = BundleGaussian(p, 4.0 * np.eye(2))
        assert w2sq_bundle_gaussian(g0, g1) == pytest.approx(2.0, abs=1e-12)
        assert w2_bundle_gaussian(g0, g1) == pytest.approx(np.sqrt(2.0), abs=1e-12)

    def test_symmetry_and_separation(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            g0 = BundleGaussian(Point(rng.standard_normal(4)), random_spd(rng, 3))
            g1 = BundleGaussian(Point(rng.standard_normal(4)), random_spd(rng, 3))
            a = w2sq_bundle_gaussian(g0, g1)
            b = w2sq_bundle_gaussian(g1, g0)
            assert a == pytest.approx(b, abs=1e-8)
            assert a > 1e-4

    def test_cov_dimension_checked(self):
        with pytest.raises(DimensionMismatch):
            BundleGaussian(Point([0.0, 0.0, 1.0]), np.eye(3))


class TestGaussianMixture:
    def test_weight_validation(self):
        p = Point([0.0, 0.0, 1.0])
        f = build_reference_frame(p, rng_seed=0)
        g = BundleGaussian(p, np.eye(2))
        with pytest.raises(ValueError):
            GaussianMixture([0.5, 0.4], [g, g], f)
        with pytest.raises(ValueError):
            GaussianMixture([1.5, -0.5], [g, g], f)
        GaussianMixture([0.5, 0.5], [g, g], f)

    def test_basepoint_at_puncture_rejected(self):
        f = standard_frame(3)
        g = BundleGaussian(Point([-1.0, 0.0, 0.0]), np.eye(2))
        with pytest.raises(ValueError):
            GaussianMixture([1.0], [g], f)

    def test_frame_dimension_checked(self):
        f = standard_frame(4)
        g = BundleGaussian(Point([0.0, 0.0, 1.0]), np.eye(2))
        with pytest.raises(DimensionMismatch):
            GaussianMixture([1.0], [g], f)

    def test_check_same_frame(self):
        rng = np.random.default_rng(7)
        m0 = make_mixture(rng, 2, 3)
        m1 = make_mixture(rng, 2, 3)
        check_same_frame(m0, m1)
        f2 = build_reference_frame(m0.frame.p, rng_seed=99)
        m2 = GaussianMixture(m1.weights, m1.components, f2)
        with pytest.raises(FrameMismatch):
            check_same_frame(m0, m2)


class TestNormalizeMinimalForm:
    def test_merges_duplicates(self):
        p = Point([0.0, 0.0, 1.0])
        f = build_reference_frame(p, rng_seed=0)
        g = BundleGaussian(p, np.eye(2))
        mix = GaussianMixture([0.5, 0.5], [g, g], f)
        out = normalize_minimal_form(mix)
        assert out.K == 1
        assert out.weights[0] == pytest.approx(1.0)

    def test_minimal_mixture_unchanged(self):
        rng = np.random.default_rng(8)
        mix = make_mixture(rng, 3, 3)
        out = normalize_minimal_form(mix)
        assert out.K == 3
        assert np.allclose(out.weights, mix.weights)

    def test_drops_zero_weight(self):
        p = Point([0.0, 0.0, 1.0])
        q = Point([1.0, 0.0, 0.0])
        f = build_reference_frame(p, rng_seed=0)
        mix = GaussianMixture(
            [1.0, 0.0],
            [BundleGaussian(p, np.eye(2)), BundleGaussian(q, np.eye(2))],
            f,
        )
        out = normalize_minimal_form(mix)
        assert out.K == 1
        assert np.allclose(out.components[0].basepoint.coords, p.coords)

    def test_idempotent(self):
        rng = np.random.default_rng(9)
        mix = make_mixture(rng, 4, 4)
        once = normalize_minimal_form(mix)
        twice = normalize_minimal_form(once)
        assert once.K == twice.K
        assert np.allclose(once.weights, twice.weights)

    def test_split_component_renormalizes(self):
        # the same mixture written with a component split in two reduces to
        # the same minimal form up to permutation
        rng = np.random.default_rng(10)
        mix = make_mixture(rng, 2, 3)
        f = mix.frame
        g0, g1 = mix.components
        w0, w1 = mix.weights
        split = GaussianMixture([w1, 0.5 * w0, 0.5 * w0], [g1, g0, g0], f)
        out = normalize_minimal_form(split)
        assert out.K == 2
        pairs = {
            (round(float(w), 12), tuple(np.round(g.basepoint.coords, 10)))
            for w, g in zip(out.weights, out.components)
        }
        expect = {
            (round(float(w), 12), tuple(np.round(g.basepoint.coords, 10)))
            for w, g in zip(mix.weights, mix.components)
        }
        assert pairs == expect


class TestPairwiseAndIO:
    def test_pairwise_matches_scalar(self):
        rng = np.random.default_rng(11)
        f = build_reference_frame(Point(np.eye(4)[-1]), rng_seed=17)
        m0 = make_mixture(rng, 3, 4, frame=f)
        m1 = make_mixture(rng, 5, 4, frame=f)
        P = pairwise_w2sq(m0, m1)
        assert P.shape == (3, 5)
        for i in range(3):
            for j in range(5):
                exact = w2sq_bundle_gaussian(m0.components[i], m1.components[j])
                assert P[i, j] == pytest.approx(exact, abs=1e-10)

    def test_pairwise_frame_mismatch(self):
        rng = np.random.default_rng(12)
        m0 = make_mixture(rng, 2, 3)
        f2 = build_reference_frame(m0.frame.p, rng_seed=5)
        m1 = GaussianMixture(m0.weights, m0.components, f2)
        with pytest.raises(FrameMismatch):
            pairwise_w2sq(m0, m1)

    def test_json_roundtrip(self, tmp_path):
        rng = np.random.default_rng(13)
        mix = make_mixture(rng, 3, 4)
        path = tmp_path / "mixture.json"
        save_mixture(path, mix)
        back = load_mixture(path)
        assert back.K == mix.K
        assert np.allclose(back.weights, mix.weights)
        for a, b in zip(back.components, mix.components):
            assert np.allclose(a.basepoint.coords, b.basepoint.coords)
            assert np.allclose(a.cov.mat, b.cov.mat)
        assert np.allclose(back.frame.matrix, mix.frame.matrix)

    def test_dict_keys(self):
        rng = np.random.default_rng(14)
        mix = make_mixture(rng, 2, 3)
        d = mixture_to_dict(mix)
        assert set(d) == {"frame", "weights", "components"}
        assert set(d["components"][0]) == {"basepoint", "cov"}
        back = mixture_from_dict(d)
        assert back.K == 2

    def test_single_gaussian_wrapper(self):
        g = BundleGaussian(Point([0.0, 0.0, 1.0]), 0.5 * np.eye(2))
        mix = single_gaussian_mixture(g)
        assert mix.K == 1 and mix.weights[0] == 1.0
