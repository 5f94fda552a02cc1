"""Weight schemes, psi post-processing, and the three saliency generators."""

import math

import numpy as np
import pytest

from conceptorcam.conceptor import Conceptor, EvidenceMatrix, learn_conceptor
from conceptorcam.saliency import (
    ChannelWeights,
    FeatureMap,
    SaliencyMap,
    baseline_saliency,
    build_evidence,
    cam_weights,
    comprehensive_saliency,
    gradcam_weights,
    normalize_weights,
    rescale_psi,
    scorecam_weights,
    synchronized_saliency,
    tanh_normalize,
)


class _StubBackend:
    """Fixed score tables standing in for a model during weight tests."""

    def __init__(self, base, masked_rows):
        self._base = np.asarray(base, dtype=np.float64)
        self._rows = [np.asarray(r, dtype=np.float64) for r in masked_rows]

    def base_scores(self):
        return self._base

    def masked_scores(self, k):
        return self._rows[k]


def feature_map_2x1():
    """Identity feature matrix on a 2-by-1 grid with two channels."""
    return FeatureMap(matrix=np.eye(2), spatial=(2, 1))


class TestFeatureMap:
    def test_from_stack_folds_channels_last(self):
        stack = np.arange(24, dtype=np.float64).reshape(2, 3, 4)
        fm = FeatureMap.from_stack(stack)
        assert fm.spatial == (2, 3)
        assert fm.num_channels == 4
        np.testing.assert_array_equal(fm.channel_grid(1), stack[:, :, 1])

    def test_channel_grid_bounds(self):
        with pytest.raises(IndexError):
            feature_map_2x1().channel_grid(2)

    def test_spatial_mismatch_rejected(self):
        with pytest.raises(ValueError):
            FeatureMap(matrix=np.zeros((4, 2)), spatial=(3, 2))


class TestChannelWeights:
    def test_scheme_must_be_known(self):
        with pytest.raises(ValueError):
            ChannelWeights(values=[1.0], scheme="magic")

    def test_values_frozen(self):
        w = ChannelWeights(values=[1.0, 2.0], scheme="score")
        with pytest.raises(ValueError):
            w.values[0] = 5.0


class TestSaliencyMapType:
    def test_rejects_values_outside_unit_interval(self):
        with pytest.raises(ValueError):
            SaliencyMap(grid=[[0.0, 1.5]])
        with pytest.raises(ValueError):
            SaliencyMap(grid=[[-0.1, 0.5]])


class TestTanhNormalize:
    def test_zero_fixed_point(self):
        fm = FeatureMap(matrix=np.zeros((4, 2)), spatial=(2, 2))
        np.testing.assert_array_equal(tanh_normalize(fm).matrix, np.zeros((4, 2)))

    def test_saturates_large_values(self):
        fm = FeatureMap(matrix=np.full((1, 1), 1e6), spatial=(1, 1))
        assert tanh_normalize(fm).matrix[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_half_log_three(self):
        """tanh(ln(3)/2) = (3 - 1) / (3 + 1) = 0.5."""
        fm = FeatureMap(matrix=np.full((1, 1), math.log(3.0) / 2.0),
                        spatial=(1, 1))
        assert tanh_normalize(fm).matrix[0, 0] == pytest.approx(0.5, abs=1e-15)


class TestRescalePsi:
    def test_relu_then_minmax(self):
        out = rescale_psi([[-1.0, 0.0], [1.0, 3.0]], (2, 2))
        np.testing.assert_allclose(out.grid,
                                   [[0.0, 0.0], [1.0 / 3.0, 1.0]], atol=1e-15)

    def test_constant_grid_collapses_to_zero(self):
        out = rescale_psi(np.full((2, 2), 2.0), (4, 4))
        np.testing.assert_array_equal(out.grid, np.zeros((4, 4)))

    def test_corner_aligned_column_upsample(self):
        """2-to-4 upsample pins both corners and splits the run in thirds."""
        out = rescale_psi([[0.0], [3.0]], (4, 1))
        np.testing.assert_allclose(
            out.grid, [[0.0], [1.0 / 3.0], [2.0 / 3.0], [1.0]], atol=1e-15)

    def test_negative_floor_rectified_before_upsampling(self):
        """ReLU runs first, so a negative spike cannot tilt interpolation."""
        out = rescale_psi([[-100.0], [1.0]], (3, 1))
        np.testing.assert_allclose(out.grid, [[0.0], [0.5], [1.0]], atol=1e-15)

    def test_shrinking_target_rejected(self):
        with pytest.raises(ValueError):
            rescale_psi(np.zeros((4, 4)), (2, 2))

    def test_randomized_range_and_shape(self):
        """Psi output always sits in [0, 1] at exactly the target shape."""
        rng = np.random.default_rng(59)
        for _ in range(100):
            h = int(rng.integers(1, 7))
            w = int(rng.integers(1, 7))
            target = (h + int(rng.integers(0, 9)), w + int(rng.integers(0, 9)))
            out = rescale_psi(rng.standard_normal((h, w)), target)
            assert out.shape == target
            assert out.grid.min() >= 0.0
            assert out.grid.max() <= 1.0


class TestScorecamWeights:
    def test_masked_minus_base(self):
        backend = _StubBackend([0.5, 0.5], [[0.7, 0.3], [0.4, 0.6]])
        fm = FeatureMap(matrix=np.zeros((1, 2)), spatial=(1, 1))
        w = scorecam_weights(fm, backend, 0)
        np.testing.assert_allclose(w.values, [0.2, -0.1], atol=1e-15)
        assert w.scheme == "score"

    def test_equal_scores_give_zero(self):
        backend = _StubBackend([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]])
        fm = FeatureMap(matrix=np.zeros((1, 2)), spatial=(1, 1))
        np.testing.assert_array_equal(
            scorecam_weights(fm, backend, 0).values, [0.0, 0.0])

    def test_three_channel_hand_values(self):
        backend = _StubBackend([0.1, 0.9],
                               [[0.1, 0.9], [0.6, 0.4], [0.05, 0.95]])
        fm = FeatureMap(matrix=np.zeros((1, 3)), spatial=(1, 1))
        np.testing.assert_allclose(
            scorecam_weights(fm, backend, 0).values, [0.0, 0.5, -0.05],
            atol=1e-15)

    def test_class_index_out_of_range(self):
        backend = _StubBackend([0.5, 0.5], [[0.5, 0.5]])
        fm = FeatureMap(matrix=np.zeros((1, 1)), spatial=(1, 1))
        with pytest.raises(IndexError):
            scorecam_weights(fm, backend, 2)

    def test_masked_row_shape_mismatch(self):
        backend = _StubBackend([0.5, 0.5], [[0.3, 0.3, 0.4]])
        fm = FeatureMap(matrix=np.zeros((1, 1)), spatial=(1, 1))
        with pytest.raises(ValueError):
            scorecam_weights(fm, backend, 0)


class TestGradcamWeights:
    def test_zero(self):
        np.testing.assert_array_equal(gradcam_weights(np.zeros((3, 2))).values,
                                      [0.0, 0.0])

    def test_column_sums_over_km(self):
        """Columns [4, 6] over K*M = 4 give [1.0, 1.5]."""
        w = gradcam_weights([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(w.values, [1.0, 1.5])
        assert w.scheme == "grad"

    def test_single_channel_ones(self):
        w = gradcam_weights(np.ones((4, 1)))
        np.testing.assert_array_equal(w.values, [1.0])


class TestCamWeights:
    def test_zero(self):
        np.testing.assert_array_equal(cam_weights(np.zeros((2, 2))).values,
                                      [0.0, 0.0])

    def test_all_ones(self):
        w = cam_weights([[1.0, 1.0], [1.0, 1.0]])
        np.testing.assert_array_equal(w.values, [0.5, 0.5])
        assert w.scheme == "cam"

    def test_single_row(self):
        np.testing.assert_array_equal(cam_weights([[2.0, 0.0]]).values,
                                      [1.0, 0.0])


class TestNormalizeWeights:
    def test_constant_maps_to_half(self):
        np.testing.assert_array_equal(normalize_weights([3.0, 3.0, 3.0]),
                                      [0.5, 0.5, 0.5])

    def test_unit_range_preserved(self):
        np.testing.assert_array_equal(normalize_weights([0.0, 1.0]), [0.0, 1.0])

    def test_affine_onto_unit_interval(self):
        out = normalize_weights([-1.0, 0.0, 3.0])
        np.testing.assert_allclose(out, [0.0, 0.25, 1.0], atol=1e-15)


class TestBuildEvidence:
    def test_column_scaling(self):
        fm = FeatureMap(matrix=[[1.0, 2.0], [3.0, 4.0]], spatial=(2, 1))
        w = ChannelWeights(values=[0.5, 1.0], scheme="ingested")
        out = build_evidence(fm, w, reverse=False, normalize=False)
        np.testing.assert_array_equal(out.matrix, [[0.5, 2.0], [1.5, 4.0]])
        assert out.spatial == (2, 1)

    def test_reversed_scaling(self):
        fm = FeatureMap(matrix=[[1.0, 2.0], [3.0, 4.0]], spatial=(2, 1))
        w = ChannelWeights(values=[0.5, 1.0], scheme="ingested")
        out = build_evidence(fm, w, reverse=True, normalize=False)
        np.testing.assert_array_equal(out.matrix, [[0.5, 0.0], [1.5, 0.0]])

    def test_constant_weights_scale_both_routes_by_half(self):
        fm = FeatureMap(matrix=[[1.0, 2.0], [3.0, 4.0]], spatial=(2, 1))
        w = ChannelWeights(values=[7.0, 7.0], scheme="score")
        direct = build_evidence(fm, w, reverse=False)
        flipped = build_evidence(fm, w, reverse=True)
        np.testing.assert_array_equal(direct.matrix, fm.matrix * 0.5)
        np.testing.assert_array_equal(flipped.matrix, fm.matrix * 0.5)

    def test_normalizes_raw_weights_by_default(self):
        fm = FeatureMap(matrix=np.ones((2, 2)), spatial=(2, 1))
        w = ChannelWeights(values=[-5.0, 15.0], scheme="score")
        out = build_evidence(fm, w)
        np.testing.assert_array_equal(out.matrix, [[0.0, 1.0], [0.0, 1.0]])

    def test_length_mismatch_rejected(self):
        fm = FeatureMap(matrix=np.ones((2, 2)), spatial=(2, 1))
        w = ChannelWeights(values=[1.0], scheme="score")
        with pytest.raises(ValueError):
            build_evidence(fm, w)


class TestBaselineSaliency:
    def test_single_active_channel(self):
        """Fusing I with [1, 0] picks channel 0: psi of [1, 0] is [1, 0]."""
        w = ChannelWeights(values=[1.0, 0.0], scheme="ingested")
        out = baseline_saliency(feature_map_2x1(), w, (2, 1))
        np.testing.assert_array_equal(out.grid, [[1.0], [0.0]])

    def test_zero_weights(self):
        w = ChannelWeights(values=[0.0, 0.0], scheme="ingested")
        out = baseline_saliency(feature_map_2x1(), w, (2, 1))
        np.testing.assert_array_equal(out.grid, np.zeros((2, 1)))

    def test_single_channel_identity_fusion(self):
        fm = FeatureMap(matrix=[[0.0], [3.0]], spatial=(2, 1))
        w = ChannelWeights(values=[1.0], scheme="ingested")
        out = baseline_saliency(fm, w, (2, 1))
        expected = rescale_psi([[0.0], [3.0]], (2, 1))
        np.testing.assert_array_equal(out.grid, expected.grid)

    def test_positive_scale_invariance_exact_for_powers_of_two(self):
        """Doubling raw weights leaves the map bit-identical."""
        rng = np.random.default_rng(61)
        fm = FeatureMap(matrix=rng.standard_normal((12, 5)), spatial=(3, 4))
        w = rng.standard_normal(5)
        a = baseline_saliency(fm, ChannelWeights(values=w, scheme="ingested"),
                              (9, 8))
        b = baseline_saliency(fm, ChannelWeights(values=2.0 * w,
                                                 scheme="ingested"), (9, 8))
        np.testing.assert_array_equal(a.grid, b.grid)

    def test_positive_scale_invariance_general_factor(self):
        rng = np.random.default_rng(67)
        fm = FeatureMap(matrix=rng.standard_normal((12, 5)), spatial=(3, 4))
        w = rng.standard_normal(5)
        a = baseline_saliency(fm, ChannelWeights(values=w, scheme="ingested"),
                              (9, 8))
        b = baseline_saliency(fm, ChannelWeights(values=3.7 * w,
                                                 scheme="ingested"), (9, 8))
        np.testing.assert_allclose(a.grid, b.grid, atol=1e-12)


class TestSynchronizedSaliency:
    def test_identity_conceptor_reduces_to_baseline_fusion(self):
        """C = I is a no-op: the map equals unit-weight baseline fusion."""
        rng = np.random.default_rng(71)
        z = EvidenceMatrix(matrix=rng.uniform(0.0, 1.0, size=(6, 3)),
                           spatial=(2, 3))
        c = Conceptor(matrix=np.eye(6), aperture=1.0)
        out = synchronized_saliency(c, z, (4, 6))
        expected = baseline_saliency(
            FeatureMap(matrix=z.matrix, spatial=z.spatial),
            ChannelWeights(values=np.ones(3), scheme="ingested"), (4, 6))
        np.testing.assert_allclose(out.grid, expected.grid, atol=1e-12)

    def test_half_identity_hand_values(self):
        """C = I/2 on column sums [2, 1]: pre-psi [1, 0.5] min-maxes to [1, 0]."""
        z = EvidenceMatrix(matrix=[[2.0, 0.0], [0.0, 1.0]], spatial=(2, 1))
        c = Conceptor(matrix=0.5 * np.eye(2), aperture=1.0)
        out = synchronized_saliency(c, z, (2, 1))
        np.testing.assert_array_equal(out.grid, [[1.0], [0.0]])

    def test_zero_evidence(self):
        z = EvidenceMatrix(matrix=np.zeros((4, 2)), spatial=(2, 2))
        c = Conceptor(matrix=0.5 * np.eye(4), aperture=1.0)
        out = synchronized_saliency(c, z, (2, 2))
        np.testing.assert_array_equal(out.grid, np.zeros((2, 2)))

    def test_order_mismatch_rejected(self):
        z = EvidenceMatrix(matrix=np.zeros((4, 2)), spatial=(2, 2))
        c = Conceptor(matrix=np.eye(3), aperture=1.0)
        with pytest.raises(ValueError):
            synchronized_saliency(c, z, (2, 2))


class TestComprehensiveSaliency:
    def test_zero_features_collapse(self):
        fm = FeatureMap(matrix=np.zeros((4, 2)), spatial=(2, 2))
        w = ChannelWeights(values=[1.0, 0.0], scheme="ingested")
        bundle = comprehensive_saliency(fm, w, 1.0, (2, 2))
        np.testing.assert_array_equal(bundle.comprehensive.grid, np.zeros((2, 2)))
        np.testing.assert_array_equal(bundle.positive.grid, np.zeros((2, 2)))

    def test_two_channel_hand_construction(self):
        """Identity features, weights [1, 0], unit aperture, worked by hand.

        Evidence diag(1, 0) gives the positive synchronizer diag(1/3, 0);
        reversed evidence diag(0, 1) learns diag(0, 1/3) whose complement is
        diag(1, 2/3); their mean is diag(2/3, 1/3). Summed evidence [1, 0]
        keeps a positive first entry on every route, so min-max pins each
        map to exactly [1, 0].
        """
        w = ChannelWeights(values=[1.0, 0.0], scheme="ingested")
        bundle = comprehensive_saliency(feature_map_2x1(), w, 1.0, (2, 1))
        np.testing.assert_allclose(bundle.positive_conceptor.matrix,
                                   np.diag([1.0 / 3.0, 0.0]), atol=1e-12)
        np.testing.assert_allclose(bundle.negative_conceptor.matrix,
                                   np.diag([0.0, 1.0 / 3.0]), atol=1e-12)
        np.testing.assert_allclose(bundle.complementary_conceptor.matrix,
                                   np.diag([1.0, 2.0 / 3.0]), atol=1e-12)
        np.testing.assert_allclose(bundle.fused_synchronizer.matrix,
                                   np.diag([2.0 / 3.0, 1.0 / 3.0]), atol=1e-12)
        for view in (bundle.comprehensive, bundle.positive, bundle.complementary):
            np.testing.assert_array_equal(view.grid, [[1.0], [0.0]])

    def test_self_complementary_construction_matches_synchronized(self):
        """Evidence with unit correlation learns C = I/2 = its complement.

        A scaled rotation has unit column correlation, and constant weights
        make the direct and reversed evidence identical, so both routes
        learn I/2; the comprehensive map then collapses onto the plain
        synchronized one while the fused grid stays non-constant.
        """
        theta = math.pi / 6.0
        rot = np.array([[math.cos(theta), -math.sin(theta)],
                        [math.sin(theta), math.cos(theta)]])
        fm = FeatureMap(matrix=2.0 * np.sqrt(2.0) * rot, spatial=(2, 1))
        w = ChannelWeights(values=[3.0, 3.0], scheme="ingested")
        bundle = comprehensive_saliency(fm, w, 1.0, (2, 1))
        np.testing.assert_allclose(bundle.positive_conceptor.matrix,
                                   0.5 * np.eye(2), atol=1e-12)
        np.testing.assert_allclose(bundle.complementary_conceptor.matrix,
                                   0.5 * np.eye(2), atol=1e-12)
        direct = synchronized_saliency(bundle.positive_conceptor,
                                       bundle.evidence, (2, 1))
        np.testing.assert_allclose(bundle.comprehensive.grid, direct.grid,
                                   atol=1e-14)
        assert bundle.comprehensive.grid.max() == 1.0

    def test_complement_is_identity_minus_negative(self):
        rng = np.random.default_rng(73)
        fm = FeatureMap(matrix=rng.uniform(-1.0, 1.0, size=(6, 4)),
                        spatial=(3, 2))
        w = ChannelWeights(values=rng.standard_normal(4), scheme="ingested")
        bundle = comprehensive_saliency(fm, w, 1.0, (3, 2))
        np.testing.assert_array_equal(
            bundle.complementary_conceptor.matrix,
            np.eye(6) - bundle.negative_conceptor.matrix)

    def test_fused_synchronizer_is_valid_conceptor(self):
        """The mean of C and its complement stays symmetric in [0, 1]."""
        rng = np.random.default_rng(79)
        for _ in range(20):
            m_h = int(rng.integers(1, 4))
            m_w = int(rng.integers(1, 4))
            k = int(rng.integers(1, 5))
            fm = FeatureMap(matrix=rng.uniform(-1.0, 1.0, size=(m_h * m_w, k)),
                            spatial=(m_h, m_w))
            w = ChannelWeights(values=rng.standard_normal(k), scheme="ingested")
            alpha = float(rng.uniform(0.2, 3.0))
            fused = comprehensive_saliency(fm, w, alpha, (m_h, m_w)).fused_synchronizer
            np.testing.assert_array_equal(fused.matrix, fused.matrix.T)
            eigs = fused.eigenvalues()
            assert eigs[0] >= -1e-10 and eigs[-1] <= 1.0 + 1e-10

    def test_maps_stay_in_unit_interval_at_target_shape(self):
        rng = np.random.default_rng(83)
        for _ in range(30):
            h = int(rng.integers(1, 5))
            w_dim = int(rng.integers(1, 5))
            k = int(rng.integers(1, 6))
            fm = FeatureMap(matrix=rng.standard_normal((h * w_dim, k)),
                            spatial=(h, w_dim))
            weights = ChannelWeights(values=rng.standard_normal(k),
                                     scheme="ingested")
            target = (h + 3, w_dim + 2)
            bundle = comprehensive_saliency(fm, weights,
                                            float(rng.uniform(0.0, 5.0)), target)
            for view in (bundle.comprehensive, bundle.positive,
                         bundle.complementary):
                assert view.shape == target
                assert view.grid.min() >= 0.0
                assert view.grid.max() <= 1.0

    def test_deterministic_across_runs(self):
        rng = np.random.default_rng(89)
        fm_values = rng.standard_normal((9, 4))
        w_values = rng.standard_normal(4)
        fm = FeatureMap(matrix=fm_values, spatial=(3, 3))
        w = ChannelWeights(values=w_values, scheme="ingested")
        first = comprehensive_saliency(fm, w, 1.3, (7, 7))
        second = comprehensive_saliency(fm, w, 1.3, (7, 7))
        np.testing.assert_array_equal(first.comprehensive.grid,
                                      second.comprehensive.grid)
        np.testing.assert_array_equal(first.positive.grid, second.positive.grid)
