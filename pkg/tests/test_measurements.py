import numpy as np
import pytest

from uis import (
    RngStream,
    SignalVector,
    block_average,
    empty_measurement,
    fourier_lowpass,
    from_arbitrary,
    measurement_from_descriptor,
    pixel_subset,
    random_orthonormal,
    random_pixel_mask,
)
from uis.measurements import DenseMeasurement, InfeasibleConstraintError


def gram_error(m):
    M = m.dense()
    if m.rank == 0:
        return 0.0
    return float(np.abs(M.T @ M - np.eye(m.rank)).max())


def idempotence_error(m, seed=0):
    y = np.random.default_rng(seed).normal(size=m.signal_dim)
    p = m.project(y)
    return float(np.abs(m.project(p) - p).max())


class TestPixelSubset:
    def test_keep_all_is_identity(self):
        m = pixel_subset(6, range(6))
        x = np.arange(6, dtype=float)
        assert np.array_equal(m.measure(x), x)
        assert np.array_equal(m.project(x), x)

    def test_scatter_embed(self):
        m = pixel_subset(5, [1, 3])
        out = m.embed([7.0, 9.0])
        assert np.array_equal(out, [0, 7, 0, 9, 0])

    def test_rank_zero(self):
        m = empty_measurement(4)
        assert m.measure(np.ones(4)).size == 0
        assert np.array_equal(m.embed([]), np.zeros(4))
        assert np.array_equal(m.project(np.ones(4)), np.zeros(4))

    def test_duplicate_indices_rejected(self):
        with pytest.raises(ValueError):
            pixel_subset(5, [1, 1])

    def test_orthonormal(self):
        m = pixel_subset(10, [0, 4, 9])
        assert gram_error(m) == 0.0


class TestRandomPixelMask:
    def test_fraction_sets_rank(self):
        m = random_pixel_mask(100, 0.1, 3)
        assert m.rank == 10

    def test_seed_reproducible(self):
        a = random_pixel_mask(50, 0.3, RngStream(8))
        b = random_pixel_mask(50, 0.3, RngStream(8))
        assert np.array_equal(a.kept, b.kept)

    def test_descriptor_roundtrip(self):
        m = random_pixel_mask(50, 0.3, 8)
        m2 = measurement_from_descriptor(m.descriptor())
        assert np.array_equal(m.kept, m2.kept)


class TestBlockAverage:
    def test_constant_image_measures_block_times_value(self):
        m = block_average((8, 8), 4)
        x = np.full(64, 0.5)
        assert np.allclose(m.measure(x), 4 * 0.5)  # 16 entries of 1/4 sum to 4v

    def test_rows_have_sixteen_quarters(self):
        m = block_average((8, 8), 4)
        col = m.dense()[:, 0]
        nz = col[col != 0]
        assert nz.size == 16 and np.allclose(nz, 0.25)

    def test_projection_is_blockwise_constant(self):
        m = block_average((8, 8), 4)
        y = np.random.default_rng(1).normal(size=64)
        p = m.project(y).reshape(8, 8)
        for bi in range(0, 8, 4):
            for bj in range(0, 8, 4):
                block = p[bi : bi + 4, bj : bj + 4]
                assert np.allclose(block, block[0, 0])

    def test_orthonormal_and_idempotent(self):
        m = block_average((12, 8, 3), 4)
        assert gram_error(m) < 1e-10
        assert idempotence_error(m) < 1e-10

    def test_indivisible_shape_rejected(self):
        with pytest.raises(ValueError):
            block_average((9, 8), 4)


class TestFourierLowpass:
    def test_constant_image_is_reproduced(self):
        m = fourier_lowpass((8, 8), 0.05)
        x = np.full(64, 0.7)
        assert np.abs(m.project(x) - x).max() < 1e-10

    def test_orthonormal(self):
        for frac in (0.05, 0.1, 0.5):
            m = fourier_lowpass((16, 12), frac)
            assert gram_error(m) < 1e-10

    def test_multichannel_block_structure(self):
        m = fourier_lowpass((8, 8, 3), 0.1)
        assert m.rank == 3 * max(1, round(0.1 * 64))
        assert gram_error(m) < 1e-10

    def test_lowpass_is_smoother(self):
        rng = np.random.default_rng(5)
        y = rng.normal(size=256)
        m = fourier_lowpass((16, 16), 0.1)
        p = m.project(y).reshape(16, 16)
        orig = y.reshape(16, 16)
        assert np.abs(np.diff(p, axis=0)).mean() < np.abs(np.diff(orig, axis=0)).mean()

    def test_fraction_bounds(self):
        with pytest.raises(ValueError):
            fourier_lowpass((8, 8), 0.0)
        with pytest.raises(ValueError):
            fourier_lowpass((8, 8), 1.5)


class TestRandomOrthonormal:
    def test_orthonormal(self):
        m = random_orthonormal(128, 32, 4)
        assert gram_error(m) < 1e-10

    def test_embed_is_isometry(self):
        m = random_orthonormal(64, 16, 4)
        rng = np.random.default_rng(0)
        c = rng.normal(size=16)
        assert np.linalg.norm(m.embed(c)) == pytest.approx(np.linalg.norm(c), rel=1e-12)

    def test_seed_reproducible_bitwise(self):
        a = random_orthonormal(64, 16, RngStream(9)).dense()
        b = random_orthonormal(64, 16, RngStream(9)).dense()
        assert np.array_equal(a, b)

    def test_complement_is_orthogonal(self):
        m = random_orthonormal(64, 16, 4)
        y = np.random.default_rng(2).normal(size=64)
        p = m.project(y)
        assert abs(np.dot(y - p, p)) < 1e-10 * 64


class TestFromArbitrary:
    def test_orthonormal_input_matches_direct(self):
        q = random_orthonormal(32, 5, 12).dense()
        m, xc = from_arbitrary(q, np.arange(5, dtype=float))
        direct = DenseMeasurement(q)
        rng = np.random.default_rng(3)
        y = rng.normal(size=32)
        # columns may differ by sign; projections must agree
        assert np.abs(m.project(y) - direct.project(y)).max() < 1e-10
        x = m.embed(xc)
        assert np.abs(q.T @ x - np.arange(5)).max() < 1e-10

    def test_one_column_by_hand(self):
        w = np.zeros(4)
        w[0] = 2.0
        m, xc = from_arbitrary(w, [6.0])
        col = m.dense()[:, 0]
        assert abs(abs(col[0]) - 1.0) < 1e-12
        # sign-matched: the constraint M^T x = xc must encode x_0 = 3
        x = m.embed(xc)
        assert x[0] == pytest.approx(3.0, rel=1e-12)

    def test_rank_deficient_consistent(self):
        w = np.zeros((4, 2))
        w[0, 0] = 1.0
        w[0, 1] = 2.0  # second column dependent
        m, xc = from_arbitrary(w, [1.0, 2.0])
        assert m.rank == 1
        assert m.embed(xc)[0] == pytest.approx(1.0)

    def test_rank_deficient_inconsistent_raises(self):
        w = np.zeros((4, 2))
        w[0, 0] = 1.0
        w[0, 1] = 2.0
        with pytest.raises(InfeasibleConstraintError):
            from_arbitrary(w, [1.0, 5.0])


class TestInvariantSuite:
    @pytest.mark.parametrize(
        "factory",
        [
            lambda: pixel_subset(96, range(0, 96, 3)),
            lambda: random_pixel_mask(96, 0.25, 7),
            lambda: block_average((8, 12), 4),
            lambda: fourier_lowpass((8, 12), 0.1),
            lambda: random_orthonormal(96, 24, 7),
        ],
        ids=["pixel_subset", "random_mask", "block_average", "fourier_lowpass", "random_orthonormal"],
    )
    def test_gram_idempotence_roundtrip(self, factory):
        m = factory()
        assert gram_error(m) < 1e-10
        assert idempotence_error(m) < 1e-10
        c = np.random.default_rng(11).normal(size=m.rank)
        assert np.abs(m.measure(m.embed(c)) - c).max() < 1e-10

    def test_project_returns_signal_for_signal(self):
        m = random_orthonormal(24, 6, 1)
        s = SignalVector(np.random.default_rng(0).normal(size=24))
        out = m.project(s)
        assert isinstance(out, SignalVector)

    def test_dimension_mismatch_rejected(self):
        m = pixel_subset(10, [0, 1])
        with pytest.raises(ValueError):
            m.measure(np.zeros(9))
        with pytest.raises(ValueError):
            m.embed(np.zeros(3))


class TestDescriptors:
    def test_roundtrip_types(self):
        shape = (8, 12, 1)
        for m in (
            pixel_subset(96, [0, 5, 9], shape),
            block_average(shape, 4),
            fourier_lowpass(shape, 0.1),
            random_orthonormal(96, 24, 7, shape),
        ):
            m2 = measurement_from_descriptor(m.descriptor())
            y = np.random.default_rng(4).normal(size=96)
            assert np.abs(m.project(y) - m2.project(y)).max() < 1e-12
            assert m2.rank == m.rank
