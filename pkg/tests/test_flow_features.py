import numpy as np
import pytest

import rscorrect as rc
from rscorrect.flow.features import CELL, FEATURE_DIM, _census_counts


def textured(seed=0, h=64, w=64):
    rng = np.random.default_rng(seed)
    return rc.Frame.from_array(rng.random((h, w)))


class TestCensus:
    def test_counts_against_brute_force(self):
        rng = np.random.default_rng(1)
        gray = rng.random((10, 9))
        counts = _census_counts(gray)
        padded = np.pad(gray, 1, mode="edge")
        for y in range(10):
            for x in range(9):
                expect = 0
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        if dy == dx == 0:
                            continue
                        expect += padded[1 + y + dy, 1 + x + dx] > gray[y, x]
                assert counts[y, x] == expect

    def test_constant_image_all_zero_counts(self):
        counts = _census_counts(np.full((8, 8), 0.3))
        assert np.all(counts == 0)


class TestExtractFeatures:
    def test_shape_and_unit_norm(self):
        fm = rc.extract_features(textured(0))
        assert fm.data.shape == (8, 8, FEATURE_DIM)
        norms = np.linalg.norm(fm.data, axis=2)
        assert np.abs(norms - 1.0).max() < 1e-6

    def test_constant_frame_zero_gradients(self):
        frame = rc.Frame.from_array(np.full((32, 32), 0.5))
        fm = rc.extract_features(frame)
        # gradient channels vanish; the gray and census channels carry the norm
        assert np.abs(fm.data[:, :, 1]).max() == 0.0
        assert np.abs(fm.data[:, :, 2]).max() == 0.0

    def test_cell_shift_equivariance(self):
        rng = np.random.default_rng(5)
        big = rng.random((80, 80))
        a = rc.Frame.from_array(big[:64, :64])
        b = rc.Frame.from_array(big[:64, CELL : CELL + 64])
        fa = rc.extract_features(a)
        fb = rc.extract_features(b)
        # shifting the input one cell shifts the map one cell on the interior
        assert np.allclose(fa.data[1:-1, 2:-1], fb.data[1:-1, 1:-2], atol=1e-12)

    def test_too_small_rejected(self):
        with pytest.raises(rc.DimensionError):
            rc.extract_features(rc.Frame.from_array(np.zeros((8, 32))))
