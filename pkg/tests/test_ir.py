import importlib.resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reefsurvey import ir


def random_frame(rng, h=32, w=32, ooi_p=0.3):
    seg = rng.random((h, w)) < ooi_p
    depth = rng.integers(0, 256, size=(h, w), dtype=np.uint8)
    return seg, depth


class TestLut:
    def test_anchors(self):
        assert ir.colormap(0) == (0, 0, 255)
        assert ir.colormap(64) == (0, 255, 255)
        assert ir.colormap(128) == (0, 255, 0)
        assert ir.colormap(191) == (255, 255, 0)
        assert ir.colormap(255) == (255, 0, 0)

    def test_segment_midpoint_interpolation(self):
        assert ir.colormap(96) == (0, 255, 128)

    def test_never_gray(self):
        for d in range(256):
            r, g, b = ir.colormap(d)
            assert (r, g, b) != (d, d, d)
            assert not (r == g == b)

    def test_globally_injective(self):
        packed = {tuple(c) for c in ir.LUT}
        assert len(packed) == 256

    def test_segmentwise_strict_monotone_channel(self):
        for (i0, _), (i1, _) in zip(ir.LUT_ANCHORS[:-1], ir.LUT_ANCHORS[1:]):
            segment = ir.LUT[i0:i1 + 1].astype(int)
            deltas = np.diff(segment, axis=0)
            moving = [ch for ch in range(3) if np.any(deltas[:, ch] != 0)]
            assert len(moving) == 1
            signs = np.sign(deltas[:, moving[0]])
            assert np.all(signs == signs[0]) and signs[0] != 0

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "lut.csv"
        ir.dump_lut_csv(path)
        assert np.array_equal(ir.load_lut_csv(path), ir.LUT)

    def test_matches_published_csv(self):
        ref = importlib.resources.files("reefsurvey").joinpath(
            "data/colormap_lut.csv")
        published = ir._parse_lut_csv(ref.read_text())
        assert np.array_equal(published, ir.LUT)


class TestComposeSegdepth:
    def test_ooi_pixel_uses_lut(self):
        seg = np.array([[True]])
        depth = np.array([[128]], dtype=np.uint8)
        assert tuple(ir.compose_segdepth(seg, depth)[0, 0]) == (0, 255, 0)

    def test_non_ooi_pixel_replicates(self):
        seg = np.array([[False]])
        depth = np.array([[77]], dtype=np.uint8)
        assert tuple(ir.compose_segdepth(seg, depth)[0, 0]) == (77, 77, 77)

    def test_all_false_mask_is_gray_replication(self):
        rng = np.random.default_rng(0)
        depth = rng.integers(0, 256, size=(16, 16), dtype=np.uint8)
        seg = np.zeros_like(depth, dtype=bool)
        out = ir.compose_segdepth(seg, depth)
        assert np.array_equal(out, np.repeat(depth[..., None], 3, axis=-1))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            ir.compose_segdepth(np.zeros((2, 3), bool),
                                np.zeros((3, 2), np.uint8))

    def test_disjoint_support_and_reconstruction(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            seg, depth = random_frame(rng)
            out = ir.compose_segdepth(seg, depth)
            gray = (out[..., 0] == out[..., 1]) & (out[..., 1] == out[..., 2])
            assert np.array_equal(~gray, seg)
            assert np.array_equal(ir.recover_seg(out), seg)
            assert np.array_equal(ir.recover_depth(out), depth)

    def test_pure_deterministic(self):
        rng = np.random.default_rng(3)
        seg, depth = random_frame(rng)
        assert np.array_equal(ir.compose_segdepth(seg, depth),
                              ir.compose_segdepth(seg, depth))


class TestDownsample:
    def test_constant_image(self):
        img = np.full((8, 8, 3), 93, dtype=np.uint8)
        assert np.all(ir.downsample(img, 4, 4) == 93)

    def test_round_half_up_block(self):
        img = np.array([[0, 0], [0, 4]], dtype=np.uint8)[..., None].repeat(3, -1)
        assert np.all(ir.downsample(img, 1, 1) == 1)

    def test_checkerboard_means_128(self):
        img = np.zeros((4, 4, 3), dtype=np.uint8)
        img[::2, 1::2] = 255
        img[1::2, ::2] = 255
        assert np.all(ir.downsample(img, 2, 2) == 128)

    def test_non_divisible_rejected(self):
        with pytest.raises(ValueError):
            ir.downsample(np.zeros((10, 10, 3), np.uint8), 3, 3)

    @given(st.integers(0, 255), st.integers(1, 4))
    @settings(max_examples=20, deadline=None)
    def test_constant_preserved_any_factor(self, value, factor):
        size = 4 * factor
        img = np.full((size, size, 3), value, dtype=np.uint8)
        assert np.all(ir.downsample(img, 4, 4) == value)
