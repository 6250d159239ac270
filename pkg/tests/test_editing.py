import collections

import numpy as np
import pytest

from umforge import (
    Ellipse,
    MaskEditWarning,
    ParameterError,
    PatchSpec,
    Polygon,
    StampFromMask,
    UnsupervisedMask,
    ValidationError,
    insert_patch,
    intensity_sweep,
)
from umforge.editing import rasterize_footprint


def make_mask(values, t=50, m=16):
    arr = np.asarray(values, dtype=np.uint8)
    return UnsupervisedMask(
        values=arr,
        threshold_t=t,
        superpixel_count_m=m,
        supercluster_values=tuple(int(v) for v in np.unique(arr)),
    )


@pytest.fixture
def flat_mask():
    return make_mask(np.zeros((32, 32), dtype=np.uint8))


class TestFootprints:
    def test_ellipse_outside_bounds_is_empty(self):
        fp = rasterize_footprint(Ellipse(cx=100, cy=100, rx=5, ry=5), 32, 32)
        assert not fp.any()

    def test_zero_radius_is_single_pixel(self):
        fp = rasterize_footprint(Ellipse(cx=10, cy=7, rx=0, ry=0), 32, 32)
        assert fp.sum() == 1
        assert fp[7, 10]

    def test_ellipse_pixel_center_rule(self):
        fp = rasterize_footprint(Ellipse(cx=8, cy=8, rx=3, ry=2), 17, 17)
        ys, xs = np.nonzero(fp)
        assert np.all(((xs - 8) / 3.0) ** 2 + ((ys - 8) / 2.0) ** 2 <= 1.0)
        # complement check: every excluded pixel really fails the test
        outside = ~fp
        ys, xs = np.nonzero(outside)
        assert np.all(((xs - 8) / 3.0) ** 2 + ((ys - 8) / 2.0) ** 2 > 1.0)

    def test_polygon_square(self):
        fp = rasterize_footprint(
            Polygon(((2.0, 2.0), (6.0, 2.0), (6.0, 6.0), (2.0, 6.0))), 10, 10
        )
        assert fp.sum() == 16
        assert fp[2:6, 2:6].all()

    def test_polygon_triangle_matches_halfplane(self):
        fp = rasterize_footprint(Polygon(((0.0, 0.0), (8.0, 0.0), (0.0, 8.0))), 10, 10)
        ys, xs = np.nonzero(fp)
        assert np.all(xs + ys < 8 + 1e-9)


class TestInsertPatch:
    def test_out_of_bounds_patch_is_noop(self, flat_mask):
        patch = PatchSpec(shape=Ellipse(cx=500, cy=500, rx=4, ry=4), intensity=100)
        with pytest.warns(MaskEditWarning):
            out = insert_patch(flat_mask, patch)
        assert np.array_equal(out.values, flat_mask.values)

    def test_footprint_painted_background_untouched(self, flat_mask):
        patch = PatchSpec(shape=Ellipse(cx=16, cy=16, rx=5, ry=3), intensity=150)
        out = insert_patch(flat_mask, patch)
        fp = rasterize_footprint(patch.shape, 32, 32)
        assert np.all(out.values[fp] == 150)
        assert np.array_equal(out.values[~fp], flat_mask.values[~fp])
        assert out.supercluster_values == (0, 150)

    def test_rejects_non_multiple_intensity(self, flat_mask):
        patch = PatchSpec(shape=Ellipse(cx=16, cy=16, rx=3, ry=3), intensity=130)
        with pytest.raises(ValidationError):
            insert_patch(flat_mask, patch)

    def test_stamp_copies_value_multiset(self):
        rng = np.random.default_rng(6)
        source = make_mask((rng.integers(0, 6, size=(16, 16)) * 50).astype(np.uint8))
        target = make_mask(np.zeros((32, 32), dtype=np.uint8))
        stamp = StampFromMask(source=source, x0=2, y0=3, width=8, height=6, dest_x=10, dest_y=12)
        out = insert_patch(target, PatchSpec(shape=stamp))
        window = source.values[3:9, 2:10]
        stamped = out.values[12:18, 10:18]
        assert np.array_equal(stamped, window)
        assert collections.Counter(stamped.ravel().tolist()) == collections.Counter(
            window.ravel().tolist()
        )

    def test_stamp_clipped_at_border(self):
        source = make_mask(np.full((8, 8), 200, dtype=np.uint8))
        target = make_mask(np.zeros((16, 16), dtype=np.uint8))
        stamp = StampFromMask(source=source, x0=0, y0=0, width=8, height=8, dest_x=12, dest_y=12)
        out = insert_patch(target, PatchSpec(shape=stamp))
        assert np.all(out.values[12:, 12:] == 200)
        assert np.all(out.values[:12, :] == 0)

    def test_stamp_threshold_mismatch(self):
        source = make_mask(np.zeros((4, 4), dtype=np.uint8), t=25)
        target = make_mask(np.zeros((8, 8), dtype=np.uint8), t=50)
        stamp = StampFromMask(source=source, x0=0, y0=0, width=4, height=4, dest_x=0, dest_y=0)
        with pytest.raises(ValidationError):
            insert_patch(target, PatchSpec(shape=stamp))

    def test_requires_intensity_for_geometry(self, flat_mask):
        with pytest.raises(ParameterError):
            PatchSpec(shape=Ellipse(cx=1, cy=1, rx=1, ry=1))


class TestIntensitySweep:
    def test_empty_values(self, flat_mask):
        patch = PatchSpec(shape=Ellipse(cx=16, cy=16, rx=4, ry=4), intensity=100)
        assert intensity_sweep(flat_mask, patch, []) == []

    def test_singleton_matches_insert(self, flat_mask):
        patch = PatchSpec(shape=Ellipse(cx=16, cy=16, rx=4, ry=4), intensity=100)
        swept = intensity_sweep(flat_mask, patch, [100])
        direct = insert_patch(flat_mask, patch)
        assert len(swept) == 1
        assert np.array_equal(swept[0].values, direct.values)

    def test_ggo_to_consolidation_sweep(self, flat_mask):
        # sweeping 100 -> 250 moves the footprint histogram bin by bin while
        # the background histogram stays fixed
        patch = PatchSpec(shape=Ellipse(cx=16, cy=16, rx=6, ry=4), intensity=100)
        values = [100, 150, 200, 250]
        masks = intensity_sweep(flat_mask, patch, values)
        assert len(masks) == 4
        fp = rasterize_footprint(patch.shape, 32, 32)
        for v, m in zip(values, masks):
            hist = np.bincount(m.values[fp].ravel(), minlength=256)
            assert hist[v] == fp.sum()
            assert np.array_equal(m.values[~fp], flat_mask.values[~fp])
        for a, b in zip(masks, masks[1:]):
            diff = a.values != b.values
            assert diff.any()
            assert not (diff & ~fp).any()

    def test_rejects_bad_sweep_value(self, flat_mask):
        patch = PatchSpec(shape=Ellipse(cx=16, cy=16, rx=4, ry=4), intensity=100)
        with pytest.raises(ValidationError):
            intensity_sweep(flat_mask, patch, [100, 101])
