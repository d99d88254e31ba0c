from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from floatwatch.errors import (
    BadThreshold,
    ChannelMismatch,
    DimensionMismatch,
    SequenceOrder,
    UninitializedModel,
)
from floatwatch.imaging import Frame
from floatwatch.motion import (
    BackgroundModel,
    BinaryMask,
    DiffMap,
    MotionConfig,
    binarize,
    block_motion,
    extract_regions,
    foreground_mask,
    frame_difference,
    update_background,
)

from .conftest import gray
from .oracles import block_motion_oracle, components_oracle

frames = st.integers(1, 16).flatmap(lambda w: st.integers(1, 16).flatmap(
    lambda h: st.tuples(*[st.lists(st.lists(st.integers(0, 255), min_size=w, max_size=w),
                                   min_size=h, max_size=h)] * 2)))


def test_identical_frames_give_zero_difference():
    f = gray(np.full((4, 5), 90), seq=0)
    assert not frame_difference(f.with_meta(seq=1), f).values.any()


def test_single_pixel_change():
    a = np.full((3, 3), 100, np.uint8)
    b = a.copy()
    b[1, 2] = 160
    d = frame_difference(gray(b, seq=1), gray(a, seq=0)).values
    assert d[1, 2] == 60 and d.sum() == 60


def test_difference_errors():
    a = gray(np.zeros((3, 3)), seq=0)
    with pytest.raises(SequenceOrder):
        frame_difference(a, a)
    with pytest.raises(SequenceOrder):
        frame_difference(a, a.with_meta(seq=5))
    with pytest.raises(DimensionMismatch):
        frame_difference(gray(np.zeros((3, 4)), seq=1), a)
    with pytest.raises(ChannelMismatch):
        frame_difference(Frame(np.zeros((3, 3, 3), np.uint8), seq=1), a)


@given(frames)
def test_difference_exact_and_symmetric(pair):
    a, b = (np.array(p, np.uint8) for p in pair)
    d1 = frame_difference(gray(a, seq=1), gray(b, seq=0)).values
    d2 = frame_difference(gray(b, seq=1), gray(a, seq=0)).values
    assert np.array_equal(d1, np.abs(a.astype(int) - b.astype(int)))
    assert np.array_equal(d1, d2)


def test_binarize_boundary():
    d = DiffMap(np.array([[25, 26, 0]], np.uint8))
    assert binarize(d, 25).values.tolist() == [[0, 255, 0]]


@pytest.mark.parametrize("t", [0, 255, -3, 300])
def test_binarize_bad_threshold(t):
    with pytest.raises(BadThreshold):
        binarize(DiffMap(np.zeros((2, 2), np.uint8)), t)


@given(st.lists(st.integers(0, 255), min_size=1, max_size=64), st.integers(1, 253))
def test_binarize_values_and_monotone(vals, t):
    d = DiffMap(np.array([vals], np.uint8))
    lo, hi = binarize(d, t).values, binarize(d, t + 1).values
    assert set(np.unique(lo)) <= {0, 255}
    assert not np.any((lo == 0) & (hi == 255))


def test_motion_config_validation():
    for bad in [dict(threshold=0), dict(threshold=255), dict(min_area=0), dict(bg_alpha=0), dict(bg_alpha=1.5),
                dict(connectivity=4)]:
        with pytest.raises(ValueError):
            MotionConfig(**bad)


def _mask(rows):
    return BinaryMask((np.array(rows, np.uint8) > 0).astype(np.uint8) * 255)


def test_extract_regions_examples():
    assert extract_regions(_mask(np.zeros((5, 5)))) == []
    m = np.zeros((10, 12))
    m[1:4, 1:4] = 1
    m[5:8, 7:10] = 1
    regions = extract_regions(_mask(m), MotionConfig(min_area=4))
    assert [r.area for r in regions] == [9, 9]
    assert [(r.box.x, r.box.y) for r in regions] == [(1, 1), (7, 5)]
    diag = extract_regions(_mask(np.eye(4)), MotionConfig(min_area=1))
    assert len(diag) == 1 and diag[0].area == 4


def test_region_order_and_fields():
    m = np.zeros((10, 10))
    m[0, 8] = 1
    m[5:7, 0:2] = 1
    m[2:4, 4:6] = 1
    regions = extract_regions(_mask(m), MotionConfig(min_area=1))
    assert [(r.area, r.box.y, r.box.x) for r in regions] == [(4, 2, 4), (4, 5, 0), (1, 0, 8)]
    assert regions[0].centroid == (4.5, 2.5)


@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_extract_regions_match_flood_fill(w, h, seed, min_area):
    m = np.random.default_rng(seed).random((h, w)) < 0.45
    regions = extract_regions(_mask(m), MotionConfig(min_area=min_area))
    expected = [c for c in components_oracle(m.tolist()) if c[0] >= min_area]
    got = sorted((r.area, r.box.x, r.box.y, r.box.x2 - 1, r.box.y2 - 1) for r in regions)
    assert got == sorted(expected)
    for r in regions:
        assert min_area <= r.area <= r.box.area
        cx, cy = r.centroid
        assert r.box.x <= cx <= r.box.x2 - 1 and r.box.y <= cy <= r.box.y2 - 1
    total = sum(r.area for r in regions)
    assert total <= int(m.sum())
    if min_area == 1:
        assert total == int(m.sum())


def test_background_init_and_update():
    f = gray(np.full((2, 2), 100))
    model = update_background(BackgroundModel(alpha=0.05), f)
    assert np.array_equal(model.mean, f.data) and model.frames_seen == 1
    model = update_background(model, gray(np.full((2, 2), 200)))
    assert np.allclose(model.mean, 105.0, rtol=0, atol=1e-12)
    same = BackgroundModel(alpha=0.05)
    for _ in range(10):
        same = update_background(same, f)
    assert np.array_equal(same.mean, f.data) and same.frames_seen == 10


def test_background_errors():
    with pytest.raises(UninitializedModel):
        foreground_mask(BackgroundModel(), gray(np.zeros((2, 2))))
    model = update_background(BackgroundModel(), gray(np.zeros((2, 2))))
    with pytest.raises(DimensionMismatch):
        update_background(model, gray(np.zeros((3, 2))))
    with pytest.raises(DimensionMismatch):
        foreground_mask(model, gray(np.zeros((3, 2))))


@given(st.floats(0.01, 1.0), st.integers(0, 255), st.integers(0, 255))
def test_background_contraction(alpha, start, target):
    model = update_background(BackgroundModel(alpha=alpha), gray(np.full((1, 1), start)))
    after = update_background(model, gray(np.full((1, 1), target)))
    assert abs(after.mean[0, 0] - target) == pytest.approx((1 - alpha) * abs(start - target), abs=1e-9)
    assert 0 <= after.mean[0, 0] <= 255


def test_foreground_mask():
    bg = np.full((8, 8), 90, np.uint8)
    model = update_background(BackgroundModel(), gray(bg))
    assert not foreground_mask(model, gray(bg)).values.any()
    obj = bg.copy()
    obj[2:5, 3:6] = 200
    fg = foreground_mask(model, gray(obj)).values
    assert np.array_equal(fg > 0, obj != bg)
    # the comparison uses the rounded mean, strict inequality
    model = BackgroundModel(np.full((1, 1), 99.5), 5)
    assert foreground_mask(model, gray([[125]]), 25).values[0, 0] == 0
    assert foreground_mask(model, gray([[126]]), 25).values[0, 0] == 255


def test_block_motion_examples(rng):
    base = rng.integers(0, 256, (32, 40), dtype=np.uint8)
    same = block_motion(gray(base), gray(base, seq=1), 8, 4)
    assert same.shape == (4, 5, 2) and not same.any()
    shifted = np.roll(base, 3, axis=1)
    field = block_motion(gray(base), gray(shifted, seq=1), 8, 4)
    assert (field[:, 1:, 0] == 3).all() and (field[:, 1:, 1] == 0).all()
    clamped = block_motion(gray(base), gray(shifted, seq=1), 8, 1)
    assert clamped.tolist() == [list(map(list, r)) for r in block_motion_oracle(base.tolist(), shifted.tolist(), 8, 1)]
    assert (np.abs(clamped) <= 1).all()


def test_block_motion_errors():
    a = gray(np.zeros((16, 16)))
    with pytest.raises(DimensionMismatch):
        block_motion(a, gray(np.zeros((16, 8))))
    with pytest.raises(ValueError):
        block_motion(a, a, block=3)
    with pytest.raises(ValueError):
        block_motion(a, a, radius=0)


@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(0, 2**32 - 1))
def test_block_motion_recovers_translation(dx, dy, seed):
    big = np.random.default_rng(seed).integers(0, 256, (40, 40), dtype=np.uint8)
    prev = big[8:32, 8:32]
    cur = big[8 - dy:32 - dy, 8 - dx:32 - dx]
    field = block_motion(gray(prev), gray(cur.copy()), 8, 3)
    # blocks whose displaced-back source lies fully inside prev
    for by in range(field.shape[0]):
        for bx in range(field.shape[1]):
            sy, sx = by * 8 - dy, bx * 8 - dx
            if 0 <= sy and sy + 8 <= 24 and 0 <= sx and sx + 8 <= 24:
                assert tuple(field[by, bx]) == (dx, dy)
