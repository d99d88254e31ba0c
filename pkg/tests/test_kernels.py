"""Each hot kernel, in both flavours, against the slow oracles and each other."""

from __future__ import annotations

import numpy as np
import pytest

from floatwatch import kernels
from floatwatch._accel import HAVE_NUMBA

from .oracles import (
    absdiff_oracle,
    block_motion_oracle,
    components_oracle,
    seeded_stream,
    splitmix64,
    xoshiro256ss,
)


def test_absdiff(impl, rng):
    for _ in range(20):
        h, w = rng.integers(1, 40, 2)
        a = rng.integers(0, 256, (h, w), dtype=np.uint8)
        b = rng.integers(0, 256, (h, w), dtype=np.uint8)
        out = impl["absdiff"](a, b)
        assert out.dtype == np.uint8
        assert out.tolist() == absdiff_oracle(a.tolist(), b.tolist())


def test_threshold_boundary(impl):
    d = np.array([[24, 25, 26, 0, 255]], dtype=np.uint8)
    assert impl["threshold"](d, np.int64(25)).tolist() == [[0, 0, 255, 0, 255]]


def test_absdiff_float_threshold(impl):
    frame = np.array([[100, 126, 74, 125]], dtype=np.uint8)
    ref = np.array([[100.0, 100.0, 100.0, 100.0]])
    assert impl["absdiff_float_threshold"](frame, ref, np.float64(25.0)).tolist() == [[0, 255, 255, 0]]


def _components_from_stats(stats):
    return [tuple(int(v) for v in row[:5]) for row in stats]


def test_label_against_flood_fill(impl, rng):
    for _ in range(60):
        h, w = rng.integers(1, 30, 2)
        mask = (rng.random((h, w)) < rng.uniform(0.1, 0.7)).astype(np.uint8) * 255
        labels, stats = impl["label"](mask)
        assert _components_from_stats(stats) == components_oracle(mask.tolist())
        # label image agrees with the stats table
        assert labels.shape == mask.shape
        assert np.array_equal(labels > 0, mask > 0)
        for k, row in enumerate(stats, start=1):
            ys, xs = np.nonzero(labels == k)
            assert row[kernels.STAT_AREA] == ys.size
            assert row[kernels.STAT_SUMX] == xs.sum() and row[kernels.STAT_SUMY] == ys.sum()


def test_label_spiral_and_u_shapes(impl):
    # shapes whose provisional labels must merge late
    u = np.array([
        [1, 0, 0, 0, 1],
        [1, 0, 1, 0, 1],
        [1, 0, 1, 0, 1],
        [1, 1, 1, 1, 1],
    ], dtype=np.uint8)
    _, stats = impl["label"](u)
    assert len(stats) == 1 and stats[0][kernels.STAT_AREA] == u.sum()
    diag = np.eye(6, dtype=np.uint8)[::-1]
    _, stats = impl["label"](diag)
    assert len(stats) == 1


def test_label_empty(impl):
    labels, stats = impl["label"](np.zeros((5, 7), np.uint8))
    assert not labels.any() and len(stats) == 0


def test_glcm_counts_brute_force(impl, rng):
    for dx, dy in [(1, 0), (0, 1), (-1, 1), (2, -1)]:
        q = rng.integers(0, 8, (9, 11)).astype(np.int64)
        counts = impl["glcm"](q, 8, dx, dy)
        ref = np.zeros((8, 8), np.int64)
        h, w = q.shape
        for y in range(h):
            for x in range(w):
                if 0 <= x + dx < w and 0 <= y + dy < h:
                    ref[q[y, x], q[y + dy, x + dx]] += 1
        assert np.array_equal(counts, ref)


@pytest.mark.parametrize("block, radius", [(4, 1), (4, 2), (5, 3)])
def test_block_motion_exhaustive(impl, rng, block, radius):
    base = rng.integers(0, 256, (26, 31), dtype=np.uint8)
    for shift in [(0, 0), (2, 1), (-3, 0), (1, -2)]:
        cur = np.roll(base, shift[::-1], axis=(0, 1))
        out = impl["block_motion"](base, cur, block, kernels.search_order(radius))
        assert out.tolist() == [list(map(list, row)) for row in block_motion_oracle(base.tolist(), cur.tolist(), block, radius)]


def test_block_motion_ties_prefer_small_motion(impl):
    flat = np.full((16, 16), 50, np.uint8)
    out = impl["block_motion"](flat, flat, 4, kernels.search_order(2))
    assert not out.any()


def test_search_order_key():
    order = kernels.search_order(2).tolist()
    assert order[0] == [0, 0]
    assert order[1:5] == [[0, -1], [-1, 0], [1, 0], [0, 1]]
    keys = [(abs(dx) + abs(dy), dy, dx) for dx, dy in order]
    assert keys == sorted(keys)


# -- noise generator -------------------------------------------------------

def test_splitmix_known_answer():
    # first outputs of splitmix64 seeded with 0
    st, z = splitmix64(0)
    assert z == 0xE220A8397B1DCDAF
    _, z = splitmix64(st)
    assert z == 0x6E789E6AA1B965F4


def test_xoshiro_known_answer():
    # xoshiro256** from state (1, 2, 3, 4)
    assert xoshiro256ss([1, 2, 3, 4], 4) == [11520, 0, 1509978240, 1215971899390074240]


@pytest.mark.parametrize("key", [0, 1, 0xDEADBEEF, (1 << 64) - 1])
def test_reference_stream_matches_oracle(key):
    assert kernels.xoshiro_reference(key, 50) == seeded_stream(key, 50)


def test_noise_matches_reference_stream(impl):
    seed, t, h, w = 99, 3, 4, 17
    keys = kernels.row_keys(seed, t, h)
    field = impl["noise"](keys, w, kernels._SUM4_MEAN, kernels._SUM4_STD)
    for y in range(h):
        words = seeded_stream(int(keys[y]), w)
        sums = [sum((r >> s) & 0xFFFF for s in (0, 16, 32, 48)) for r in words]
        expected = [(v - kernels._SUM4_MEAN) / kernels._SUM4_STD for v in sums]
        assert field[y].tolist() == expected


def test_row_keys_formula():
    seed, t = 12345, 7
    keys = kernels.row_keys(seed, t, 3)
    m = (1 << 64) - 1
    for y in range(3):
        assert int(keys[y]) == (seed ^ (t * 0xD1B54A32D192ED03 & m) ^ (y * 0xC2B2AE3D27D4EB4F & m)) & m


def test_noise_statistics():
    z = kernels.gaussian_noise(5, 0, 200, 200)
    assert abs(z.mean()) < 0.02
    assert abs(z.std() - 1.0) < 0.02


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_flavours_bit_identical(rng):
    nb, npy = kernels.IMPLEMENTATIONS["numba"], kernels.IMPLEMENTATIONS["numpy"]
    a = rng.integers(0, 256, (48, 64), dtype=np.uint8)
    b = rng.integers(0, 256, (48, 64), dtype=np.uint8)
    assert np.array_equal(nb["absdiff"](a, b), npy["absdiff"](a, b))
    mask = (rng.random((48, 64)) < 0.4).astype(np.uint8)
    la, sa = nb["label"](mask)
    lb, sb = npy["label"](mask)
    assert np.array_equal(la, lb) and np.array_equal(sa, sb)
    order = kernels.search_order(3)
    assert np.array_equal(nb["block_motion"](a, b, 8, order), npy["block_motion"](a, b, 8, order))
    keys = kernels.row_keys(1, 2, 48)
    assert np.array_equal(nb["noise"](keys, 64, kernels._SUM4_MEAN, kernels._SUM4_STD),
                          npy["noise"](keys, 64, kernels._SUM4_MEAN, kernels._SUM4_STD))
