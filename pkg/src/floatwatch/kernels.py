"""Per-pixel hot loops, each in a numba flavour and a pure-numpy flavour.

The un-suffixed names at the bottom of the module are the dispatchers the rest
of the package calls; which flavour they bind to is decided once at import by
``FLOATWATCH_ACCEL`` (see ``_accel``). Both flavours are public so tests and
the benchmark can run them side by side.

Outputs of the two flavours are identical, including label numbering and
tie-breaking, not merely equivalent.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit

# Columns of the component statistics table.
STAT_AREA, STAT_XMIN, STAT_YMIN, STAT_XMAX, STAT_YMAX, STAT_SUMX, STAT_SUMY = range(7)

# ---------------------------------------------------------------------------
# absolute difference / threshold
# ---------------------------------------------------------------------------


@njit
def _absdiff_nb(a, b):
    h, w = a.shape
    out = np.empty((h, w), np.uint8)
    for y in range(h):
        for x in range(w):
            va = np.int16(a[y, x])
            vb = np.int16(b[y, x])
            out[y, x] = va - vb if va >= vb else vb - va
    return out


def _absdiff_np(a, b):
    return np.abs(a.astype(np.int16) - b.astype(np.int16)).astype(np.uint8)


@njit
def _threshold_nb(d, t):
    h, w = d.shape
    out = np.empty((h, w), np.uint8)
    for y in range(h):
        for x in range(w):
            out[y, x] = 255 if d[y, x] > t else 0
    return out


def _threshold_np(d, t):
    return np.where(d > t, np.uint8(255), np.uint8(0)).astype(np.uint8)


@njit
def _absdiff_float_threshold_nb(frame, ref, t):
    # |frame - ref| > t with ref already rounded to integers (stored as float64)
    h, w = frame.shape
    out = np.empty((h, w), np.uint8)
    for y in range(h):
        for x in range(w):
            d = abs(np.float64(frame[y, x]) - ref[y, x])
            out[y, x] = 255 if d > t else 0
    return out


def _absdiff_float_threshold_np(frame, ref, t):
    d = np.abs(frame.astype(np.float64) - ref)
    return np.where(d > t, np.uint8(255), np.uint8(0)).astype(np.uint8)


# ---------------------------------------------------------------------------
# 8-connected component labelling
# ---------------------------------------------------------------------------
# Labels are numbered 1..n in raster order of each component's first pixel.


@njit
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


@njit
def _label_nb(mask):
    h, w = mask.shape
    prov = np.zeros((h, w), np.int32)
    parent = np.zeros(h * w // 2 + 2, np.int32)
    nxt = 1
    for y in range(h):
        for x in range(w):
            if mask[y, x] == 0:
                continue
            best = 0
            # previously visited neighbours: W, NW, N, NE
            for k in range(4):
                if k == 0:
                    ny, nx = y, x - 1
                elif k == 1:
                    ny, nx = y - 1, x - 1
                elif k == 2:
                    ny, nx = y - 1, x
                else:
                    ny, nx = y - 1, x + 1
                if ny < 0 or nx < 0 or nx >= w:
                    continue
                lab = prov[ny, nx]
                if lab == 0:
                    continue
                if best == 0:
                    best = lab
                else:
                    _union(parent, best, lab)
            if best == 0:
                if nxt >= parent.shape[0]:
                    grown = np.zeros(parent.shape[0] * 2, np.int32)
                    grown[: parent.shape[0]] = parent
                    parent = grown
                parent[nxt] = nxt
                best = nxt
                nxt += 1
            prov[y, x] = best

    # final numbering in raster order of first appearance
    final = np.zeros(nxt, np.int32)
    out = np.zeros((h, w), np.int32)
    n = 0
    for y in range(h):
        for x in range(w):
            p = prov[y, x]
            if p == 0:
                continue
            r = _find(parent, p)
            if final[r] == 0:
                n += 1
                final[r] = n
            out[y, x] = final[r]

    stats = np.zeros((n, 7), np.int64)
    for i in range(n):
        stats[i, STAT_XMIN] = w
        stats[i, STAT_YMIN] = h
        stats[i, STAT_XMAX] = -1
        stats[i, STAT_YMAX] = -1
    for y in range(h):
        for x in range(w):
            lab = out[y, x]
            if lab == 0:
                continue
            s = stats[lab - 1]
            s[STAT_AREA] += 1
            if x < s[STAT_XMIN]:
                s[STAT_XMIN] = x
            if x > s[STAT_XMAX]:
                s[STAT_XMAX] = x
            if y < s[STAT_YMIN]:
                s[STAT_YMIN] = y
            if y > s[STAT_YMAX]:
                s[STAT_YMAX] = y
            s[STAT_SUMX] += x
            s[STAT_SUMY] += y
    return out, stats


def _label_np(mask):
    h, w = mask.shape
    flat = np.ascontiguousarray(mask).reshape(-1) != 0
    fg = np.flatnonzero(flat)
    n = fg.size
    labels_img = np.zeros(h * w, np.int32)
    if n == 0:
        return labels_img.reshape(h, w), np.zeros((0, 7), np.int64)

    pos = np.full(h * w, -1, np.int64)
    pos[fg] = np.arange(n)
    xs = fg % w
    ys = fg // w

    us, vs = [], []
    for dx, dy in ((-1, 0), (-1, -1), (0, -1), (1, -1)):
        ok = (ys + dy >= 0) & (xs + dx >= 0) & (xs + dx < w)
        src = np.flatnonzero(ok)
        nb = pos[fg[src] + dy * w + dx]
        hit = nb >= 0
        us.append(src[hit])
        vs.append(nb[hit])
    u = np.concatenate(us)
    v = np.concatenate(vs)

    # hook-and-jump; every label stays an index inside its own component, so
    # the surviving root of each component is its smallest (raster-first) index
    lab = np.arange(n, dtype=np.int64)
    while True:
        lu = lab[u]
        lv = lab[v]
        if np.array_equal(lu, lv):
            break
        np.minimum.at(lab, lu, lv)
        np.minimum.at(lab, lv, lu)
        while True:
            jumped = lab[lab]
            if np.array_equal(jumped, lab):
                break
            lab = jumped

    roots, comp = np.unique(lab, return_inverse=True)
    k = roots.size
    labels_img[fg] = comp.astype(np.int32) + 1

    stats = np.zeros((k, 7), np.int64)
    stats[:, STAT_AREA] = np.bincount(comp, minlength=k)
    stats[:, STAT_SUMX] = np.bincount(comp, weights=xs, minlength=k).astype(np.int64)
    stats[:, STAT_SUMY] = np.bincount(comp, weights=ys, minlength=k).astype(np.int64)
    xmin = np.full(k, w, np.int64)
    ymin = np.full(k, h, np.int64)
    xmax = np.full(k, -1, np.int64)
    ymax = np.full(k, -1, np.int64)
    np.minimum.at(xmin, comp, xs)
    np.minimum.at(ymin, comp, ys)
    np.maximum.at(xmax, comp, xs)
    np.maximum.at(ymax, comp, ys)
    stats[:, STAT_XMIN] = xmin
    stats[:, STAT_YMIN] = ymin
    stats[:, STAT_XMAX] = xmax
    stats[:, STAT_YMAX] = ymax
    return labels_img.reshape(h, w), stats


# ---------------------------------------------------------------------------
# gray-level co-occurrence counts
# ---------------------------------------------------------------------------


@njit
def _glcm_nb(q, levels, dx, dy):
    h, w = q.shape
    counts = np.zeros((levels, levels), np.int64)
    y0 = max(0, -dy)
    y1 = min(h, h - dy)
    x0 = max(0, -dx)
    x1 = min(w, w - dx)
    for y in range(y0, y1):
        for x in range(x0, x1):
            counts[q[y, x], q[y + dy, x + dx]] += 1
    return counts


def _glcm_np(q, levels, dx, dy):
    h, w = q.shape
    y0, y1 = max(0, -dy), min(h, h - dy)
    x0, x1 = max(0, -dx), min(w, w - dx)
    a = q[y0:y1, x0:x1].astype(np.int64)
    b = q[y0 + dy:y1 + dy, x0 + dx:x1 + dx].astype(np.int64)
    flat = np.bincount((a * levels + b).ravel(), minlength=levels * levels)
    return flat.reshape(levels, levels).astype(np.int64)


# ---------------------------------------------------------------------------
# block matching
# ---------------------------------------------------------------------------


def search_order(radius):
    """Candidate displacements ordered by the tie-break key (|dx|+|dy|, dy, dx)."""
    cands = [(dx, dy) for dy in range(-radius, radius + 1) for dx in range(-radius, radius + 1)]
    cands.sort(key=lambda d: (abs(d[0]) + abs(d[1]), d[1], d[0]))
    return np.array(cands, dtype=np.int64).reshape(-1, 2)


@njit
def _block_motion_nb(prev, cur, block, order):
    h, w = cur.shape
    nby = h // block
    nbx = w // block
    out = np.zeros((nby, nbx, 2), np.int32)
    for by in range(nby):
        for bx in range(nbx):
            y0 = by * block
            x0 = bx * block
            best = np.int64(-1)
            for c in range(order.shape[0]):
                dx = order[c, 0]
                dy = order[c, 1]
                sy = y0 - dy
                sx = x0 - dx
                if sy < 0 or sx < 0 or sy + block > h or sx + block > w:
                    continue
                sad = np.int64(0)
                for yy in range(block):
                    for xx in range(block):
                        d = np.int64(cur[y0 + yy, x0 + xx]) - np.int64(prev[sy + yy, sx + xx])
                        sad += d if d >= 0 else -d
                if best < 0 or sad < best:
                    best = sad
                    out[by, bx, 0] = dx
                    out[by, bx, 1] = dy
    return out


def _block_motion_np(prev, cur, block, order):
    h, w = cur.shape
    nby, nbx = h // block, w // block
    out = np.zeros((nby, nbx, 2), np.int32)
    if nby == 0 or nbx == 0:
        return out
    cur_blocks = cur[: nby * block, : nbx * block].astype(np.int64)
    cur_blocks = cur_blocks.reshape(nby, block, nbx, block)
    prev64 = prev.astype(np.int64)
    by0 = np.arange(nby) * block
    bx0 = np.arange(nbx) * block
    best = np.full((nby, nbx), -1, np.int64)
    for dx, dy in order:
        dx = int(dx)
        dy = int(dy)
        sy = by0 - dy
        sx = bx0 - dx
        oky = (sy >= 0) & (sy + block <= h)
        okx = (sx >= 0) & (sx + block <= w)
        if not oky.any() or not okx.any():
            continue
        iy = np.flatnonzero(oky)
        ix = np.flatnonzero(okx)
        # contiguous run of valid blocks along each axis
        ys, xs = sy[iy[0]], sx[ix[0]]
        win = prev64[ys: ys + iy.size * block, xs: xs + ix.size * block]
        win = win.reshape(iy.size, block, ix.size, block)
        sad = np.abs(cur_blocks[iy[0]: iy[-1] + 1, :, ix[0]: ix[-1] + 1, :] - win).sum(axis=(1, 3))
        sub = best[iy[0]: iy[-1] + 1, ix[0]: ix[-1] + 1]
        better = (sub < 0) | (sad < sub)
        sub[better] = sad[better]
        o = out[iy[0]: iy[-1] + 1, ix[0]: ix[-1] + 1]
        o[better, 0] = dx
        o[better, 1] = dy
    return out


# ---------------------------------------------------------------------------
# seeded noise: xoshiro256** streams, one per image row
# ---------------------------------------------------------------------------

_M64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
FRAME_MIX = 0xD1B54A32D192ED03
ROW_MIX = 0xC2B2AE3D27D4EB4F
# std-dev of the sum of four independent uniform 16-bit integers
_SUM4_MEAN = 4 * 65535 / 2
_SUM4_STD = float(np.sqrt((65536.0 * 65536.0 - 1.0) / 3.0))


def row_keys(seed: int, t: int, height: int) -> np.ndarray:
    """Per-row splitmix64 starting states for frame ``t``."""
    base = (seed ^ ((t * FRAME_MIX) & _M64)) & _M64
    return np.array([(base ^ ((y * ROW_MIX) & _M64)) & _M64 for y in range(height)], dtype=np.uint64)


@njit
def _splitmix_nb(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return state, z ^ (z >> np.uint64(31))


@njit
def _rotl_nb(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit
def _noise_nb(keys, width, mean, std):
    h = keys.shape[0]
    out = np.empty((h, width), np.float64)
    mask16 = np.uint64(0xFFFF)
    for y in range(h):
        st = keys[y]
        st, s0 = _splitmix_nb(st)
        st, s1 = _splitmix_nb(st)
        st, s2 = _splitmix_nb(st)
        st, s3 = _splitmix_nb(st)
        for x in range(width):
            r = _rotl_nb(s1 * np.uint64(5), 7) * np.uint64(9)
            t = s1 << np.uint64(17)
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = _rotl_nb(s3, 45)
            total = ((r & mask16) + ((r >> np.uint64(16)) & mask16)
                     + ((r >> np.uint64(32)) & mask16) + (r >> np.uint64(48)))
            out[y, x] = (np.float64(total) - mean) / std
    return out


def _splitmix_np(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return state, z ^ (z >> np.uint64(31))


def _rotl_np(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


def _noise_np(keys, width, mean, std):
    h = keys.shape[0]
    st = keys.copy()
    st, s0 = _splitmix_np(st)
    st, s1 = _splitmix_np(st)
    st, s2 = _splitmix_np(st)
    st, s3 = _splitmix_np(st)
    totals = np.empty((width, h), np.uint64)
    mask16 = np.uint64(0xFFFF)
    for x in range(width):
        r = _rotl_np(s1 * np.uint64(5), 7) * np.uint64(9)
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl_np(s3, 45)
        totals[x] = ((r & mask16) + ((r >> np.uint64(16)) & mask16)
                     + ((r >> np.uint64(32)) & mask16) + (r >> np.uint64(48)))
    return (totals.T.astype(np.float64) - mean) / std


def xoshiro_reference(key: int, count: int) -> list[int]:
    """Plain-int xoshiro256** seeded through splitmix64; an independent oracle."""
    def splitmix(s):
        s = (s + GOLDEN) & _M64
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        return s, z ^ (z >> 31)

    def rotl(x, k):
        return ((x << k) | (x >> (64 - k))) & _M64

    s = key & _M64
    st = []
    for _ in range(4):
        s, z = splitmix(s)
        st.append(z)
    s0, s1, s2, s3 = st
    out = []
    for _ in range(count):
        out.append((rotl((s1 * 5) & _M64, 7) * 9) & _M64)
        t = (s1 << 17) & _M64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = rotl(s3, 45)
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

IMPLEMENTATIONS = {
    "numba": {
        "absdiff": _absdiff_nb,
        "threshold": _threshold_nb,
        "absdiff_float_threshold": _absdiff_float_threshold_nb,
        "label": _label_nb,
        "glcm": _glcm_nb,
        "block_motion": _block_motion_nb,
        "noise": _noise_nb,
    },
    "numpy": {
        "absdiff": _absdiff_np,
        "threshold": _threshold_np,
        "absdiff_float_threshold": _absdiff_float_threshold_np,
        "label": _label_np,
        "glcm": _glcm_np,
        "block_motion": _block_motion_np,
        "noise": _noise_np,
    },
}

_active = IMPLEMENTATIONS["numba" if USE_NUMBA else "numpy"]


def absdiff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _active["absdiff"](a, b)


def threshold(d: np.ndarray, t: int) -> np.ndarray:
    return _active["threshold"](d, np.int64(t))


def absdiff_float_threshold(frame: np.ndarray, ref: np.ndarray, t: float) -> np.ndarray:
    return _active["absdiff_float_threshold"](frame, ref, np.float64(t))


def label_components(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Label 8-connected non-zero pixels; returns ``(labels, stats)``.

    ``stats`` has one row per component (row i is label i+1) with columns
    area, xmin, ymin, xmax, ymax, sum of x, sum of y.
    """
    return _active["label"](np.ascontiguousarray(mask, dtype=np.uint8))


def glcm_counts(q: np.ndarray, levels: int, dx: int, dy: int) -> np.ndarray:
    return _active["glcm"](np.ascontiguousarray(q, dtype=np.int64), levels, dx, dy)


def block_motion(prev: np.ndarray, cur: np.ndarray, block: int, radius: int) -> np.ndarray:
    return _active["block_motion"](prev, cur, block, search_order(radius))


def gaussian_noise(seed: int, t: int, height: int, width: int) -> np.ndarray:
    """Approximately standard-normal field, bit-reproducible from ``(seed, t)``."""
    return _active["noise"](row_keys(seed, t, height), width, _SUM4_MEAN, _SUM4_STD)
