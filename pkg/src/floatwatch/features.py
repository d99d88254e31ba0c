"""Static appearance features: colour moments, GLCM texture, Harris corners
and pairwise spatial relations between boxes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateInput, EmptyRegion
from .imaging import BoundingBox, Frame

DEFAULT_GLCM_LEVELS = 8
DEFAULT_GLCM_OFFSETS = ((1, 0), (0, 1))

HARRIS_K = 0.04
HARRIS_THRESHOLD = 1e6
HARRIS_NMS_RADIUS = 4


# ---------------------------------------------------------------------------
# colour moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColorMoments:
    """Per-channel mean, standard deviation and signed cube-rooted skew."""

    mu: tuple[float, ...]
    sigma: tuple[float, ...]
    skew: tuple[float, ...]

    @property
    def channels(self) -> int:
        return len(self.mu)


def color_moments(pixels) -> ColorMoments:
    """Colour moments of a sample set.

    ``pixels`` is laid out channel-first, ``(C, N)``; a 1-D array is treated as
    a single channel. The mean is taken first and the central moments summed in
    a second pass, all in float64. The third moment keeps its sign through a
    real cube root.
    """
    p = np.asarray(pixels, dtype=np.float64)
    if p.ndim == 1:
        p = p[None, :]
    if p.ndim != 2:
        raise ValueError(f"expected (channels, N) samples, got shape {p.shape}")
    n = p.shape[1]
    if n == 0:
        raise EmptyRegion("color_moments needs at least one sample")
    mu = p.sum(axis=1) / n
    d = p - mu[:, None]
    m2 = (d * d).sum(axis=1) / n
    m3 = (d * d * d).sum(axis=1) / n
    sigma = np.sqrt(m2)
    skew = np.cbrt(m3)
    return ColorMoments(tuple(mu.tolist()), tuple(sigma.tolist()), tuple(skew.tolist()))


def frame_moments(frame: Frame, box: BoundingBox | None = None, mask: np.ndarray | None = None) -> ColorMoments:
    """Colour moments over a box (and optional boolean mask within it)."""
    data = frame.data
    if box is not None:
        data = data[box.y:box.y2, box.x:box.x2]
    if data.ndim == 2:
        data = data[:, :, None]
    samples = data.reshape(-1, data.shape[2])
    if mask is not None:
        samples = samples[np.asarray(mask, dtype=bool).reshape(-1)]
    return color_moments(samples.T)


# ---------------------------------------------------------------------------
# texture
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TextureStats:
    offset: tuple[int, int]
    contrast: float
    energy: float
    homogeneity: float
    correlation: float


@dataclass(frozen=True)
class TextureDescriptor:
    stats: tuple[TextureStats, ...]

    def mean(self, name: str) -> float:
        return float(np.mean([getattr(s, name) for s in self.stats]))

    @property
    def contrast(self) -> float:
        return self.mean("contrast")

    @property
    def energy(self) -> float:
        return self.mean("energy")

    @property
    def homogeneity(self) -> float:
        return self.mean("homogeneity")

    @property
    def correlation(self) -> float:
        return self.mean("correlation")


def quantize(gray: np.ndarray, levels: int) -> np.ndarray:
    return (gray.astype(np.int64) * levels) // 256


def glcm_matrix(gray: np.ndarray, levels: int, offset: tuple[int, int]) -> np.ndarray:
    """Symmetric, normalised co-occurrence matrix for one ``(dx, dy)`` offset."""
    dx, dy = offset
    h, w = gray.shape
    if abs(dx) >= w or abs(dy) >= h:
        raise DegenerateInput(f"offset {offset} does not fit a {w}x{h} frame")
    counts = kernels.glcm_counts(quantize(gray, levels), levels, dx, dy)
    sym = counts + counts.T
    return sym / sym.sum()


def glcm_stats(p: np.ndarray, offset: tuple[int, int]) -> TextureStats:
    levels = p.shape[0]
    i, j = np.indices((levels, levels), dtype=np.float64)
    diff2 = (i - j) ** 2
    contrast = float((p * diff2).sum())
    energy = float((p * p).sum())
    homogeneity = float((p / (1.0 + diff2)).sum())
    mu_i = (i * p).sum()
    mu_j = (j * p).sum()
    var_i = (((i - mu_i) ** 2) * p).sum()
    var_j = (((j - mu_j) ** 2) * p).sum()
    if var_i <= 0.0 or var_j <= 0.0:
        correlation = 0.0
    else:
        correlation = float((((i - mu_i) * (j - mu_j)) * p).sum() / np.sqrt(var_i * var_j))
    return TextureStats(tuple(offset), contrast, energy, homogeneity, correlation)


def glcm_texture(gray: Frame | np.ndarray, levels: int = DEFAULT_GLCM_LEVELS,
                 offsets=DEFAULT_GLCM_OFFSETS) -> TextureDescriptor:
    plane = gray.data if isinstance(gray, Frame) else np.asarray(gray)
    if plane.ndim != 2:
        raise DegenerateInput("glcm_texture expects a single-channel plane")
    if plane.shape[0] < 2 or plane.shape[1] < 2:
        raise DegenerateInput(f"glcm_texture needs at least 2x2, got {plane.shape[1]}x{plane.shape[0]}")
    if levels < 2:
        raise DegenerateInput("glcm_texture needs at least 2 levels")
    stats = tuple(glcm_stats(glcm_matrix(plane, levels, tuple(o)), tuple(o)) for o in offsets)
    return TextureDescriptor(stats)


# ---------------------------------------------------------------------------
# corners
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Corner:
    x: int
    y: int
    response: float


def _pad_edge(a):
    return np.pad(a, 1, mode="edge")


def _sobel(plane):
    p = _pad_edge(plane.astype(np.int64))
    # [[-1,0,1],[-2,0,2],[-1,0,1]] and its transpose
    gx = (p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:]) - (p[:-2, :-2] + 2 * p[1:-1, :-2] + p[2:, :-2])
    gy = (p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:]) - (p[:-2, :-2] + 2 * p[:-2, 1:-1] + p[:-2, 2:])
    return gx, gy


def _smooth121(a):
    # 3x3 binomial [1,2,1] x [1,2,1], unnormalised (sum 16), integer exact
    p = _pad_edge(a)
    rows = p[:, :-2] + 2 * p[:, 1:-1] + p[:, 2:]
    return rows[:-2] + 2 * rows[1:-1] + rows[2:]


def harris_response(plane: np.ndarray, k: float = HARRIS_K) -> np.ndarray:
    """R = det(M) - k trace(M)^2 with a Gaussian-weighted 3x3 structure tensor."""
    gx, gy = _sobel(plane)
    sxx = _smooth121(gx * gx)
    syy = _smooth121(gy * gy)
    sxy = _smooth121(gx * gy)
    # tensors carry a factor 16 from the unnormalised window; det carries 256
    det = (sxx * syy - sxy * sxy).astype(np.float64)
    tr = (sxx + syy).astype(np.float64)
    return (det - k * tr * tr) / 256.0


def _max_filter(a, radius):
    fill = -np.inf
    p = np.pad(a, radius, mode="constant", constant_values=fill)
    win = 2 * radius + 1
    rows = np.lib.stride_tricks.sliding_window_view(p, win, axis=1).max(axis=-1)
    return np.lib.stride_tricks.sliding_window_view(rows, win, axis=0).max(axis=-1)


def harris_corners(gray: Frame | np.ndarray, k: float = HARRIS_K, threshold: float = HARRIS_THRESHOLD,
                   nms_radius: int = HARRIS_NMS_RADIUS) -> list[Corner]:
    """Harris corners after non-maximum suppression.

    Candidates are local maxima above ``threshold``; they are then accepted
    greedily by descending response (ties by row, then column) while keeping
    every pair of accepted corners more than ``nms_radius`` apart.
    """
    plane = gray.data if isinstance(gray, Frame) else np.asarray(gray)
    if plane.ndim != 2 or plane.shape[0] < 3 or plane.shape[1] < 3:
        raise DegenerateInput("harris_corners needs a single-channel frame of at least 3x3")
    r = harris_response(plane, k)
    cand = (r > threshold) & (r > 0)
    if nms_radius > 0:
        cand &= r >= _max_filter(r, nms_radius)
    ys, xs = np.nonzero(cand)
    if ys.size == 0:
        return []
    resp = r[ys, xs]
    order = np.lexsort((xs, ys, -resp))
    kept: list[Corner] = []
    r2 = nms_radius * nms_radius
    for idx in order:
        x, y = int(xs[idx]), int(ys[idx])
        if any((c.x - x) ** 2 + (c.y - y) ** 2 <= r2 for c in kept):
            continue
        kept.append(Corner(x, y, float(resp[idx])))
    return kept


# ---------------------------------------------------------------------------
# spatial relations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairRelation:
    dx: float
    dy: float
    distance: float
    overlap: bool
    contains: bool


def spatial_relations(boxes: list[BoundingBox], frame_dims: tuple[int, int]) -> dict[tuple[int, int], PairRelation]:
    """Relations for every ordered pair ``(i, j)``, ``i != j``.

    ``dx, dy`` is the centroid of ``j`` minus the centroid of ``i``;
    ``distance`` is that offset's length over the frame diagonal;
    ``contains`` means box ``i`` encloses box ``j``.
    """
    width, height = frame_dims
    for b in boxes:
        if not b.fits(width, height):
            raise DegenerateInput(f"{b} lies outside a {width}x{height} frame")
    diag = float(np.hypot(width, height))
    out = {}
    for i, a in enumerate(boxes):
        ax, ay = a.center
        for j, b in enumerate(boxes):
            if i == j:
                continue
            bx, by = b.center
            dx, dy = bx - ax, by - ay
            out[(i, j)] = PairRelation(
                dx=dx,
                dy=dy,
                distance=float(np.hypot(dx, dy)) / diag,
                overlap=a.intersection_area(b) > 0,
                contains=a.contains(b),
            )
    return out
