"""Built-in detector: motion regions labelled from static appearance features."""

from __future__ import annotations

from ..features import ColorMoments, TextureDescriptor, TextureStats, frame_moments, glcm_texture
from ..imaging import BoundingBox, Frame, gray_plane
from ..motion import (
    BackgroundModel,
    MotionConfig,
    MovingRegion,
    binarize,
    extract_regions,
    foreground_mask,
    frame_difference,
    update_background,
)
from .rules import DEFAULT_RULES, apply_rules
from .types import Detection

MODES = ("diff", "background")

# texture of a crop too small for a co-occurrence matrix
_FLAT_TEXTURE = TextureDescriptor((TextureStats((1, 0), 0.0, 1.0, 1.0, 0.0),))


def merge_regions(regions: list[MovingRegion], gap: int) -> list[MovingRegion]:
    """Join regions whose boxes are separated by at most ``gap`` empty pixels.

    This is the "concatenate moving regions" step: a uniformly coloured
    object that moves leaves a hollow difference footprint, often in pieces,
    and the pieces belong to one object. ``gap < 0`` disables merging.
    """
    if gap < 0 or len(regions) < 2:
        return list(regions)
    groups = [[r] for r in regions]
    boxes = [r.box for r in regions]
    merged = True
    while merged:
        merged = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                a, b = boxes[i], boxes[j]
                if (a.x - gap <= b.x2 and b.x - gap <= a.x2
                        and a.y - gap <= b.y2 and b.y - gap <= a.y2):
                    groups[i] += groups.pop(j)
                    boxes[i] = a.union(boxes.pop(j))
                    merged = True
                    break
            if merged:
                break
    out = []
    for group, box in zip(groups, boxes):
        area = sum(r.area for r in group)
        cx = sum(r.centroid[0] * r.area for r in group) / area
        cy = sum(r.centroid[1] * r.area for r in group) / area
        out.append(MovingRegion(box, area, (cx, cy)))
    out.sort(key=lambda r: (-r.area, r.box.y, r.box.x, r.box.h, r.box.w, r.centroid[1], r.centroid[0]))
    return out


def region_features(region: MovingRegion, moments: ColorMoments, texture: TextureDescriptor) -> dict[str, float]:
    mu, sigma, skew = moments.mu, moments.sigma, moments.skew
    if moments.channels == 3:
        gray = (0.299 * mu[0] + 0.587 * mu[1] + 0.114 * mu[2],
                (sigma[0] + sigma[1] + sigma[2]) / 3.0,
                (skew[0] + skew[1] + skew[2]) / 3.0)
        chans = list(zip(mu, sigma, skew))
    else:
        gray = (mu[0], sigma[0], skew[0])
        chans = [gray] * 3
    feats = {"area": float(region.area), "box_area": float(region.box.area),
             "box_w": float(region.box.w), "box_h": float(region.box.h),
             "mu_gray": gray[0], "sigma_gray": gray[1], "s_gray": gray[2],
             "contrast": texture.contrast, "energy": texture.energy,
             "homogeneity": texture.homogeneity, "correlation": texture.correlation}
    for name, (m, s, k) in zip("rgb", chans):
        feats[f"mu_{name}"] = m
        feats[f"sigma_{name}"] = s
        feats[f"s_{name}"] = k
    return feats


def classify_region(region: MovingRegion, moments: ColorMoments, texture: TextureDescriptor,
                    rules=DEFAULT_RULES, area_ref: float = 64.0) -> tuple[str, float]:
    return apply_rules(region_features(region, moments, texture), rules, area_ref)


def describe_region(frame: Frame, box: BoundingBox, levels: int = 8) -> tuple[ColorMoments, TextureDescriptor]:
    """Colour moments and texture over ``box`` in ``frame``."""
    moments = frame_moments(frame, box)
    plane = gray_plane(frame)[box.y:box.y2, box.x:box.x2]
    if plane.shape[0] < 2 or plane.shape[1] < 2:
        return moments, _FLAT_TEXTURE
    return moments, glcm_texture(plane, levels=levels)


class ClassicalBackend:
    """Frame differencing (or background subtraction) + region classification.

    Keeps the previous gray frame / background model between calls, so one
    instance serves exactly one stream. The first frame only primes the state.
    """

    name = "classical"

    def __init__(self, motion: MotionConfig = MotionConfig(), mode: str = "diff", rules=DEFAULT_RULES,
                 area_ref: float = 64.0, merge_gap: int = 2, texture_levels: int = 8):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if area_ref <= 0:
            raise ValueError("area_ref must be positive")
        self.motion = motion
        self.mode = mode
        self.rules = tuple(rules)
        self.area_ref = area_ref
        self.merge_gap = merge_gap
        self.texture_levels = texture_levels
        self.reset()

    def reset(self):
        self._prev: Frame | None = None
        self._model = BackgroundModel(alpha=self.motion.bg_alpha)

    def regions(self, frame: Frame) -> list[MovingRegion]:
        """Advance the motion state by one frame and return its moving regions."""
        gray = Frame(gray_plane(frame), timestamp=frame.timestamp, seq=frame.seq)
        if self.mode == "diff":
            prev, self._prev = self._prev, gray
            if prev is None:
                return []
            mask = binarize(frame_difference(gray, prev), self.motion.threshold)
        else:
            if not self._model.initialized:
                self._model = update_background(self._model, gray)
                return []
            mask = foreground_mask(self._model, gray, self.motion.bg_threshold)
            self._model = update_background(self._model, gray)
        return merge_regions(extract_regions(mask, self.motion), self.merge_gap)

    def detect(self, frame: Frame) -> list[Detection]:
        out = []
        for region in self.regions(frame):
            moments, texture = describe_region(frame, region.box, self.texture_levels)
            label, conf = classify_region(region, moments, texture, self.rules, self.area_ref)
            out.append(Detection(region.box, label, conf, self.name))
        return out
