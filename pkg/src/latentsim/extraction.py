"""Backproject segment regions through layer resolutions and reduce each
feature-map window to a scalar activation magnitude.

A segment region is a bounding box centered on a centroid plus a binary
mask inside the box.  Backprojection scales the centroid and box by the
resolution ratio, rounds box sides up (so small objects never vanish at
coarse resolutions), and resamples the mask with nearest neighbor.  The
window is purely geometric; padding/stride drift of the source network is
not modeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundsError,
    BundleFormatError,
    EmptyBundleError,
    EmptyRegionError,
    ConfigError,
)
from .linalg import masked_mean

MODES = ("masked", "full_map")


@dataclass(frozen=True)
class LayerDescriptor:
    """One selected layer: id, square spatial resolution, channel count,
    and a coarse group tag (encoder/bottleneck/decoder/other)."""

    layer_id: str
    resolution: int
    channels: int
    group: str = "other"


@dataclass(frozen=True, eq=False)
class SegmentRegion:
    """Box of ``height`` x ``width`` pixels centered at ``centroid``
    (row, col), carrying a non-empty binary mask inside the box."""

    centroid: tuple[float, float]
    height: int
    width: int
    mask: np.ndarray

    def top_left(self, resolution: int) -> tuple[int, int]:
        """Integer anchor of the box, clamped inside a square grid."""
        r0 = _round_half_up(self.centroid[0] - (self.height - 1) / 2.0)
        c0 = _round_half_up(self.centroid[1] - (self.width - 1) / 2.0)
        r0 = min(max(r0, 0), resolution - self.height)
        c0 = min(max(c0, 0), resolution - self.width)
        return r0, c0


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def region_from_mask(mask) -> SegmentRegion:
    """Bounding-box region of the positive pixels of a full-frame mask.

    The centroid is the center of the bounding box, which keeps the
    box/centroid pair self-consistent under scaling.
    """
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise BoundsError(f"mask must be 2-D, got ndim={m.ndim}")
    rows = np.any(m, axis=1).nonzero()[0]
    cols = np.any(m, axis=0).nonzero()[0]
    if rows.size == 0:
        raise EmptyRegionError("segmentation mask has no positive pixels")
    r0, r1 = int(rows[0]), int(rows[-1])
    c0, c1 = int(cols[0]), int(cols[-1])
    h = r1 - r0 + 1
    w = c1 - c0 + 1
    centroid = (r0 + (h - 1) / 2.0, c0 + (w - 1) / 2.0)
    return SegmentRegion(centroid=centroid, height=h, width=w, mask=m[r0 : r1 + 1, c0 : c1 + 1].copy())


def _resample_nearest(mask: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    h, w = mask.shape
    if (new_h, new_w) == (h, w):
        return mask
    rows = np.minimum((((np.arange(new_h) + 0.5) * h) / new_h).astype(int), h - 1)
    cols = np.minimum((((np.arange(new_w) + 0.5) * w) / new_w).astype(int), w - 1)
    return mask[np.ix_(rows, cols)]


def backproject_region(region: SegmentRegion, src_res: int, dst_res: int) -> SegmentRegion:
    """Scale a region from ``src_res`` to ``dst_res`` (resolution ratio rule).

    Centroid coordinates and box sides scale by ``dst_res / src_res``; box
    sides round up and are clamped to at least one pixel.  The mask is
    resampled with nearest neighbor.
    """
    if src_res <= 0 or dst_res <= 0:
        raise ConfigError("resolutions must be positive")
    if src_res == dst_res:
        return region
    scale = dst_res / src_res
    cr = region.centroid[0] * scale
    cc = region.centroid[1] * scale
    if not (-0.5 <= cr <= dst_res - 0.5) or not (-0.5 <= cc <= dst_res - 0.5):
        raise BoundsError(
            f"scaled centroid ({cr:.2f},{cc:.2f}) falls outside a {dst_res}px grid"
        )
    nh = max(1, math.ceil(region.height * scale))
    nw = max(1, math.ceil(region.width * scale))
    if nh > dst_res or nw > dst_res:
        raise BoundsError(f"scaled box {nh}x{nw} exceeds destination {dst_res}px")
    return SegmentRegion(
        centroid=(cr, cc),
        height=nh,
        width=nw,
        mask=_resample_nearest(region.mask, nh, nw),
    )


def feature_layout(layers: list[LayerDescriptor]) -> list[tuple[str, int]]:
    """Column order of the activation matrix: (layer id, channel index),
    layers in the given order, channels ascending within each layer."""
    return [(lay.layer_id, ch) for lay in layers for ch in range(lay.channels)]


def extract_object_vector(
    maps: dict[str, np.ndarray],
    region: SegmentRegion | None,
    layers: list[LayerDescriptor],
    mode: str = "masked",
    output_resolution: int | None = None,
    box_mean: bool = False,
) -> np.ndarray:
    """Activation magnitudes of one object over all channels of ``layers``.

    In ``masked`` mode each channel value is the mean over the mask-positive
    pixels of the backprojected region (or over the whole box when
    ``box_mean`` is set).  In ``full_map`` mode the mean is taken over the
    entire feature map and the region is ignored.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown extraction mode {mode!r}; expected one of {MODES}")
    if mode == "masked":
        if region is None:
            raise ConfigError("masked extraction requires a segment region")
        if output_resolution is None:
            raise ConfigError("masked extraction requires the output resolution")
    parts = []
    for lay in layers:
        fmap = maps.get(lay.layer_id)
        if fmap is None:
            raise BundleFormatError(f"feature map for layer {lay.layer_id!r} is missing")
        fmap = np.asarray(fmap, dtype=np.float64)
        if fmap.shape != (lay.resolution, lay.resolution, lay.channels):
            raise BundleFormatError(
                f"layer {lay.layer_id!r} blob has shape {fmap.shape}, expected "
                f"({lay.resolution}, {lay.resolution}, {lay.channels})"
            )
        if mode == "full_map":
            parts.append(fmap.mean(axis=(0, 1)))
            continue
        bp = backproject_region(region, output_resolution, lay.resolution)
        r0, c0 = bp.top_left(lay.resolution)
        mask = np.ones((bp.height, bp.width), dtype=bool) if box_mean else bp.mask
        window = fmap[r0 : r0 + bp.height, c0 : c0 + bp.width, :]
        parts.append(window[mask].mean(axis=0))
    return np.concatenate(parts)


def build_activation_matrix(bundle, mode: str = "masked", box_mean: bool = False) -> np.ndarray:
    """Stack per-object magnitude vectors into the s-by-N activation matrix.

    Row order follows the bundle manifest object order.  ``bundle`` must
    expose ``object_ids``, ``layers``, ``output_resolution``, ``maps`` and
    ``masks`` (see the store module).
    """
    if mode not in MODES:
        raise ConfigError(f"unknown extraction mode {mode!r}; expected one of {MODES}")
    if not bundle.object_ids:
        raise EmptyBundleError("bundle declares no objects")
    if mode == "masked" and not bundle.masks:
        raise BundleFormatError(
            "bundle has no segmentation masks; use full_map extraction"
        )
    rows = []
    width = None
    for oid in bundle.object_ids:
        region = None
        if mode == "masked":
            mask = bundle.masks.get(oid)
            if mask is None:
                raise BundleFormatError(f"object {oid!r} has no segmentation mask")
            region = region_from_mask(mask)
        vec = extract_object_vector(
            bundle.maps[oid],
            region,
            bundle.layers,
            mode=mode,
            output_resolution=bundle.output_resolution,
            box_mean=box_mean,
        )
        if width is None:
            width = vec.size
        elif vec.size != width:
            raise BundleFormatError(
                f"object {oid!r} yields {vec.size} features, expected {width}"
            )
        rows.append(vec)
    return np.vstack(rows)
