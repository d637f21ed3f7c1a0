"""Synthetic feature bundles with planted cluster structure.

Each object is an elliptical blob; a fixed subset of channels carries a
per-cluster amplitude signature (high inside the blob for the object's own
cluster, low otherwise) while the remaining channels carry per-object
nuisance amplitudes.  The full pipeline is therefore testable without any
trained network: same-cluster objects agree on every signature channel and
differ from other clusters on two signature triples.

Layer layout: an encoder layer at the mask resolution and a decoder layer
at half resolution, 8 channels each.  Signature channels live at global
feature ids 0..8 (clusters 0, 1, 2 own three apiece), nuisance at 9..15,
which also plants an encoder/decoder asymmetry for the change report.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .errors import ConfigError
from .extraction import LayerDescriptor
from .store import FeatureBundle

OUTPUT_RESOLUTION = 32
LAYERS = (
    LayerDescriptor("conv_a", OUTPUT_RESOLUTION, 8, group="encoder"),
    LayerDescriptor("conv_b", OUTPUT_RESOLUTION // 2, 8, group="decoder"),
)
CLUSTERS = 3
SIGNATURES_PER_CLUSTER = 3

SIGNATURE_HIGH = 1.0
SIGNATURE_LOW = 0.05
SIGNATURE_JITTER = 0.03
NUISANCE_LOW = 0.2
NUISANCE_HIGH = 0.8
PIXEL_NOISE = 0.02


def planted_cluster(index: int, objects: int, clusters: int = CLUSTERS) -> int:
    """Ground-truth cluster of object ``index`` (contiguous blocks)."""
    if not 0 <= index < objects:
        raise ConfigError(f"object index {index} outside range 0..{objects - 1}")
    return (index * clusters) // objects


def _signature_amplitudes(cluster: int, rng: np.random.Generator) -> np.ndarray:
    """Amplitude of each signature channel for one object."""
    amps = np.full(CLUSTERS * SIGNATURES_PER_CLUSTER, SIGNATURE_LOW)
    lo = cluster * SIGNATURES_PER_CLUSTER
    amps[lo : lo + SIGNATURES_PER_CLUSTER] = SIGNATURE_HIGH
    return amps + rng.normal(0.0, SIGNATURE_JITTER, size=amps.size)


def _ellipse(resolution: int, cy: float, cx: float, ry: float, rx: float) -> np.ndarray:
    rows, cols = np.mgrid[0:resolution, 0:resolution]
    return (
        ((rows - cy) / ry) ** 2 + ((cols - cx) / rx) ** 2
    ) <= 1.0


def _thumbnail_png(mask: np.ndarray, amplitudes: np.ndarray) -> bytes:
    """Grayscale preview: blob brightness follows the strongest signature."""
    level = int(np.clip(amplitudes.max(), 0.0, 1.0) * 200) + 55
    img = np.where(mask, level, 16).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(img, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def generate_bundle(
    objects: int, seed: int, thumbnails: bool = True
) -> FeatureBundle:
    """Deterministic synthetic bundle of ``objects`` blobs, 3 planted clusters."""
    if objects < CLUSTERS:
        raise ConfigError(
            f"need at least {CLUSTERS} objects for {CLUSTERS} clusters, got {objects}"
        )
    rng = np.random.default_rng(seed)
    total_channels = sum(lay.channels for lay in LAYERS)
    n_signature = CLUSTERS * SIGNATURES_PER_CLUSTER
    res = OUTPUT_RESOLUTION

    object_ids = []
    maps: dict[str, dict[str, np.ndarray]] = {}
    masks: dict[str, np.ndarray] = {}
    thumbs: dict[str, bytes] = {}
    for i in range(objects):
        oid = f"obj_{i:03d}"
        object_ids.append(oid)
        cluster = planted_cluster(i, objects)

        cy = rng.uniform(res * 0.3, res * 0.7)
        cx = rng.uniform(res * 0.3, res * 0.7)
        ry = rng.uniform(res * 0.12, res * 0.27)
        rx = rng.uniform(res * 0.12, res * 0.27)

        amplitudes = np.empty(total_channels)
        amplitudes[:n_signature] = _signature_amplitudes(cluster, rng)
        amplitudes[n_signature:] = rng.uniform(
            NUISANCE_LOW, NUISANCE_HIGH, size=total_channels - n_signature
        )

        per_layer: dict[str, np.ndarray] = {}
        offset = 0
        for lay in LAYERS:
            scale = lay.resolution / res
            blob = _ellipse(
                lay.resolution, cy * scale, cx * scale, ry * scale, rx * scale
            )
            amps = amplitudes[offset : offset + lay.channels]
            fmap = blob[:, :, None] * amps[None, None, :]
            fmap = fmap + rng.normal(
                0.0, PIXEL_NOISE, size=(lay.resolution, lay.resolution, lay.channels)
            )
            per_layer[lay.layer_id] = fmap.astype(np.float32)
            offset += lay.channels
        maps[oid] = per_layer
        masks[oid] = _ellipse(res, cy, cx, ry, rx).astype(np.uint8)
        if thumbnails:
            thumbs[oid] = _thumbnail_png(masks[oid].astype(bool), amplitudes[:n_signature])

    return FeatureBundle(
        object_ids=tuple(object_ids),
        layers=LAYERS,
        output_resolution=res,
        maps=maps,
        masks=masks,
        thumbnails=thumbs,
    )
