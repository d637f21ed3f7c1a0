"""Run a model over an image folder and write a feature bundle."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from latentsim import FeatureBundle, LayerDescriptor, save_bundle

from .capture import ActivationCapture

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")
THUMBNAIL_SIZE = 64


class ExportError(Exception):
    """Anything that prevents writing a valid bundle."""


@dataclass(frozen=True)
class LayerSpec:
    """A capture target: dotted submodule name plus its bundle group tag."""

    name: str
    group: str = "other"


def parse_layer_specs(text: str) -> list[LayerSpec]:
    """Parse ``name[:group]`` items from a comma-separated flag value."""
    specs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, group = item.partition(":")
        if not name:
            raise ExportError(f"bad layer item {item!r}; expected name[:group]")
        specs.append(LayerSpec(name=name, group=group or "other"))
    if not specs:
        raise ExportError("no capture layers given")
    if len({spec.name for spec in specs}) != len(specs):
        raise ExportError(f"duplicate layer names in {text!r}")
    return specs


def _list_images(image_dir: Path) -> list[Path]:
    if not image_dir.is_dir():
        raise ExportError(f"image folder {image_dir} does not exist")
    files = sorted(
        p for p in image_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not files:
        raise ExportError(f"image folder {image_dir} contains no images")
    stems = [p.stem for p in files]
    if len(set(stems)) != len(stems):
        raise ExportError(f"duplicate image stems in {image_dir}")
    return files


def _load_image(path: Path, resize: int | None, grayscale: bool) -> Image.Image:
    image = Image.open(path).convert("L" if grayscale else "RGB")
    if resize is not None:
        image = image.resize((resize, resize), Image.BILINEAR)
    if image.width != image.height:
        raise ExportError(
            f"{path.name}: image is {image.width}x{image.height}; export "
            "requires square inputs (use --resize)"
        )
    return image


def _to_tensor(image: Image.Image, device: str) -> torch.Tensor:
    array = np.asarray(image, dtype=np.float32) / 255.0
    if array.ndim == 2:
        array = array[:, :, None]
    chw = np.ascontiguousarray(array.transpose(2, 0, 1))
    return torch.from_numpy(chw).unsqueeze(0).to(device)


def _load_mask(mask_dir: Path, stem: str, size: int) -> np.ndarray:
    for suffix in IMAGE_SUFFIXES:
        path = mask_dir / f"{stem}{suffix}"
        if path.is_file():
            mask = Image.open(path).convert("L")
            if mask.size != (size, size):
                mask = mask.resize((size, size), Image.NEAREST)
            return np.asarray(mask) > 0
    raise ExportError(f"no mask found for {stem!r} under {mask_dir}")


def _thumbnail_bytes(image: Image.Image) -> bytes:
    thumb = image.convert("RGB").copy()
    thumb.thumbnail((THUMBNAIL_SIZE, THUMBNAIL_SIZE))
    buf = io.BytesIO()
    thumb.save(buf, format="PNG")
    return buf.getvalue()


def _descriptor_from_map(spec: LayerSpec, fmap: np.ndarray) -> LayerDescriptor:
    height, width, channels = fmap.shape
    if height != width:
        raise ExportError(
            f"layer {spec.name!r} produced a {height}x{width} map; the bundle "
            "format requires square feature maps"
        )
    return LayerDescriptor(
        layer_id=spec.name, resolution=height, channels=channels, group=spec.group
    )


def export_bundle(
    model: torch.nn.Module,
    layer_specs: list[LayerSpec],
    image_dir,
    out_dir,
    *,
    mask_dir=None,
    resize: int | None = None,
    grayscale: bool = False,
    thumbnails: bool = True,
    device: str = "cpu",
) -> Path:
    """Capture activations for every image and write a bundle directory.

    Masks are copied verbatim when ``mask_dir`` is given; without it the
    bundle is mask-less and only supports full-map extraction downstream.
    """
    files = _list_images(Path(image_dir))
    model = model.to(device).eval()

    object_ids: list[str] = []
    maps: dict[str, dict[str, np.ndarray]] = {}
    masks: dict[str, np.ndarray] = {}
    thumbs: dict[str, bytes] = {}
    layers: list[LayerDescriptor] = []
    resolution: int | None = None

    with ActivationCapture(model, [spec.name for spec in layer_specs]) as capture:
        with torch.no_grad():
            for path in files:
                image = _load_image(path, resize, grayscale)
                if resolution is None:
                    resolution = image.width
                elif image.width != resolution:
                    raise ExportError(
                        f"{path.name}: image is {image.width}px but earlier "
                        f"images are {resolution}px; sizes must be uniform"
                    )
                model(_to_tensor(image, device))
                captured = capture.take()
                if not layers:
                    layers = [
                        _descriptor_from_map(spec, captured[spec.name])
                        for spec in layer_specs
                    ]
                oid = path.stem
                object_ids.append(oid)
                maps[oid] = captured
                if mask_dir is not None:
                    masks[oid] = _load_mask(Path(mask_dir), oid, resolution)
                if thumbnails:
                    thumbs[oid] = _thumbnail_bytes(image)

    bundle = FeatureBundle(
        object_ids=tuple(object_ids),
        layers=tuple(layers),
        output_resolution=int(resolution),
        maps=maps,
        masks=masks,
        thumbnails=thumbs,
    )
    return save_bundle(bundle, out_dir)
