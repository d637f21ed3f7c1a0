"""Command-line entry point for the activation exporter."""

from __future__ import annotations

import argparse
import sys

import torch

from .export import ExportError, export_bundle, parse_layer_specs


def load_model(path: str, device: str) -> torch.nn.Module:
    """Load a pickled eager module (TorchScript archives have no hooks)."""
    try:
        model = torch.load(path, map_location=device, weights_only=False)
    except Exception as exc:
        raise ExportError(f"cannot load model from {path}: {exc}") from exc
    if isinstance(model, torch.jit.ScriptModule):
        raise ExportError(
            "TorchScript archives do not expose forward hooks; save the "
            "eager module with torch.save(model, path) instead"
        )
    if not isinstance(model, torch.nn.Module):
        raise ExportError(f"{path} does not contain a torch module")
    return model


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentsim-export",
        description=(
            "Run a trained model over an image folder and dump the selected "
            "layer activations (plus optional masks) as a feature bundle."
        ),
    )
    parser.add_argument("--model", required=True, help="TorchScript or pickled module path")
    parser.add_argument(
        "--layers",
        required=True,
        help="comma-separated capture targets, each name[:group] "
        "(e.g. encoder.conv2:encoder,decoder.conv1:decoder)",
    )
    parser.add_argument("--images", required=True, help="folder of square input images")
    parser.add_argument("--out", required=True, help="bundle output directory")
    parser.add_argument("--masks", help="folder of segmentation masks matched by stem")
    parser.add_argument("--resize", type=int, help="resize inputs to this square size")
    parser.add_argument(
        "--grayscale", action="store_true", help="feed single-channel inputs"
    )
    parser.add_argument(
        "--no-thumbnails", action="store_true", help="skip thumbnail blobs"
    )
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        model = load_model(args.model, args.device)
        root = export_bundle(
            model,
            parse_layer_specs(args.layers),
            args.images,
            args.out,
            mask_dir=args.masks,
            resize=args.resize,
            grayscale=args.grayscale,
            thumbnails=not args.no_thumbnails,
            device=args.device,
        )
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote bundle to {root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
