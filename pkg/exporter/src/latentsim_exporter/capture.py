"""Forward-hook capture of named submodule outputs."""

from __future__ import annotations

import numpy as np
import torch


def available_layers(model: torch.nn.Module) -> list[str]:
    """Dotted names of all leaf submodules (the hookable capture targets)."""
    return [
        name
        for name, module in model.named_modules()
        if name and not any(module.children())
    ]


class ActivationCapture:
    """Registers forward hooks on the requested submodules and stores each
    output as a float32 (height, width, channels) array per forward pass.

    Use as a context manager so hooks are always removed:

        with ActivationCapture(model, ["conv1", "conv2"]) as cap:
            model(batch)
            maps = cap.take()   # {"conv1": (H, W, C) array, ...}
    """

    def __init__(self, model: torch.nn.Module, layer_names: list[str]):
        modules = dict(model.named_modules())
        missing = [name for name in layer_names if name not in modules]
        if missing:
            from .export import ExportError

            raise ExportError(
                f"unknown layer(s) {missing}; available: {available_layers(model)}"
            )
        self._targets = {name: modules[name] for name in layer_names}
        self._handles: list[torch.utils.hooks.RemovableHandle] = []
        self._latest: dict[str, np.ndarray] = {}

    def __enter__(self) -> "ActivationCapture":
        for name, module in self._targets.items():
            self._handles.append(
                module.register_forward_hook(self._make_hook(name))
            )
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        for handle in self._handles:
            handle.remove()
        self._handles.clear()

    def _make_hook(self, name: str):
        def hook(_module, _inputs, output):
            from .export import ExportError

            tensor = output.detach()
            if tensor.ndim == 4:  # (batch, channels, h, w) — single-image batch
                if tensor.shape[0] != 1:
                    raise ExportError(
                        f"layer {name!r} produced a batch of {tensor.shape[0]}; "
                        "export runs one image at a time"
                    )
                tensor = tensor[0]
            if tensor.ndim != 3:
                raise ExportError(
                    f"layer {name!r} output has shape {tuple(tensor.shape)}; "
                    "expected (channels, height, width)"
                )
            # channel-first torch layout -> channel-last bundle layout
            self._latest[name] = (
                tensor.permute(1, 2, 0).contiguous().cpu().numpy().astype(np.float32)
            )

        return hook

    def take(self) -> dict[str, np.ndarray]:
        """Return the maps captured by the most recent forward pass."""
        from .export import ExportError

        missing = [name for name in self._targets if name not in self._latest]
        if missing:
            raise ExportError(
                f"layer(s) {missing} were never executed by the forward pass"
            )
        taken, self._latest = self._latest, {}
        return taken
