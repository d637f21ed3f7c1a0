"""Activation exporter: runs a trained torch model over an image folder
and writes a feature bundle the similarity engine can ingest.

The exporter is a dumper only — it captures raw per-layer activations and
copies segmentation masks; all magnitude math lives in the engine.
"""

from .capture import ActivationCapture, available_layers
from .export import ExportError, LayerSpec, export_bundle, parse_layer_specs

__version__ = "0.1.0"

__all__ = [
    "ActivationCapture",
    "available_layers",
    "ExportError",
    "LayerSpec",
    "export_bundle",
    "parse_layer_specs",
    "__version__",
]
