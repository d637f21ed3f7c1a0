"""On-disk formats: feature bundle directories, session containers, and
cluster bookkeeping with a revision protocol.

Bundle layout (format version 1):

    <root>/manifest.json
    <root>/objects/<id>/layer_<layer_id>.f32   raw little-endian float32,
                                               C-order (row, col, channel)
    <root>/objects/<id>/mask.u8                one byte per pixel at the
                                               output resolution, 0 =
                                               background
    <root>/objects/<id>/thumb.png              optional preview image

The manifest is UTF-8 JSON and is authoritative for every blob shape; each
blob carries a 64-bit blake2b checksum verified on load.  A session is a
single zip container (meta.json + arrays.npz + checksums.json) that
round-trips bit-for-bit: a reloaded session reproduces identical query
results.
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BundleFormatError,
    ConfigError,
    EmptyBundleError,
    IntegrityError,
    ManifestError,
    NotFoundError,
    VersionError,
)
from .extraction import LayerDescriptor
from .similarity import CLUSTER_DIFF

BUNDLE_FORMAT_VERSION = 1
SESSION_FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"


def blob_checksum(data: bytes) -> str:
    return hashlib.blake2b(data, digest_size=8).hexdigest()


@dataclass(frozen=True, eq=False)
class FeatureBundle:
    """A validated in-memory bundle; layer set is identical across objects."""

    object_ids: tuple[str, ...]
    layers: tuple[LayerDescriptor, ...]
    output_resolution: int
    maps: dict[str, dict[str, np.ndarray]]
    masks: dict[str, np.ndarray]
    thumbnails: dict[str, bytes] = field(default_factory=dict)
    root: Path | None = None


def _require(manifest: dict, key: str):
    if key not in manifest:
        raise ManifestError(f"manifest is missing required field {key!r}")
    return manifest[key]


def _read_blob(root: Path, entry: dict, context: str) -> bytes:
    for key in ("path", "checksum"):
        if key not in entry:
            raise ManifestError(f"{context}: blob entry is missing {key!r}")
    path = root / entry["path"]
    if not path.is_file():
        raise BundleFormatError(f"{context}: blob {entry['path']!r} is missing")
    data = path.read_bytes()
    digest = blob_checksum(data)
    if digest != entry["checksum"]:
        raise IntegrityError(
            f"{context}: blob {entry['path']!r} checksum {digest} does not "
            f"match manifest value {entry['checksum']}"
        )
    return data


def load_bundle(path) -> FeatureBundle:
    """Load and eagerly validate a bundle directory."""
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ManifestError(f"no {MANIFEST_NAME} under {root}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(manifest, dict):
        raise ManifestError("manifest root must be a JSON object")
    version = _require(manifest, "format_version")
    if version != BUNDLE_FORMAT_VERSION:
        raise ManifestError(
            f"unsupported bundle format_version {version!r}, "
            f"expected {BUNDLE_FORMAT_VERSION}"
        )
    output_resolution = _require(manifest, "output_resolution")
    if not isinstance(output_resolution, int) or output_resolution < 1:
        raise ManifestError(
            f"output_resolution must be a positive integer, got {output_resolution!r}"
        )
    layer_entries = _require(manifest, "layers")
    if not isinstance(layer_entries, list) or not layer_entries:
        raise ManifestError("manifest must declare a non-empty layer list")
    layers = []
    for entry in layer_entries:
        try:
            layers.append(
                LayerDescriptor(
                    layer_id=str(entry["layer_id"]),
                    resolution=int(entry["resolution"]),
                    channels=int(entry["channels"]),
                    group=str(entry.get("group", "other")),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"bad layer descriptor {entry!r}: {exc}") from exc
    layer_ids = [lay.layer_id for lay in layers]
    if len(set(layer_ids)) != len(layer_ids):
        raise ManifestError(f"duplicate layer ids in manifest: {layer_ids}")

    object_entries = _require(manifest, "objects")
    if not isinstance(object_entries, list):
        raise ManifestError("manifest objects must be a list")
    if not object_entries:
        raise EmptyBundleError("bundle declares no objects")

    object_ids: list[str] = []
    maps: dict[str, dict[str, np.ndarray]] = {}
    masks: dict[str, np.ndarray] = {}
    thumbnails: dict[str, bytes] = {}
    for entry in object_entries:
        if not isinstance(entry, dict) or "id" not in entry:
            raise ManifestError(f"bad object entry {entry!r}")
        oid = str(entry["id"])
        if oid in maps:
            raise ManifestError(f"duplicate object id {oid!r}")
        object_ids.append(oid)

        declared = entry.get("layers")
        if not isinstance(declared, dict) or set(declared) != set(layer_ids):
            raise BundleFormatError(
                f"object {oid!r} declares layers {sorted(declared or ())}, "
                f"manifest requires exactly {sorted(layer_ids)}"
            )
        per_layer: dict[str, np.ndarray] = {}
        for lay in layers:
            data = _read_blob(root, declared[lay.layer_id], f"object {oid!r}")
            expected = lay.resolution * lay.resolution * lay.channels * 4
            if len(data) != expected:
                raise BundleFormatError(
                    f"object {oid!r} layer {lay.layer_id!r}: blob has "
                    f"{len(data)} bytes, manifest shape needs {expected}"
                )
            per_layer[lay.layer_id] = (
                np.frombuffer(data, dtype="<f4")
                .reshape(lay.resolution, lay.resolution, lay.channels)
                .astype(np.float32)
            )
        maps[oid] = per_layer

        if "mask" in entry:
            data = _read_blob(root, entry["mask"], f"object {oid!r}")
            expected = output_resolution * output_resolution
            if len(data) != expected:
                raise BundleFormatError(
                    f"object {oid!r}: mask has {len(data)} bytes, expected "
                    f"{expected} at resolution {output_resolution}"
                )
            masks[oid] = (
                np.frombuffer(data, dtype=np.uint8)
                .reshape(output_resolution, output_resolution)
                .copy()
            )
        if "thumbnail" in entry:
            thumbnails[oid] = _read_blob(root, entry["thumbnail"], f"object {oid!r}")

    return FeatureBundle(
        object_ids=tuple(object_ids),
        layers=tuple(layers),
        output_resolution=output_resolution,
        maps=maps,
        masks=masks,
        thumbnails=thumbnails,
        root=root,
    )


def save_bundle(bundle: FeatureBundle, path) -> Path:
    """Write a bundle directory; blobs round-trip byte-identically."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for oid in bundle.object_ids:
        obj_dir = root / "objects" / oid
        obj_dir.mkdir(parents=True, exist_ok=True)
        entry: dict = {"id": oid, "layers": {}}
        for lay in bundle.layers:
            fmap = np.ascontiguousarray(bundle.maps[oid][lay.layer_id], dtype="<f4")
            if fmap.shape != (lay.resolution, lay.resolution, lay.channels):
                raise BundleFormatError(
                    f"object {oid!r} layer {lay.layer_id!r} has shape "
                    f"{fmap.shape}, descriptor says "
                    f"({lay.resolution}, {lay.resolution}, {lay.channels})"
                )
            rel = f"objects/{oid}/layer_{lay.layer_id}.f32"
            data = fmap.tobytes()
            (root / rel).write_bytes(data)
            entry["layers"][lay.layer_id] = {
                "path": rel,
                "checksum": blob_checksum(data),
            }
        if oid in bundle.masks:
            mask = np.ascontiguousarray(bundle.masks[oid], dtype=np.uint8)
            if mask.shape != (bundle.output_resolution, bundle.output_resolution):
                raise BundleFormatError(
                    f"object {oid!r} mask has shape {mask.shape}, expected "
                    f"({bundle.output_resolution}, {bundle.output_resolution})"
                )
            rel = f"objects/{oid}/mask.u8"
            data = mask.tobytes()
            (root / rel).write_bytes(data)
            entry["mask"] = {"path": rel, "checksum": blob_checksum(data)}
        if oid in bundle.thumbnails:
            rel = f"objects/{oid}/thumb.png"
            data = bundle.thumbnails[oid]
            (root / rel).write_bytes(data)
            entry["thumbnail"] = {"path": rel, "checksum": blob_checksum(data)}
        entries.append(entry)
    manifest = {
        "format_version": BUNDLE_FORMAT_VERSION,
        "output_resolution": bundle.output_resolution,
        "layers": [
            {
                "layer_id": lay.layer_id,
                "resolution": lay.resolution,
                "channels": lay.channels,
                "group": lay.group,
            }
            for lay in bundle.layers
        ],
        "objects": entries,
    }
    (root / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return root


# --- session ----------------------------------------------------------------


@dataclass(eq=False)
class Session:
    """Mutable working state: matrix, decomposition summary, pruning,
    clusters, and the active weight vector.

    Clusters map names to object-id lists.  ``cluster_revision`` increases
    by one per mutation; cluster-derived weights remember the revision they
    were computed from and are stale once the clusters move past it.
    """

    bundle_path: str = ""
    mode: str = "masked"
    box_mean: bool = False
    object_ids: tuple[str, ...] = ()
    feature_layers: tuple[str, ...] = ()
    feature_channels: tuple[int, ...] = ()
    feature_groups: tuple[str, ...] = ()
    matrix: np.ndarray | None = None
    sigma: np.ndarray | None = None
    vt_first: np.ndarray | None = None
    variance_target: float | None = None
    variance_retained: float | None = None
    retained: np.ndarray | None = None
    clusters: dict[str, list[str]] = field(default_factory=dict)
    cluster_revision: int = 0
    weights: np.ndarray | None = None
    weight_provenance: str | None = None
    weight_revision: int = 0

    def validate(self) -> None:
        if self.matrix is not None:
            s, n = self.matrix.shape
            if len(self.object_ids) != s:
                raise IntegrityError(
                    f"matrix has {s} rows but session lists "
                    f"{len(self.object_ids)} objects"
                )
            if self.feature_layers and len(self.feature_layers) != n:
                raise IntegrityError(
                    f"matrix has {n} columns but layer map covers "
                    f"{len(self.feature_layers)}"
                )
        if self.retained is not None:
            if self.matrix is None:
                raise IntegrityError("retained indices present without a matrix")
            if self.retained.size and (
                self.retained.min() < 0 or self.retained.max() >= self.matrix.shape[1]
            ):
                raise IntegrityError("retained indices exceed matrix width")
        if self.weights is not None:
            if self.retained is None:
                raise IntegrityError("weights present without retained features")
            if self.weights.size != self.retained.size:
                raise IntegrityError(
                    f"{self.weights.size} weights for {self.retained.size} "
                    "retained features"
                )
        known = set(self.object_ids)
        for name, members in self.clusters.items():
            for oid in members:
                if oid not in known:
                    raise IntegrityError(
                        f"cluster {name!r} references unknown object {oid!r}"
                    )

    @property
    def weights_stale(self) -> bool:
        return (
            self.weight_provenance == CLUSTER_DIFF
            and self.cluster_revision > self.weight_revision
        )

    def row_index(self, object_id: str) -> int:
        try:
            return self.object_ids.index(object_id)
        except ValueError:
            raise NotFoundError(f"unknown object id {object_id!r}") from None

    def cluster_rows(self) -> dict[str, tuple[int, ...]]:
        return {
            name: tuple(self.row_index(oid) for oid in members)
            for name, members in self.clusters.items()
        }


def _meta_payload(session: Session) -> dict:
    return {
        "format_version": SESSION_FORMAT_VERSION,
        "bundle_path": session.bundle_path,
        "mode": session.mode,
        "box_mean": session.box_mean,
        "object_ids": list(session.object_ids),
        "feature_layers": list(session.feature_layers),
        "feature_channels": list(session.feature_channels),
        "feature_groups": list(session.feature_groups),
        "variance_target": session.variance_target,
        "variance_retained": session.variance_retained,
        "clusters": {k: list(v) for k, v in session.clusters.items()},
        "cluster_revision": session.cluster_revision,
        "weight_provenance": session.weight_provenance,
        "weight_revision": session.weight_revision,
    }


def save_session(session: Session, path) -> Path:
    session.validate()
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    meta_bytes = json.dumps(_meta_payload(session), indent=2).encode("utf-8")
    arrays = {}
    for name in ("matrix", "sigma", "vt_first", "retained", "weights"):
        value = getattr(session, name)
        if value is not None:
            arrays[name] = value
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    array_bytes = buf.getvalue()
    checksums = {
        "meta.json": blob_checksum(meta_bytes),
        "arrays.npz": blob_checksum(array_bytes),
    }
    with zipfile.ZipFile(target, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("meta.json", meta_bytes)
        zf.writestr("arrays.npz", array_bytes)
        zf.writestr("checksums.json", json.dumps(checksums, indent=2))
    return target


def load_session(path) -> Session:
    target = Path(path)
    if not target.is_file():
        raise NotFoundError(f"no session file at {target}")
    try:
        with zipfile.ZipFile(target) as zf:
            names = set(zf.namelist())
            required = {"meta.json", "arrays.npz", "checksums.json"}
            if not required <= names:
                raise IntegrityError(
                    f"session container missing members {sorted(required - names)}"
                )
            meta_bytes = zf.read("meta.json")
            array_bytes = zf.read("arrays.npz")
            checksum_bytes = zf.read("checksums.json")
    except (zipfile.BadZipFile, zlib.error, EOFError) as exc:
        raise IntegrityError(f"session file is not a valid container: {exc}") from exc

    try:
        meta = json.loads(meta_bytes)
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"session metadata is corrupt: {exc}") from exc
    version = meta.get("format_version")
    if version != SESSION_FORMAT_VERSION:
        raise VersionError(
            f"unsupported session format_version {version!r}, "
            f"expected {SESSION_FORMAT_VERSION}"
        )
    try:
        checksums = json.loads(checksum_bytes)
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"session checksums are corrupt: {exc}") from exc
    for name, data in (("meta.json", meta_bytes), ("arrays.npz", array_bytes)):
        digest = blob_checksum(data)
        if checksums.get(name) != digest:
            raise IntegrityError(
                f"session member {name} checksum {digest} does not match "
                f"recorded value {checksums.get(name)}"
            )
    try:
        with np.load(io.BytesIO(array_bytes)) as npz:
            arrays = {name: npz[name] for name in npz.files}
    except (OSError, ValueError) as exc:
        raise IntegrityError(f"session arrays are corrupt: {exc}") from exc

    session = Session(
        bundle_path=meta.get("bundle_path", ""),
        mode=meta.get("mode", "masked"),
        box_mean=bool(meta.get("box_mean", False)),
        object_ids=tuple(meta.get("object_ids", ())),
        feature_layers=tuple(meta.get("feature_layers", ())),
        feature_channels=tuple(int(c) for c in meta.get("feature_channels", ())),
        feature_groups=tuple(meta.get("feature_groups", ())),
        matrix=arrays.get("matrix"),
        sigma=arrays.get("sigma"),
        vt_first=arrays.get("vt_first"),
        variance_target=meta.get("variance_target"),
        variance_retained=meta.get("variance_retained"),
        retained=arrays.get("retained"),
        clusters={k: list(v) for k, v in meta.get("clusters", {}).items()},
        cluster_revision=int(meta.get("cluster_revision", 0)),
        weights=arrays.get("weights"),
        weight_provenance=meta.get("weight_provenance"),
        weight_revision=int(meta.get("weight_revision", 0)),
    )
    session.validate()
    return session


# --- cluster CRUD -----------------------------------------------------------

CLUSTER_OPS = ("add", "remove", "rename", "assign", "unassign")


def apply_cluster_op(
    session: Session,
    op: str,
    cluster: str,
    object_id: str | None = None,
    new_name: str | None = None,
    keep_empty: bool = False,
) -> bool:
    """Apply one cluster mutation; returns True iff state changed.

    Every state change increments ``cluster_revision`` by exactly one, so
    weight vectors computed from older revisions become stale.
    """
    if op not in CLUSTER_OPS:
        raise ConfigError(f"unknown cluster op {op!r}; expected one of {CLUSTER_OPS}")
    clusters = session.clusters
    changed = False
    if op == "add":
        if cluster in clusters:
            raise ConfigError(f"cluster {cluster!r} already exists")
        clusters[cluster] = []
        changed = True
    elif op == "remove":
        if cluster not in clusters:
            raise NotFoundError(f"unknown cluster {cluster!r}")
        del clusters[cluster]
        changed = True
    elif op == "rename":
        if cluster not in clusters:
            raise NotFoundError(f"unknown cluster {cluster!r}")
        if not new_name:
            raise ConfigError("rename requires a new cluster name")
        if new_name in clusters:
            raise ConfigError(f"cluster {new_name!r} already exists")
        clusters[new_name] = clusters.pop(cluster)
        changed = True
    elif op == "assign":
        if object_id is None:
            raise ConfigError("assign requires an object id")
        session.row_index(object_id)
        members = clusters.setdefault(cluster, [])
        if object_id not in members:
            members.append(object_id)
            changed = True
    elif op == "unassign":
        if object_id is None:
            raise ConfigError("unassign requires an object id")
        if cluster not in clusters:
            raise NotFoundError(f"unknown cluster {cluster!r}")
        members = clusters[cluster]
        if object_id not in members:
            raise NotFoundError(
                f"object {object_id!r} is not a member of cluster {cluster!r}"
            )
        members.remove(object_id)
        if not members and not keep_empty:
            del clusters[cluster]
        changed = True
    if changed:
        session.cluster_revision += 1
    return changed


def replace_weights(session: Session, values, provenance: str) -> None:
    """Install a new weight vector tied to the current cluster revision."""
    session.weights = np.asarray(values, dtype=np.float64)
    session.weight_provenance = provenance
    session.weight_revision = session.cluster_revision
    session.validate()


__all__ = [
    "BUNDLE_FORMAT_VERSION",
    "SESSION_FORMAT_VERSION",
    "FeatureBundle",
    "Session",
    "load_bundle",
    "save_bundle",
    "save_session",
    "load_session",
    "apply_cluster_op",
    "replace_weights",
    "blob_checksum",
]
