"""Bundle directory I/O, session containers, cluster CRUD, revisions."""

import json
import zipfile

import numpy as np
import pytest

from latentsim.errors import (
    BundleFormatError,
    ConfigError,
    EmptyBundleError,
    IntegrityError,
    ManifestError,
    NotFoundError,
    VersionError,
)
from latentsim.extraction import LayerDescriptor
from latentsim.store import (
    FeatureBundle,
    Session,
    apply_cluster_op,
    blob_checksum,
    load_bundle,
    load_session,
    replace_weights,
    save_bundle,
    save_session,
)

from conftest import make_matrix_session


def tiny_bundle(objects=1, res=4, channels=2, out_res=8, thumbnails=False):
    rng = np.random.default_rng(70 + objects)
    layer = LayerDescriptor("conv_t", res, channels, "encoder")
    ids = tuple(f"obj_{i:03d}" for i in range(objects))
    maps = {
        oid: {"conv_t": rng.random((res, res, channels)).astype(np.float32)}
        for oid in ids
    }
    masks = {
        oid: (rng.random((out_res, out_res)) > 0.5).astype(np.uint8) for oid in ids
    }
    thumbs = {oid: b"\x89PNG fake" for oid in ids} if thumbnails else {}
    return FeatureBundle(
        object_ids=ids,
        layers=(layer,),
        output_resolution=out_res,
        maps=maps,
        masks=masks,
        thumbnails=thumbs,
    )


def edit_manifest(root, mutate):
    path = root / "manifest.json"
    manifest = json.loads(path.read_text())
    mutate(manifest)
    path.write_text(json.dumps(manifest, indent=2))


class TestBundleRoundTrip:
    def test_single_object(self, tmp_path):
        bundle = tiny_bundle(1)
        save_bundle(bundle, tmp_path / "b")
        loaded = load_bundle(tmp_path / "b")
        assert loaded.object_ids == bundle.object_ids
        assert loaded.output_resolution == 8
        oid = bundle.object_ids[0]
        assert np.array_equal(loaded.maps[oid]["conv_t"], bundle.maps[oid]["conv_t"])
        assert np.array_equal(loaded.masks[oid], bundle.masks[oid])

    def test_twenty_objects_blobs_byte_identical(self, tmp_path):
        bundle = tiny_bundle(20)
        first = save_bundle(bundle, tmp_path / "a")
        loaded = load_bundle(first)
        second = save_bundle(loaded, tmp_path / "b")
        for oid in bundle.object_ids:
            for name in (f"layer_conv_t.f32", "mask.u8"):
                a = (first / "objects" / oid / name).read_bytes()
                b = (second / "objects" / oid / name).read_bytes()
                assert a == b

    def test_thumbnails_preserved(self, tmp_path):
        bundle = tiny_bundle(2, thumbnails=True)
        save_bundle(bundle, tmp_path / "b")
        loaded = load_bundle(tmp_path / "b")
        assert loaded.thumbnails == bundle.thumbnails

    def test_synth_bundle_round_trip(self, synth_bundle, synth_bundle_dir):
        loaded = load_bundle(synth_bundle_dir)
        assert loaded.object_ids == synth_bundle.object_ids
        assert [l.layer_id for l in loaded.layers] == [
            l.layer_id for l in synth_bundle.layers
        ]
        oid = synth_bundle.object_ids[0]
        for lay in synth_bundle.layers:
            assert np.array_equal(
                loaded.maps[oid][lay.layer_id], synth_bundle.maps[oid][lay.layer_id]
            )

    def test_shape_mismatch_on_save(self, tmp_path):
        bundle = tiny_bundle(1)
        oid = bundle.object_ids[0]
        bundle.maps[oid]["conv_t"] = np.zeros((3, 3, 2), dtype=np.float32)
        with pytest.raises(BundleFormatError):
            save_bundle(bundle, tmp_path / "b")


class TestBundleValidation:
    def saved(self, tmp_path, objects=2):
        root = tmp_path / "bundle"
        save_bundle(tiny_bundle(objects), root)
        return root

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ManifestError):
            load_bundle(tmp_path)

    def test_invalid_json(self, tmp_path):
        root = self.saved(tmp_path)
        (root / "manifest.json").write_text("{not json")
        with pytest.raises(ManifestError):
            load_bundle(root)

    def test_non_object_root(self, tmp_path):
        root = self.saved(tmp_path)
        (root / "manifest.json").write_text("[1, 2, 3]")
        with pytest.raises(ManifestError):
            load_bundle(root)

    def test_missing_version(self, tmp_path):
        root = self.saved(tmp_path)
        edit_manifest(root, lambda m: m.pop("format_version"))
        with pytest.raises(ManifestError):
            load_bundle(root)

    def test_wrong_version(self, tmp_path):
        root = self.saved(tmp_path)
        edit_manifest(root, lambda m: m.update(format_version=99))
        with pytest.raises(ManifestError):
            load_bundle(root)

    def test_bad_resolution(self, tmp_path):
        root = self.saved(tmp_path)
        edit_manifest(root, lambda m: m.update(output_resolution=0))
        with pytest.raises(ManifestError):
            load_bundle(root)

    def test_duplicate_layer_ids(self, tmp_path):
        root = self.saved(tmp_path)
        edit_manifest(root, lambda m: m.update(layers=m["layers"] * 2))
        with pytest.raises(ManifestError):
            load_bundle(root)

    def test_no_objects(self, tmp_path):
        root = self.saved(tmp_path)
        edit_manifest(root, lambda m: m.update(objects=[]))
        with pytest.raises(EmptyBundleError):
            load_bundle(root)

    def test_duplicate_object_ids(self, tmp_path):
        root = self.saved(tmp_path)
        edit_manifest(root, lambda m: m.update(objects=m["objects"] + [m["objects"][0]]))
        with pytest.raises(ManifestError):
            load_bundle(root)

    def test_missing_blob_file(self, tmp_path):
        root = self.saved(tmp_path)
        (root / "objects" / "obj_000" / "layer_conv_t.f32").unlink()
        with pytest.raises(BundleFormatError):
            load_bundle(root)

    def test_channel_count_exceeds_blob(self, tmp_path):
        # manifest promises twice the channels actually present in the blob
        root = self.saved(tmp_path)

        def double_channels(m):
            m["layers"][0]["channels"] = 4
            # keep checksums valid so the size check is what fires

        edit_manifest(root, double_channels)
        with pytest.raises(BundleFormatError):
            load_bundle(root)

    def test_checksum_tamper(self, tmp_path):
        root = self.saved(tmp_path)
        blob = root / "objects" / "obj_000" / "layer_conv_t.f32"
        data = bytearray(blob.read_bytes())
        data[0] ^= 0xFF
        blob.write_bytes(bytes(data))
        with pytest.raises(IntegrityError):
            load_bundle(root)

    def test_layer_set_mismatch(self, tmp_path):
        root = self.saved(tmp_path)

        def drop_layer(m):
            m["objects"][0]["layers"] = {}

        edit_manifest(root, drop_layer)
        with pytest.raises(BundleFormatError):
            load_bundle(root)

    def test_mask_size_mismatch(self, tmp_path):
        root = self.saved(tmp_path)
        mask_path = root / "objects" / "obj_000" / "mask.u8"
        data = mask_path.read_bytes()[:-4]
        mask_path.write_bytes(data)

        def fix_checksum(m):
            m["objects"][0]["mask"]["checksum"] = blob_checksum(data)

        edit_manifest(root, fix_checksum)
        with pytest.raises(BundleFormatError):
            load_bundle(root)


class TestSessionRoundTrip:
    def test_planted_session_fields(self, planted_session, tmp_path):
        path = tmp_path / "s.lsim"
        save_session(planted_session, path)
        loaded = load_session(path)
        assert loaded.object_ids == planted_session.object_ids
        assert loaded.mode == planted_session.mode
        assert np.array_equal(loaded.matrix, planted_session.matrix)
        assert np.array_equal(loaded.sigma, planted_session.sigma)
        assert np.array_equal(loaded.vt_first, planted_session.vt_first)
        assert np.array_equal(loaded.retained, planted_session.retained)
        assert loaded.variance_target == planted_session.variance_target
        assert loaded.variance_retained == planted_session.variance_retained
        assert loaded.feature_layers == planted_session.feature_layers
        assert loaded.feature_groups == planted_session.feature_groups

    def test_identical_query_results_after_reload(self, labeled_session, tmp_path):
        from latentsim import engine

        request = engine.QueryRequest(
            kind="trapezoid",
            tau=0.5,
            object_ids=(labeled_session.object_ids[0], labeled_session.object_ids[3]),
            weight_mode="cluster_diff",
        )
        before = engine.run_query(labeled_session, request).ranked
        path = tmp_path / "s.lsim"
        save_session(labeled_session, path)
        after = engine.run_query(load_session(path), request).ranked
        assert before == after

    def test_large_retained_set(self, tmp_path):
        rng = np.random.default_rng(71)
        session = make_matrix_session(rng.random((5, 500)))
        session.retained = np.sort(rng.choice(500, size=453, replace=False))
        path = tmp_path / "s.lsim"
        save_session(session, path)
        loaded = load_session(path)
        assert np.array_equal(loaded.retained, session.retained)
        assert loaded.retained.size == 453

    def test_clusters_and_revisions_persist(self, tmp_path):
        session = make_matrix_session(np.eye(4))
        for i in range(3):
            apply_cluster_op(session, "assign", cluster="c", object_id=f"row_{i}")
        replace_weights(session, np.full(4, 0.25), "cluster_diff")
        apply_cluster_op(session, "assign", cluster="d", object_id="row_3")
        path = tmp_path / "s.lsim"
        save_session(session, path)
        loaded = load_session(path)
        assert loaded.clusters == {"c": ["row_0", "row_1", "row_2"], "d": ["row_3"]}
        assert loaded.cluster_revision == 4
        assert loaded.weight_revision == 3
        assert loaded.weight_provenance == "cluster_diff"
        assert loaded.weights_stale

    def test_many_clusters_persist(self, tmp_path):
        session = make_matrix_session(np.random.default_rng(72).random((30, 3)))
        for c in range(12):
            for i in range(20):
                apply_cluster_op(
                    session, "assign", cluster=f"cluster_{c:02d}",
                    object_id=f"row_{(c + i) % 30}",
                )
        path = tmp_path / "s.lsim"
        save_session(session, path)
        loaded = load_session(path)
        assert loaded.clusters == session.clusters
        assert len(loaded.clusters) == 12
        assert all(len(v) == 20 for v in loaded.clusters.values())


class TestSessionValidation:
    def test_missing_file(self, tmp_path):
        with pytest.raises(NotFoundError):
            load_session(tmp_path / "missing.lsim")

    def test_not_a_zip(self, tmp_path):
        path = tmp_path / "s.lsim"
        path.write_text("this is not a session")
        with pytest.raises(IntegrityError):
            load_session(path)

    def test_corrupt_byte(self, tmp_path):
        path = tmp_path / "s.lsim"
        save_session(make_matrix_session(np.eye(3)), path)
        data = bytearray(path.read_bytes())
        data[len(data) // 2] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(IntegrityError):
            load_session(path)

    def test_missing_member(self, tmp_path):
        path = tmp_path / "s.lsim"
        with zipfile.ZipFile(path, "w") as zf:
            zf.writestr("meta.json", "{}")
        with pytest.raises(IntegrityError):
            load_session(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "s.lsim"
        save_session(make_matrix_session(np.eye(3)), path)
        with zipfile.ZipFile(path) as zf:
            members = {n: zf.read(n) for n in zf.namelist()}
        meta = json.loads(members["meta.json"])
        meta["format_version"] = 999
        members["meta.json"] = json.dumps(meta).encode()
        with zipfile.ZipFile(path, "w") as zf:
            for name, data in members.items():
                zf.writestr(name, data)
        with pytest.raises(VersionError):
            load_session(path)

    def test_checksum_mismatch(self, tmp_path):
        path = tmp_path / "s.lsim"
        save_session(make_matrix_session(np.eye(3)), path)
        with zipfile.ZipFile(path) as zf:
            members = {n: zf.read(n) for n in zf.namelist()}
        meta = json.loads(members["meta.json"])
        meta["mode"] = "full_map"  # edit without refreshing checksums.json
        members["meta.json"] = json.dumps(meta).encode()
        with zipfile.ZipFile(path, "w") as zf:
            for name, data in members.items():
                zf.writestr(name, data)
        with pytest.raises(IntegrityError):
            load_session(path)

    def test_meta_not_json(self, tmp_path):
        path = tmp_path / "s.lsim"
        save_session(make_matrix_session(np.eye(3)), path)
        with zipfile.ZipFile(path) as zf:
            members = {n: zf.read(n) for n in zf.namelist()}
        members["meta.json"] = b"garbage"
        with zipfile.ZipFile(path, "w") as zf:
            for name, data in members.items():
                zf.writestr(name, data)
        with pytest.raises(IntegrityError):
            load_session(path)

    def test_validate_weights_without_retained(self):
        session = make_matrix_session(np.eye(3))
        session.retained = None
        session.weights = np.array([0.5, 0.5])
        with pytest.raises(IntegrityError):
            session.validate()

    def test_validate_weight_size_mismatch(self):
        session = make_matrix_session(np.eye(3))
        session.weights = np.array([0.5, 0.5])
        with pytest.raises(IntegrityError):
            session.validate()

    def test_validate_retained_out_of_range(self):
        session = make_matrix_session(np.eye(3))
        session.retained = np.array([0, 7])
        with pytest.raises(IntegrityError):
            session.validate()

    def test_validate_unknown_cluster_member(self):
        session = make_matrix_session(np.eye(3))
        session.clusters["c"] = ["row_0", "ghost"]
        with pytest.raises(IntegrityError):
            session.validate()

    def test_validate_row_count_mismatch(self):
        session = make_matrix_session(np.eye(3))
        session.object_ids = ("row_0",)
        with pytest.raises(IntegrityError):
            session.validate()

    def test_row_index_unknown(self):
        session = make_matrix_session(np.eye(3))
        with pytest.raises(NotFoundError):
            session.row_index("ghost")


class TestClusterOps:
    def fresh(self):
        return make_matrix_session(np.eye(6))

    def test_add_then_duplicate(self):
        s = self.fresh()
        assert apply_cluster_op(s, "add", cluster="c") is True
        assert s.clusters == {"c": []}
        assert s.cluster_revision == 1
        with pytest.raises(ConfigError):
            apply_cluster_op(s, "add", cluster="c")
        assert s.cluster_revision == 1

    def test_assign_creates_cluster(self):
        s = self.fresh()
        assert apply_cluster_op(s, "assign", cluster="c", object_id="row_0") is True
        assert s.clusters == {"c": ["row_0"]}
        assert s.cluster_revision == 1

    def test_assign_idempotent(self):
        s = self.fresh()
        apply_cluster_op(s, "assign", cluster="c", object_id="row_0")
        assert apply_cluster_op(s, "assign", cluster="c", object_id="row_0") is False
        assert s.cluster_revision == 1
        assert s.clusters == {"c": ["row_0"]}

    def test_assign_unknown_object(self):
        s = self.fresh()
        with pytest.raises(NotFoundError):
            apply_cluster_op(s, "assign", cluster="c", object_id="ghost")
        assert s.cluster_revision == 0
        assert s.clusters == {}

    def test_unassign_keeps_other_members(self):
        s = self.fresh()
        apply_cluster_op(s, "assign", cluster="c", object_id="row_0")
        apply_cluster_op(s, "assign", cluster="c", object_id="row_1")
        assert apply_cluster_op(s, "unassign", cluster="c", object_id="row_0") is True
        assert s.clusters == {"c": ["row_1"]}

    def test_unassign_last_member_removes_cluster(self):
        s = self.fresh()
        apply_cluster_op(s, "assign", cluster="c", object_id="row_0")
        apply_cluster_op(s, "unassign", cluster="c", object_id="row_0")
        assert "c" not in s.clusters

    def test_unassign_keep_empty(self):
        s = self.fresh()
        apply_cluster_op(s, "assign", cluster="c", object_id="row_0")
        apply_cluster_op(s, "unassign", cluster="c", object_id="row_0", keep_empty=True)
        assert s.clusters == {"c": []}

    def test_unassign_not_member(self):
        s = self.fresh()
        apply_cluster_op(s, "assign", cluster="c", object_id="row_0")
        with pytest.raises(NotFoundError):
            apply_cluster_op(s, "unassign", cluster="c", object_id="row_1")

    def test_unassign_unknown_cluster(self):
        s = self.fresh()
        with pytest.raises(NotFoundError):
            apply_cluster_op(s, "unassign", cluster="nope", object_id="row_0")

    def test_rename(self):
        s = self.fresh()
        apply_cluster_op(s, "assign", cluster="old", object_id="row_2")
        assert apply_cluster_op(s, "rename", cluster="old", new_name="new") is True
        assert s.clusters == {"new": ["row_2"]}

    def test_rename_collision(self):
        s = self.fresh()
        apply_cluster_op(s, "add", cluster="a")
        apply_cluster_op(s, "add", cluster="b")
        with pytest.raises(ConfigError):
            apply_cluster_op(s, "rename", cluster="a", new_name="b")

    def test_rename_requires_name(self):
        s = self.fresh()
        apply_cluster_op(s, "add", cluster="a")
        with pytest.raises(ConfigError):
            apply_cluster_op(s, "rename", cluster="a")

    def test_remove_unknown(self):
        s = self.fresh()
        with pytest.raises(NotFoundError):
            apply_cluster_op(s, "remove", cluster="nope")

    def test_unknown_op(self):
        s = self.fresh()
        with pytest.raises(ConfigError):
            apply_cluster_op(s, "merge", cluster="a")

    def test_revision_strictly_increases(self):
        s = self.fresh()
        seen = [s.cluster_revision]
        apply_cluster_op(s, "add", cluster="a")
        seen.append(s.cluster_revision)
        apply_cluster_op(s, "assign", cluster="a", object_id="row_0")
        seen.append(s.cluster_revision)
        apply_cluster_op(s, "rename", cluster="a", new_name="b")
        seen.append(s.cluster_revision)
        apply_cluster_op(s, "unassign", cluster="b", object_id="row_0", keep_empty=True)
        seen.append(s.cluster_revision)
        apply_cluster_op(s, "remove", cluster="b")
        seen.append(s.cluster_revision)
        assert seen == [0, 1, 2, 3, 4, 5]

    def test_cluster_rows_maps_ids(self):
        s = self.fresh()
        apply_cluster_op(s, "assign", cluster="c", object_id="row_3")
        apply_cluster_op(s, "assign", cluster="c", object_id="row_1")
        assert s.cluster_rows() == {"c": (3, 1)}


class TestStaleness:
    def test_cluster_diff_weights_go_stale(self):
        s = make_matrix_session(np.eye(4))
        apply_cluster_op(s, "assign", cluster="c", object_id="row_0")
        replace_weights(s, np.full(4, 0.25), "cluster_diff")
        assert not s.weights_stale
        apply_cluster_op(s, "assign", cluster="c", object_id="row_1")
        assert s.weights_stale
        replace_weights(s, np.full(4, 0.25), "cluster_diff")
        assert not s.weights_stale

    def test_noop_does_not_stale(self):
        s = make_matrix_session(np.eye(4))
        apply_cluster_op(s, "assign", cluster="c", object_id="row_0")
        replace_weights(s, np.full(4, 0.25), "cluster_diff")
        apply_cluster_op(s, "assign", cluster="c", object_id="row_0")  # no-op
        assert not s.weights_stale

    def test_uniform_weights_never_stale(self):
        s = make_matrix_session(np.eye(4))
        replace_weights(s, np.full(4, 0.25), "uniform")
        apply_cluster_op(s, "assign", cluster="c", object_id="row_0")
        assert not s.weights_stale
