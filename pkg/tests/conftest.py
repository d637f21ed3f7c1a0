"""Shared fixtures: synthetic bundles and ready-made sessions."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from latentsim import engine, synth
from latentsim.store import Session, apply_cluster_op, save_bundle

ACCEPTANCE_OBJECTS = 60
ACCEPTANCE_SEED = 7


@pytest.fixture(scope="session")
def synth_bundle():
    """The fixed-seed planted-cluster bundle used across test modules."""
    return synth.generate_bundle(ACCEPTANCE_OBJECTS, seed=ACCEPTANCE_SEED)


@pytest.fixture(scope="session")
def synth_bundle_dir(synth_bundle, tmp_path_factory):
    root = tmp_path_factory.mktemp("bundle")
    save_bundle(synth_bundle, root)
    return root


@pytest.fixture()
def planted_session(synth_bundle, synth_bundle_dir):
    """Extracted and pruned session over the planted-cluster bundle."""
    session = engine.ingest(synth_bundle_dir)
    engine.extract(session, bundle=synth_bundle)
    engine.prune(session, 0.99)
    return session


@pytest.fixture()
def labeled_session(planted_session):
    """Planted session with the first two ground-truth clusters labeled."""
    session = planted_session
    n = len(session.object_ids)
    for i, oid in enumerate(session.object_ids):
        label = synth.planted_cluster(i, n)
        if label == 0:
            apply_cluster_op(session, "assign", cluster="left", object_id=oid)
        elif label == 1:
            apply_cluster_op(session, "assign", cluster="right", object_id=oid)
    return session


def make_matrix_session(matrix, prefix: str = "row") -> Session:
    """Session wrapped directly around an in-memory matrix (no bundle)."""
    from latentsim.linalg import svd_decompose

    x = np.asarray(matrix, dtype=np.float64)
    svd = svd_decompose(x)
    session = Session(
        bundle_path="",
        object_ids=tuple(f"{prefix}_{i}" for i in range(x.shape[0])),
        feature_layers=tuple("layer" for _ in range(x.shape[1])),
        feature_channels=tuple(range(x.shape[1])),
        feature_groups=tuple("other" for _ in range(x.shape[1])),
        matrix=x,
        sigma=svd.sigma,
        vt_first=svd.vt[0].copy(),
    )
    session.retained = np.arange(x.shape[1])
    session.variance_target = 1.0
    session.variance_retained = 1.0
    return session
