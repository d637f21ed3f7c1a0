"""Local HTTP JSON API for the practitioner loop: query, inspect, cluster,
reweight, requery.

Responses are pure functions of (session snapshot, request); scores are
serialized with 9 significant digits so independent clients compare equal.
Cluster edits and weight recomputation serialize through a writer lock and
persist the session when a session path is configured.
"""

from __future__ import annotations

import threading
from typing import Any

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import engine
from .errors import EngineError, InsufficientClustersError, NotFoundError
from .store import (
    FeatureBundle,
    Session,
    apply_cluster_op,
    load_bundle,
    load_session,
    save_session,
)


def wire_score(score: float) -> float:
    return float(f"{score:.9g}")


def _status_for(exc: EngineError) -> int:
    if isinstance(exc, NotFoundError):
        return 404
    if isinstance(exc, InsufficientClustersError):
        return 422
    return 400


class QueryBody(BaseModel):
    kind: str
    tau: float
    ids: list[str]
    weights: str = "uniform"
    explicit: list[float] | None = None
    top_k: int | None = None
    group: str | None = None


class ClusterOpBody(BaseModel):
    op: str
    cluster: str
    object_id: str | None = None
    new_name: str | None = None
    keep_empty: bool = False


class RecomputeBody(BaseModel):
    method: str = "cluster_diff"


class ServiceState:
    """Session plus lazily loaded bundle and a writer lock."""

    def __init__(
        self,
        session: Session | None = None,
        session_path: str | None = None,
        bundle: FeatureBundle | None = None,
    ):
        self.session = session
        self.session_path = session_path
        self._bundle = bundle
        self.lock = threading.Lock()

    def require_session(self) -> Session:
        if self.session is None:
            raise HTTPException(status_code=409, detail="no session loaded")
        return self.session

    def bundle(self) -> FeatureBundle:
        if self._bundle is None:
            session = self.require_session()
            if not session.bundle_path:
                raise HTTPException(
                    status_code=409, detail="session has no bundle reference"
                )
            self._bundle = load_bundle(session.bundle_path)
        return self._bundle

    def persist(self) -> None:
        if self.session_path and self.session is not None:
            save_session(self.session, self.session_path)


def create_app(
    session_path: str | None = None,
    session: Session | None = None,
    bundle: FeatureBundle | None = None,
) -> FastAPI:
    """Build the app; pass a path to load from disk, or inject state."""
    if session is None and session_path is not None:
        session = load_session(session_path)
    state = ServiceState(session=session, session_path=session_path, bundle=bundle)
    app = FastAPI(title="latentsim service")
    app.state.engine_state = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(EngineError)
    def engine_error_handler(request: Request, exc: EngineError) -> JSONResponse:
        return JSONResponse(status_code=_status_for(exc), content={"detail": str(exc)})

    @app.post("/query")
    def query(body: QueryBody) -> dict[str, Any]:
        session = state.require_session()
        request = engine.QueryRequest(
            kind=body.kind,
            tau=body.tau,
            object_ids=tuple(body.ids),
            weight_mode=body.weights,
            explicit=tuple(body.explicit) if body.explicit is not None else None,
            top_k=body.top_k,
            group=body.group,
        )
        outcome = engine.run_query(session, request)
        return {
            "ranked": [
                {
                    "id": oid,
                    "score": wire_score(score),
                    "thumbnail": f"/objects/{oid}/thumbnail",
                }
                for oid, score in outcome.ranked
            ],
            "weight_provenance": outcome.weights.provenance,
            "weights_stale": outcome.stale,
            "warning": outcome.warning,
            "request": {
                "kind": request.kind,
                "tau": request.tau,
                "ids": list(request.object_ids),
                "weights": request.weight_mode,
                "top_k": request.top_k,
                "group": request.group,
            },
        }

    @app.get("/clusters")
    def get_clusters() -> dict[str, Any]:
        session = state.require_session()
        return {
            "clusters": {k: list(v) for k, v in session.clusters.items()},
            "revision": session.cluster_revision,
        }

    @app.post("/clusters")
    def post_clusters(body: ClusterOpBody) -> dict[str, Any]:
        session = state.require_session()
        with state.lock:
            changed = apply_cluster_op(
                session,
                body.op,
                cluster=body.cluster,
                object_id=body.object_id,
                new_name=body.new_name,
                keep_empty=body.keep_empty,
            )
            if changed:
                state.persist()
        return {
            "changed": changed,
            "clusters": {k: list(v) for k, v in session.clusters.items()},
            "revision": session.cluster_revision,
            "weights_stale": session.weights_stale,
        }

    @app.delete("/clusters/{name}")
    def delete_cluster(name: str) -> dict[str, Any]:
        session = state.require_session()
        with state.lock:
            apply_cluster_op(session, "remove", cluster=name)
            state.persist()
        return {
            "clusters": {k: list(v) for k, v in session.clusters.items()},
            "revision": session.cluster_revision,
            "weights_stale": session.weights_stale,
        }

    @app.post("/weights/recompute")
    def recompute(body: RecomputeBody) -> dict[str, Any]:
        session = state.require_session()
        with state.lock:
            vector, warning = engine.recompute_weights(session, body.method)
            state.persist()
        return {
            "weight_provenance": vector.provenance,
            "weight_revision": session.weight_revision,
            "weights_stale": session.weights_stale,
            "warning": warning,
            "weights": [wire_score(w) for w in vector.values],
        }

    @app.get("/objects/{object_id}/thumbnail")
    def thumbnail(object_id: str) -> Response:
        session = state.require_session()
        if object_id not in session.object_ids:
            raise HTTPException(
                status_code=404, detail=f"unknown object id {object_id!r}"
            )
        data = state.bundle().thumbnails.get(object_id)
        if data is None:
            raise HTTPException(
                status_code=404, detail=f"object {object_id!r} has no thumbnail"
            )
        return Response(content=data, media_type="image/png")

    @app.get("/session/status")
    def status() -> dict[str, Any]:
        session = state.require_session()
        return engine.session_status(session)

    return app


def serve(session_path: str, port: int = 8763, host: str = "127.0.0.1") -> None:
    """Blocking uvicorn runner used by the CLI."""
    import uvicorn

    app = create_app(session_path=session_path)
    uvicorn.run(app, host=host, port=port, log_level="warning")
