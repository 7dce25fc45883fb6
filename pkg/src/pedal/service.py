"""HTTP service for the live human-in-the-loop workflow: serve the next
prioritized segment, accept post-edits, report model feedback, queue
statistics, and sanity flags.

Single-session, single-tenant.  Queue/model transitions are serialized
through one lock (the engine's single-writer contract); an accepted
post-edit is journaled before its response is sent.  Served segments
carry a lease; expired leases return the segment to the pending queue.

Payload field names and types are documented in the machine-readable
schema file shipped at pedal/schemas/api_schema.json and served at
GET /schema.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .corpus import ColumnSchema, Corpus, IngestError, JournalWriter, ingest_corpus
from .features import EmbeddingTable
from .learner import LearnerConfig
from .metrics import corpus_quality
from .scheduler import (
    Engine,
    EngineConfig,
    Policy,
    SegmentStateError,
    UnknownSegmentError,
)

SCHEMA_VERSION = 1

SCHEMA_PATH = Path(__file__).parent / "schemas" / "api_schema.json"


@dataclass(frozen=True)
class ServiceConfig:
    """Service configuration: one file, environment overrides for port
    and data paths (PEDAL_HOST, PEDAL_PORT, PEDAL_TOKEN, PEDAL_DATA_DIR)."""

    host: str = "127.0.0.1"
    port: int = 8080
    token: str | None = None
    data_dir: str = "pedal-data"
    corpus_path: str | None = None
    schema: str = "source=0,hypothesis=1,post_edit=2,reference=3,target_lang=4"
    lang_pair: str = "en-de"
    policy: Policy = Policy.ESTIMATOR
    seed: int = 0
    tau_close: float | None = None
    tau_sanity: float = 0.35
    warmup: int = 25
    rescore_interval: int = 1
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    embeddings_path: str | None = None
    lease_seconds: float = 1800.0
    static_dir: str | None = None

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> "ServiceConfig":
        data: dict = {}
        if path is not None:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        if "policy" in data:
            data["policy"] = Policy(data["policy"])
        if "learner" in data:
            data["learner"] = LearnerConfig.from_dict(data["learner"])
        data.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(**data)
        env = os.environ
        if env.get("PEDAL_HOST"):
            cfg = replace(cfg, host=env["PEDAL_HOST"])
        if env.get("PEDAL_PORT"):
            cfg = replace(cfg, port=int(env["PEDAL_PORT"]))
        if env.get("PEDAL_TOKEN"):
            cfg = replace(cfg, token=env["PEDAL_TOKEN"])
        if env.get("PEDAL_DATA_DIR"):
            cfg = replace(cfg, data_dir=env["PEDAL_DATA_DIR"])
        return cfg


class PostEditRequest(BaseModel):
    edited_text: str
    editor_id: str = "default"


class Session:
    """One loaded corpus with its engine, journal, and leases."""

    def __init__(self, corpus: Corpus, config: ServiceConfig):
        data_dir = Path(config.data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        self.journal = JournalWriter(data_dir / "journal.log", fsync=True)
        embeddings = (
            EmbeddingTable.load(config.embeddings_path)
            if config.embeddings_path
            else None
        )
        self.engine = Engine(
            corpus,
            EngineConfig(
                policy=config.policy,
                seed=config.seed,
                tau_close=config.tau_close,
                tau_sanity=config.tau_sanity,
                warmup=config.warmup,
                rescore_interval=config.rescore_interval,
                learner=config.learner,
            ),
            embeddings=embeddings,
            journal=self.journal,
        )
        self.lease_seconds = config.lease_seconds
        self.leases: dict[int, tuple[str, float]] = {}
        self.has_references = all(s.reference is not None for s in corpus)

    def sweep_leases(self) -> None:
        now = time.monotonic()
        for seg_id, (_, expires) in list(self.leases.items()):
            if now >= expires:
                self.engine.release(seg_id)
                del self.leases[seg_id]

    def lease(self, segment_id: int, editor_id: str) -> float:
        expires = time.monotonic() + self.lease_seconds
        self.leases[segment_id] = (editor_id, expires)
        return self.lease_seconds


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="pedal", version=SCHEMA_VERSION.__str__())
    lock = threading.Lock()
    state: dict[str, Session | None] = {"session": None}

    def require_auth(request: Request) -> None:
        if config.token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {config.token}":
            raise HTTPException(status_code=401, detail="missing or bad API token")

    def session_or_409() -> Session:
        session = state["session"]
        if session is None:
            raise HTTPException(status_code=409, detail="no active session")
        return session

    def start_session(corpus: Corpus) -> Session:
        session = Session(corpus, config)
        state["session"] = session
        return session

    if config.corpus_path is not None:
        corpus = ingest_corpus(
            config.corpus_path,
            ColumnSchema.parse(config.schema),
            config.lang_pair,
        )
        start_session(corpus)

    @app.get("/health")
    def health() -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "status": "ok",
            "session_active": state["session"] is not None,
        }

    @app.get("/schema")
    def schema() -> JSONResponse:
        return JSONResponse(json.loads(SCHEMA_PATH.read_text(encoding="utf-8")))

    @app.post("/ingest", dependencies=[Depends(require_auth)])
    def ingest(
        file: UploadFile,
        schema: str | None = None,
        lang_pair: str | None = None,
    ) -> dict:
        with lock:
            if state["session"] is not None:
                raise HTTPException(status_code=409, detail="session already active")
            tmp = tempfile.NamedTemporaryFile(
                "wb", suffix=".tsv", delete=False, dir=config.data_dir
                if Path(config.data_dir).exists()
                else None,
            )
            try:
                tmp.write(file.file.read())
                tmp.close()
                try:
                    corpus = ingest_corpus(
                        tmp.name,
                        ColumnSchema.parse(schema or config.schema),
                        lang_pair or config.lang_pair,
                    )
                except IngestError as exc:
                    raise HTTPException(status_code=422, detail=str(exc)) from None
                start_session(corpus)
            finally:
                os.unlink(tmp.name)
            report = corpus.ingest_report
            return {
                "schema_version": SCHEMA_VERSION,
                "segments": len(corpus),
                "rows_read": report.rows_read if report else len(corpus),
                "skipped_rows": report.skipped_rows if report else 0,
            }

    @app.get("/queue/next", dependencies=[Depends(require_auth)])
    def queue_next(editor_id: str = "default") -> dict:
        with lock:
            session = session_or_409()
            session.sweep_leases()
            task = session.engine.next(editor_id)
            if task is None:
                return {
                    "schema_version": SCHEMA_VERSION,
                    "status": "drained",
                    "task": None,
                }
            lease_s = session.lease(task.segment_id, editor_id)
            return {
                "schema_version": SCHEMA_VERSION,
                "status": "task",
                "task": {
                    "segment_id": task.segment_id,
                    "hypothesis_index": task.hypothesis_index,
                    "source_text": task.source_text,
                    "hypothesis_text": task.hypothesis_text,
                    "predicted_ter": task.predicted_ter,
                    "pending_after": task.pending_after,
                    "lease_seconds": lease_s,
                },
            }

    @app.post("/segments/{segment_id}/postedit", dependencies=[Depends(require_auth)])
    def post_edit(segment_id: int, body: PostEditRequest) -> dict:
        with lock:
            session = session_or_409()
            session.sweep_leases()
            try:
                result = session.engine.complete(
                    segment_id, body.edited_text, body.editor_id
                )
            except UnknownSegmentError:
                raise HTTPException(
                    status_code=404, detail=f"unknown segment {segment_id}"
                ) from None
            except SegmentStateError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
            session.leases.pop(segment_id, None)
            flag = result.sanity_flag
            return {
                "schema_version": SCHEMA_VERSION,
                "segment_id": segment_id,
                "realized_ter": result.realized_ter,
                "blind_prediction": result.blind_prediction,
                "discrepancy": abs(result.blind_prediction - result.realized_ter),
                "sanity_flag": None
                if flag is None
                else {
                    "segment_id": flag.segment_id,
                    "editor_id": flag.editor_id,
                    "blind_prediction": flag.blind_prediction,
                    "realized_ter": flag.realized_ter,
                    "discrepancy": flag.discrepancy,
                    "threshold": flag.threshold,
                },
                "auto_closed": result.auto_closed,
                "queue_size": len(session.engine.pending_ids()),
            }

    @app.get("/stats", dependencies=[Depends(require_auth)])
    def stats() -> dict:
        with lock:
            session = session_or_409()
            session.sweep_leases()
            engine = session.engine
            counts = engine.state_counts()
            total = len(engine.corpus)
            quality = (
                corpus_quality(engine.corpus) if session.has_references else None
            )
            preq = (
                engine.model.prequential_stats().to_dict()
                if engine.model.prequential
                else None
            )
            return {
                "schema_version": SCHEMA_VERSION,
                "counts": counts,
                "total_segments": total,
                "queue_size": len(engine.pending_ids()),
                "pct_post_edited": 100.0 * counts["post_edited"] / total,
                "mean_corpus_quality": quality,
                "prequential": preq,
                "flags_total": len(engine.flags),
                "model_step": engine.model.step,
            }

    @app.get("/model/snapshot", dependencies=[Depends(require_auth)])
    def model_snapshot() -> dict:
        with lock:
            session = session_or_409()
            return session.engine.model.snapshot()

    @app.get("/flags", dependencies=[Depends(require_auth)])
    def flags(editor_id: str | None = None) -> dict:
        with lock:
            session = session_or_409()
            found = [
                {
                    "segment_id": f.segment_id,
                    "editor_id": f.editor_id,
                    "blind_prediction": f.blind_prediction,
                    "realized_ter": f.realized_ter,
                    "discrepancy": f.discrepancy,
                    "threshold": f.threshold,
                }
                for f in session.engine.flags
                if editor_id is None or f.editor_id == editor_id
            ]
            return {"schema_version": SCHEMA_VERSION, "flags": found}

    static_dir = config.static_dir
    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="workbench")

    return app


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted (blocking)."""
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
