"""HTTP service: speech and text translation endpoints over the replica pool.

Endpoints (JSON, UTF-8):
  POST /api/v1/ssmt          {audio_b64, src, tgt, pivot?} ->
                             {transcript, fluent_text, translation, audio_b64,
                              timings_ms: {asr, dc, mt, tts, total}}
  POST /api/v1/ttmt          {text, src?, tgt} ->
                             {translation, detected_src?, timing_ms}
  POST /api/v1/filter/score  {src: [...], tgt: [...]} -> {scores: [...]}
  GET  /api/v1/health        {"status": "ok", "replicas": {total, busy}}
  GET  /api/v1/stats         latency statistics

Speech and text requests both occupy a pool replica (single-occupancy);
corpus scoring runs outside the pool since it is embarrassingly parallel.
Every speech response carries all stage outputs so a frontend can display
the transcript, the corrected text, the translation and the audio.
"""

from __future__ import annotations

import base64
import binascii
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import corpusfilter, textprep
from .audio import read_wav_bytes, wav_bytes
from .codec import CodecParams
from .errors import (
    AudioFormatError,
    ConfigError,
    SstkitError,
    StageError,
    StartupError,
    UnavailableError,
)
from .pipeline import Lexicon, Pipeline, PipelineConfig, translate
from .serving import ReplicaPool, build_pool
from .textprep import LangId, LanguageUndeterminable


@dataclass
class StageResources:
    """Shared, lazily-built stage assets: codec params, lexicon tables."""

    codec: CodecParams = field(default_factory=CodecParams)
    mt_lexicons: Mapping[str, Any] = field(default_factory=dict)
    dc_lexicon_dir: str | Path | None = None

    def __post_init__(self):
        self._pipelines: dict[tuple, Pipeline] = {}
        self._loaded_lexicons: dict[str, Lexicon] = {}
        self._lock = threading.Lock()

    def pipeline(self, src: LangId, tgt: LangId, pivot: LangId | None) -> Pipeline:
        key = (src, tgt, pivot)
        with self._lock:
            if key not in self._pipelines:
                self._pipelines[key] = Pipeline(
                    PipelineConfig(
                        src_lang=src,
                        tgt_lang=tgt,
                        pivot=pivot,
                        mt_lexicons=self.mt_lexicons,
                        dc_lexicon_dir=self.dc_lexicon_dir,
                        codec=self.codec,
                    )
                )
            return self._pipelines[key]

    def lexicon(self, src: LangId, tgt: LangId) -> Lexicon:
        key = f"{src.value}-{tgt.value}"
        with self._lock:
            if key not in self._loaded_lexicons:
                entry = self.mt_lexicons.get(key)
                if entry is None:
                    self._loaded_lexicons[key] = Lexicon.identity()
                elif isinstance(entry, Lexicon):
                    self._loaded_lexicons[key] = entry
                else:
                    self._loaded_lexicons[key] = Lexicon.load_tsv(entry)
            return self._loaded_lexicons[key]


class PipelineRunner:
    """Replica work function: routes speech and text tasks to the stages."""

    def __init__(self, resources: StageResources):
        self.resources = resources

    def run(self, payload: Mapping[str, Any]) -> dict:
        kind = payload.get("kind")
        if kind == "ssmt":
            pipe = self.resources.pipeline(
                payload["src"], payload["tgt"], payload.get("pivot")
            )
            return {"trace": pipe.run(payload["utterance"])}
        if kind == "ttmt":
            src, tgt = payload["src"], payload["tgt"]
            lexicon = self.resources.lexicon(src, tgt)
            t0 = time.perf_counter()
            translation = translate(payload["text"], src, tgt, lexicon)
            return {
                "translation": translation,
                "timing_ms": 1000.0 * (time.perf_counter() - t0),
            }
        raise ConfigError(f"unknown task kind {kind!r}")


# ---------------------------------------------------------------------------
# Request schemas
# ---------------------------------------------------------------------------


class SsmtRequest(BaseModel):
    audio_b64: str
    src: str
    tgt: str
    pivot: str | None = None


class TtmtRequest(BaseModel):
    text: str
    src: str | None = None
    tgt: str


class FilterScoreRequest(BaseModel):
    src: list[str]
    tgt: list[str]


def _parse_lang(value: str, name: str) -> LangId:
    try:
        return LangId.parse(value)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail={"error": str(exc), "field": name})


def _run_in_pool(pool: ReplicaPool, payload: dict, timeout: float) -> dict:
    try:
        return pool.run_sync(payload, timeout=timeout)
    except UnavailableError as exc:
        raise HTTPException(status_code=503, detail={"error": str(exc)})
    except TimeoutError as exc:
        raise HTTPException(status_code=504, detail={"error": str(exc)})
    except StageError as exc:
        raise HTTPException(status_code=422, detail={"error": str(exc), "stage": exc.stage})
    except SstkitError as exc:
        raise HTTPException(status_code=422, detail={"error": str(exc)})


def create_app(
    pool: ReplicaPool,
    embedder: corpusfilter.EmbedderBackend | None = None,
    request_timeout_s: float = 300.0,
) -> FastAPI:
    app = FastAPI(title="sstkit", version="0.1.0")
    backend = embedder or corpusfilter.DeterministicEmbedder()

    @app.get("/api/v1/health")
    def health() -> dict:
        return {
            "status": "ok",
            "replicas": {"total": pool.total_replicas, "busy": pool.busy_count},
        }

    @app.get("/api/v1/stats")
    def stats() -> dict:
        return pool.stats().to_dict()

    @app.post("/api/v1/ssmt")
    def ssmt(req: SsmtRequest) -> dict:
        src = _parse_lang(req.src, "src")
        tgt = _parse_lang(req.tgt, "tgt")
        pivot = _parse_lang(req.pivot, "pivot") if req.pivot else None
        if src == tgt:
            raise HTTPException(
                status_code=422, detail={"error": "src and tgt must differ"}
            )
        try:
            raw = base64.b64decode(req.audio_b64, validate=True)
        except (binascii.Error, ValueError):
            raise HTTPException(
                status_code=400, detail={"error": "audio_b64 is not valid base64"}
            )
        try:
            utterance = read_wav_bytes(raw)
        except AudioFormatError as exc:
            raise HTTPException(status_code=400, detail={"error": str(exc)})
        result = _run_in_pool(
            pool,
            {"kind": "ssmt", "utterance": utterance, "src": src, "tgt": tgt, "pivot": pivot},
            request_timeout_s,
        )
        trace = result["trace"]
        timings = {k: trace.timings_ms[k] for k in ("asr", "dc", "mt", "tts")}
        timings["total"] = trace.total_ms
        return {
            "transcript": trace.transcript,
            "fluent_text": trace.fluent_text,
            "translation": trace.translation,
            "audio_b64": base64.b64encode(wav_bytes(trace.audio)).decode("ascii"),
            "timings_ms": timings,
        }

    @app.post("/api/v1/ttmt")
    def ttmt(req: TtmtRequest) -> dict:
        tgt = _parse_lang(req.tgt, "tgt")
        detected = None
        if req.src is None:
            try:
                detected = textprep.detect_language(req.text)
            except LanguageUndeterminable as exc:
                raise HTTPException(status_code=422, detail={"error": str(exc)})
            src = detected
        else:
            src = _parse_lang(req.src, "src")
        if src == tgt:
            raise HTTPException(
                status_code=422, detail={"error": "src and tgt must differ"}
            )
        result = _run_in_pool(
            pool, {"kind": "ttmt", "text": req.text, "src": src, "tgt": tgt}, request_timeout_s
        )
        out = {"translation": result["translation"], "timing_ms": result["timing_ms"]}
        if detected is not None:
            out["detected_src"] = detected.value
        return out

    @app.post("/api/v1/filter/score")
    def filter_score(req: FilterScoreRequest) -> dict:
        try:
            pairs = corpusfilter.score_pairs(req.src, req.tgt, backend)
        except SstkitError as exc:
            raise HTTPException(status_code=422, detail={"error": str(exc)})
        return {"scores": [round(p.score, 6) for p in pairs]}

    return app


# ---------------------------------------------------------------------------
# Server configuration and entry point
# ---------------------------------------------------------------------------


@dataclass
class ServerConfig:
    devices: int = 1
    replicas_per_device: int = 2
    queue_capacity: int | None = None
    port: int = 8000
    host: str = "127.0.0.1"
    codec: CodecParams = field(default_factory=CodecParams)
    mt_lexicons: dict = field(default_factory=dict)
    dc_lexicon_dir: str | None = None

    @classmethod
    def load(cls, path: str | Path) -> "ServerConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        stage = data.get("stage", {})
        codec_cfg = stage.get("codec", {})
        try:
            codec = CodecParams(**codec_cfg)
        except TypeError as exc:
            raise ConfigError(f"{path}: bad codec parameters ({exc})") from exc
        lexicons = dict(stage.get("lexicons", {}).get("mt", {}))
        base = path.parent
        lexicons = {
            k: (v if Path(v).is_absolute() else str(base / v)) for k, v in lexicons.items()
        }
        return cls(
            devices=int(data.get("devices", 1)),
            replicas_per_device=int(data.get("replicas_per_device", 2)),
            queue_capacity=data.get("queue_capacity"),
            port=int(data.get("port", 8000)),
            host=str(data.get("host", "127.0.0.1")),
            codec=codec,
            mt_lexicons=lexicons,
            dc_lexicon_dir=stage.get("lexicons", {}).get("dc_dir"),
        )


def build_service(config: ServerConfig) -> tuple[ReplicaPool, FastAPI]:
    resources = StageResources(
        codec=config.codec,
        mt_lexicons=config.mt_lexicons,
        dc_lexicon_dir=config.dc_lexicon_dir,
    )
    pool = build_pool(
        config.devices,
        config.replicas_per_device,
        lambda: PipelineRunner(resources),
        config.queue_capacity,
    )
    return pool, create_app(pool)


def serve_http(config: ServerConfig) -> None:
    """Run the service until interrupted; bind failures raise StartupError."""
    import uvicorn

    pool, app = build_service(config)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    except OSError as exc:
        raise StartupError(f"cannot bind {config.host}:{config.port}: {exc}") from exc
    finally:
        pool.shutdown()
