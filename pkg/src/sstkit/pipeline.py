"""The four-stage cascade: recognition -> disfluency correction ->
translation -> synthesis.

Recognition and synthesis use the reversible tone codec (codec module), the
correction stage reuses the disfluency rule engine unchanged, and the
translation stage is a token-wise lexicon substituter with out-of-vocabulary
passthrough. A stage failure aborts the cascade and names the failing stage,
since any single component's error propagates downstream. Pivot translation
chains two lexicon hops and records per-hop timings so the doubled decoding
cost of naive cascading shows up in traces.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import disfluency, textprep
from .audio import Utterance
from .codec import CodecParams, ToneCodec, detect_pauses  # re-exported stage ops
from .errors import ConfigError, SstkitError, StageError
from .textprep import LangId

__all__ = [
    "Lexicon",
    "PipelineConfig",
    "PhonemeDurations",
    "StageTrace",
    "Pipeline",
    "run_pipeline",
    "translate",
    "pivot_translate",
    "PivotResult",
    "length_regulate",
    "tts_synthesize",
    "asr_decode",
    "detect_pauses",
]

STAGES = ("asr", "dc", "mt", "tts")


class Lexicon:
    """Token substitution table loaded from a src<TAB>tgt TSV file."""

    def __init__(self, mapping: Mapping[str, str] | None = None):
        self.mapping = dict(mapping or {})

    @classmethod
    def load_tsv(cls, path: str | Path) -> "Lexicon":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"lexicon file not found: {path}")
        mapping = {}
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ConfigError(f"{path}:{lineno}: expected src<TAB>tgt")
            mapping[parts[0]] = parts[1]
        return cls(mapping)

    @classmethod
    def identity(cls) -> "Lexicon":
        return cls({})

    def __len__(self) -> int:
        return len(self.mapping)


def translate(text: str, src: LangId | str, tgt: LangId | str, lexicon: Lexicon) -> str:
    """Token-wise substitution; unknown tokens pass through unchanged."""
    src = LangId.parse(src)
    tgt = LangId.parse(tgt)
    if src == tgt:
        raise ConfigError("source and target language must differ")
    return " ".join(lexicon.mapping.get(tok, tok) for tok in text.split())


@dataclass(frozen=True)
class PivotResult:
    text: str
    hop_ms: tuple[float, float]

    @property
    def total_ms(self) -> float:
        return self.hop_ms[0] + self.hop_ms[1]


def pivot_translate(
    text: str,
    src: LangId | str,
    pivot: LangId | str,
    tgt: LangId | str,
    src_pivot_lexicon: Lexicon,
    pivot_tgt_lexicon: Lexicon,
) -> PivotResult:
    """Two chained hops through a pivot language, timing each hop."""
    src, pivot, tgt = LangId.parse(src), LangId.parse(pivot), LangId.parse(tgt)
    if len({src, pivot, tgt}) != 3:
        raise ConfigError("src, pivot and tgt languages must be pairwise distinct")
    t0 = time.perf_counter()
    try:
        mid = translate(text, src, pivot, src_pivot_lexicon)
    except SstkitError as exc:
        raise StageError("mt:src->pivot", str(exc)) from exc
    t1 = time.perf_counter()
    try:
        out = translate(mid, pivot, tgt, pivot_tgt_lexicon)
    except SstkitError as exc:
        raise StageError("mt:pivot->tgt", str(exc)) from exc
    t2 = time.perf_counter()
    return PivotResult(out, (1000.0 * (t1 - t0), 1000.0 * (t2 - t1)))


# ---------------------------------------------------------------------------
# Length regulation (duration-based frame expansion for synthesis)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhonemeDurations:
    phonemes: tuple[str, ...]
    durations: tuple[int, ...]

    def __post_init__(self):
        if len(self.phonemes) != len(self.durations):
            raise ConfigError(
                f"{len(self.phonemes)} phonemes vs {len(self.durations)} durations"
            )
        if any(d < 0 for d in self.durations):
            raise ConfigError("durations must be non-negative frame counts")


def length_regulate(pd: PhonemeDurations, embeddings: np.ndarray) -> np.ndarray:
    """Repeat each phoneme embedding by its duration; zero durations vanish.

    Output row count is exactly the duration sum.
    """
    embeddings = np.asarray(embeddings)
    if embeddings.ndim != 2:
        raise ConfigError(f"embeddings must be 2-D (phoneme, dim), got {embeddings.ndim}-D")
    if embeddings.shape[0] != len(pd.phonemes):
        raise ConfigError(
            f"{embeddings.shape[0]} embeddings vs {len(pd.phonemes)} phonemes"
        )
    return np.repeat(embeddings, np.asarray(pd.durations, dtype=np.int64), axis=0)


# ---------------------------------------------------------------------------
# Cascade
# ---------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    """Everything one replica needs to run the cascade for one direction.

    mt_lexicons maps "src-tgt" direction keys to TSV paths (or preloaded
    Lexicon objects); directions without an entry translate by passthrough.
    """

    src_lang: LangId
    tgt_lang: LangId
    pivot: LangId | None = None
    mt_lexicons: Mapping[str, "str | Path | Lexicon"] = field(default_factory=dict)
    dc_lexicon_dir: str | Path | None = None
    codec: CodecParams = field(default_factory=CodecParams)

    def __post_init__(self):
        self.src_lang = LangId.parse(self.src_lang)
        self.tgt_lang = LangId.parse(self.tgt_lang)
        if self.pivot is not None:
            self.pivot = LangId.parse(self.pivot)
        if self.src_lang == self.tgt_lang:
            raise ConfigError("source and target language must differ")
        if self.pivot is not None and self.pivot in (self.src_lang, self.tgt_lang):
            raise ConfigError("pivot must differ from both source and target")


@dataclass
class StageTrace:
    """All four stage outputs plus per-stage wall-clock timings (ms)."""

    transcript: str
    fluent_text: str
    translation: str
    audio: Utterance
    timings_ms: dict[str, float]
    src_lang: LangId
    tgt_lang: LangId
    mt_hop_ms: tuple[float, float] | None = None

    @property
    def total_ms(self) -> float:
        return sum(self.timings_ms[s] for s in STAGES)

    def to_dict(self) -> dict:
        out = {
            "transcript": self.transcript,
            "fluent_text": self.fluent_text,
            "translation": self.translation,
            "src_lang": self.src_lang.value,
            "tgt_lang": self.tgt_lang.value,
            "timings_ms": {s: self.timings_ms[s] for s in STAGES},
        }
        if self.mt_hop_ms is not None:
            out["mt_hop_ms"] = list(self.mt_hop_ms)
        return out


def _resolve_lexicon(entry) -> Lexicon:
    if isinstance(entry, Lexicon):
        return entry
    return Lexicon.load_tsv(entry)


class Pipeline:
    """A single-occupancy cascade instance; stage code itself is reentrant."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.codec = ToneCodec(config.codec)
        self.dc_lexicons = disfluency.load_lexicons(
            config.src_lang.value, base_dir=config.dc_lexicon_dir
        )
        table = config.mt_lexicons
        if config.pivot is None:
            self.mt_direct = self._lexicon_for(table, config.src_lang, config.tgt_lang)
            self.mt_hop1 = self.mt_hop2 = None
        else:
            self.mt_direct = None
            self.mt_hop1 = self._lexicon_for(table, config.src_lang, config.pivot)
            self.mt_hop2 = self._lexicon_for(table, config.pivot, config.tgt_lang)

    @staticmethod
    def _lexicon_for(table, src: LangId, tgt: LangId) -> Lexicon:
        entry = table.get(f"{src.value}-{tgt.value}")
        if entry is None:
            return Lexicon.identity()
        return _resolve_lexicon(entry)

    def run(self, audio: Utterance) -> StageTrace:
        timings: dict[str, float] = {}
        cfg = self.config

        t0 = time.perf_counter()
        try:
            if len(audio) == 0:
                raise ConfigError("empty audio")
            transcript = self.codec.decode(audio)
            if not transcript:
                raise ConfigError("no speech detected in input audio")
        except SstkitError as exc:
            raise StageError("asr", str(exc)) from exc
        timings["asr"] = 1000.0 * (time.perf_counter() - t0)

        t0 = time.perf_counter()
        try:
            tokens = textprep.tokenize(transcript)
            fluent_tokens, _ = disfluency.correct(tokens, self.dc_lexicons)
            fluent_text = textprep.detokenize(fluent_tokens)
        except SstkitError as exc:
            raise StageError("dc", str(exc)) from exc
        timings["dc"] = 1000.0 * (time.perf_counter() - t0)

        mt_hops: tuple[float, float] | None = None
        t0 = time.perf_counter()
        if cfg.pivot is None:
            try:
                translation = translate(fluent_text, cfg.src_lang, cfg.tgt_lang, self.mt_direct)
            except StageError:
                raise
            except SstkitError as exc:
                raise StageError("mt", str(exc)) from exc
        else:
            result = pivot_translate(
                fluent_text, cfg.src_lang, cfg.pivot, cfg.tgt_lang, self.mt_hop1, self.mt_hop2
            )
            translation = result.text
            mt_hops = result.hop_ms
        timings["mt"] = 1000.0 * (time.perf_counter() - t0)

        t0 = time.perf_counter()
        try:
            out_audio = self.codec.synthesize(translation)
        except SstkitError as exc:
            raise StageError("tts", str(exc)) from exc
        timings["tts"] = 1000.0 * (time.perf_counter() - t0)

        return StageTrace(
            transcript=transcript,
            fluent_text=fluent_text,
            translation=translation,
            audio=out_audio,
            timings_ms=timings,
            src_lang=cfg.src_lang,
            tgt_lang=cfg.tgt_lang,
            mt_hop_ms=mt_hops,
        )


def run_pipeline(config: PipelineConfig, audio: Utterance) -> StageTrace:
    """Build a pipeline for the config and run the cascade once."""
    return Pipeline(config).run(audio)


def tts_synthesize(text: str, codec: ToneCodec | None = None) -> Utterance:
    """Synthesis stage as a standalone operation."""
    return (codec or ToneCodec()).synthesize(text)


def asr_decode(audio: Utterance, codec: ToneCodec | None = None) -> str:
    """Recognition stage as a standalone operation."""
    return (codec or ToneCodec()).decode(audio)
