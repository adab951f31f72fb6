"""Text normalization, tokenization, byte-pair encoding and language detection.

English text is lowercased; Devanagari text is only NFC-normalized. The
tokenizer is a whitespace + punctuation splitter standing in for the heavier
Moses/IndicNLP toolchains: punctuation is detached from word edges while
apostrophes and hyphens between letters stay word-internal.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, EncodingError, SstkitError

DEFAULT_EOW = "</w>"
DEFAULT_NUM_MERGES = 24_000

# \w misses Devanagari combining signs (category Mn), so the word class is
# widened with the Devanagari block explicitly.
_WORD = r"[\wऀ-ॿ]"
_TOKEN_RE = re.compile(rf"{_WORD}+(?:['’-]{_WORD}+)*|[^\w\sऀ-ॿ]")
_WS_RE = re.compile(r"\s+")

_DEVANAGARI = range(0x0900, 0x0980)


class LangId(str, Enum):
    EN = "en"
    HI = "hi"
    MR = "mr"

    @classmethod
    def parse(cls, value: "LangId | str") -> "LangId":
        if isinstance(value, LangId):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(f"unknown language {value!r}; expected one of en, hi, mr") from None


class LanguageUndeterminable(SstkitError):
    """Input has no letters to decide a language from."""


@dataclass(frozen=True)
class NormalizedText:
    text: str
    lang: LangId

    def __str__(self) -> str:
        return self.text


def normalize(text: str | bytes, lang: LangId | str) -> NormalizedText:
    """NFC-normalize, lowercase (English only) and collapse whitespace.

    Idempotent: normalizing an already-normalized string is a no-op.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"input is not valid UTF-8: {exc}") from exc
    lang = LangId.parse(lang)
    out = unicodedata.normalize("NFC", text)
    if lang is LangId.EN:
        # Re-apply NFC: lowercasing can decompose characters (e.g. İ).
        out = unicodedata.normalize("NFC", out.lower())
    out = _WS_RE.sub(" ", out).strip()
    return NormalizedText(out, lang)


def tokenize(text: NormalizedText | str) -> list[str]:
    """Split into word and punctuation tokens.

    Punctuation is detached from word edges; apostrophes/hyphens between word
    characters stay inside the token ("don't" is one token). Joining the
    tokens with single spaces reproduces the input up to spacing around
    punctuation; no token is empty.
    """
    raw = text.text if isinstance(text, NormalizedText) else text
    return _TOKEN_RE.findall(raw)


def detokenize(tokens: Sequence[str]) -> str:
    """Join tokens with single spaces (punctuation keeps its own token)."""
    return " ".join(tokens)


# ---------------------------------------------------------------------------
# Byte-pair encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BpeModel:
    """Ordered merge list learned from a corpus.

    The end-of-word marker is carried as a separate trailing symbol during
    learning and merging, then fused into the final subword by bpe_apply, so
    the merges are fully reversible.
    """

    merges: tuple[tuple[str, str], ...]
    eow_marker: str = DEFAULT_EOW
    num_merges: int = DEFAULT_NUM_MERGES

    def __post_init__(self):
        if len(self.merges) > self.num_merges:
            raise ConfigError("merge list longer than requested merge budget")
        if len(set(self.merges)) != len(self.merges):
            raise ConfigError("duplicate merge pair in model")


def _merge_word(symbols: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    out: list[str] = []
    i = 0
    n = len(symbols)
    while i < n:
        if i < n - 1 and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            out.append(symbols[i] + symbols[i + 1])
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def bpe_learn(
    corpus: Mapping[str, int] | Iterable[str],
    num_merges: int,
    eow_marker: str = DEFAULT_EOW,
) -> BpeModel:
    """Learn merges by greedy most-frequent-pair selection.

    Ties are broken lexicographically on the pair so learning is
    deterministic and the first k merges are a prefix of the first k+1.
    Stops early once no adjacent pair occurs at least twice.
    """
    if num_merges < 0:
        raise ConfigError("num_merges must be >= 0")
    counts: Mapping[str, int] = corpus if isinstance(corpus, Mapping) else Counter(corpus)
    if not counts:
        raise ConfigError("cannot learn BPE from an empty corpus")

    words: dict[tuple[str, ...], int] = {}
    for token, count in counts.items():
        symbols = tuple(token) + (eow_marker,)
        words[symbols] = words.get(symbols, 0) + count

    merges: list[tuple[str, str]] = []
    for _ in range(num_merges):
        pair_counts: Counter[tuple[str, str]] = Counter()
        for symbols, count in words.items():
            for a, b in zip(symbols, symbols[1:]):
                pair_counts[(a, b)] += count
        if not pair_counts:
            break
        best_count = max(pair_counts.values())
        if best_count < 2:
            break
        best = min(p for p, c in pair_counts.items() if c == best_count)
        merges.append(best)
        words = {_merge_word(symbols, best): count for symbols, count in words.items()}
    return BpeModel(tuple(merges), eow_marker, num_merges)


def bpe_apply(model: BpeModel, token: str) -> list[str]:
    """Split a token into subwords by replaying the learned merges in order.

    The end-of-word marker ends up appended to the last subword; joining the
    subwords and stripping the marker reproduces the token exactly.
    """
    if token == "":
        return []
    symbols: tuple[str, ...] = tuple(token) + (model.eow_marker,)
    for pair in model.merges:
        symbols = _merge_word(symbols, pair)
    if symbols[-1] == model.eow_marker:
        if len(symbols) == 1:
            return [model.eow_marker]
        symbols = symbols[:-2] + (symbols[-2] + symbols[-1],)
    return list(symbols)


def bpe_join(subwords: Sequence[str], eow_marker: str = DEFAULT_EOW) -> str:
    """Invert bpe_apply for a single token."""
    joined = "".join(subwords)
    if joined.endswith(eow_marker):
        joined = joined[: -len(eow_marker)]
    return joined


def save_bpe(model: BpeModel, path: str | Path) -> None:
    """Write `bpe v1 <eow>` header then one tab-separated merge per line."""
    lines = [f"bpe v1 {model.eow_marker}"]
    lines.extend(f"{a}\t{b}" for a, b in model.merges)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_bpe(path: str | Path) -> BpeModel:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith("bpe v1 "):
        raise ConfigError(f"{path}: not a bpe v1 model file")
    eow = lines[0][len("bpe v1 "):]
    if not eow:
        raise ConfigError(f"{path}: missing end-of-word marker in header")
    merges = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ConfigError(f"{path}:{lineno}: expected left<TAB>right")
        merges.append((parts[0], parts[1]))
    return BpeModel(tuple(merges), eow, num_merges=max(len(merges), 1))


# ---------------------------------------------------------------------------
# Language detection
# ---------------------------------------------------------------------------


def _load_marker_words() -> frozenset[str]:
    data = resources.files("sstkit.data") / "lexicons" / "mr" / "markers_langid.txt"
    words = []
    for line in data.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(unicodedata.normalize("NFC", line))
    return frozenset(words)


_MARKER_CACHE: frozenset[str] | None = None


def marathi_marker_words() -> frozenset[str]:
    global _MARKER_CACHE
    if _MARKER_CACHE is None:
        _MARKER_CACHE = _load_marker_words()
    return _MARKER_CACHE


def detect_language(text: str, marker_words: frozenset[str] | None = None) -> LangId:
    """Classify text as en, hi or mr by script, then by Marathi marker words.

    Latin-majority input is English. Devanagari-majority input is Marathi if
    any marker word from the shipped list occurs, Hindi otherwise. Input with
    no letters at all cannot be classified.
    """
    latin = 0
    devanagari = 0
    saw_letter = False
    for ch in text:
        if ord(ch) in _DEVANAGARI:
            devanagari += 1
            saw_letter = True
        elif ch.isalpha():
            saw_letter = True
            if ch.isascii() or unicodedata.name(ch, "").startswith("LATIN"):
                latin += 1
    if not saw_letter:
        raise LanguageUndeterminable("no letters in input; cannot determine language")
    if devanagari <= latin:
        return LangId.EN
    markers = marker_words if marker_words is not None else marathi_marker_words()
    tokens = tokenize(unicodedata.normalize("NFC", text))
    hits = sum(1 for t in tokens if t in markers)
    return LangId.MR if hits >= 1 else LangId.HI
