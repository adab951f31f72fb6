"""Parallel-corpus quality scoring, threshold filtering and realignment.

Sentence pairs are scored by the cosine of their sentence embeddings from a
pluggable backend: a deterministic hashed character-trigram embedder for
tests and offline use, or a remote embedding service speaking a small JSON
protocol (POST /embed). Filtering keeps pairs at or above a threshold;
realignment matches source to target sentences either per-source (argmax)
or globally one-to-one (greedy on descending score).
"""

from __future__ import annotations

import logging
import time
import zlib
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
import requests

from .errors import BackendError, ConfigError, ProtocolError, SizeError

logger = logging.getLogger(__name__)

DEFAULT_MAX_CELLS = 10_000_000


@dataclass(frozen=True)
class ScoredPair:
    src: str
    tgt: str
    score: float
    degenerate: bool = False


@dataclass(frozen=True)
class AlignmentResult:
    matches: tuple[tuple[int, int, float], ...]
    mode: str


class EmbedderBackend(Protocol):
    kind: str
    dim: int | None
    batch_size: int

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class DeterministicEmbedder:
    """Hashed character-trigram frequency embedder, L2-normalized.

    The same text always maps to the same vector (crc32 bucket hashing), so
    scoring and alignment are fully reproducible without any model.
    """

    kind = "deterministic-test"

    def __init__(self, dim: int = 256, batch_size: int = 32):
        if dim < 1:
            raise ConfigError("dim must be >= 1")
        self.dim = dim
        self.batch_size = batch_size

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            raise ConfigError("embed requires at least one text")
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            if len(text) >= 3:
                grams = (text[i : i + 3] for i in range(len(text) - 2))
            else:
                grams = (text,)
            for gram in grams:
                out[row, zlib.crc32(gram.encode("utf-8")) % self.dim] += 1.0
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
        return out


class RemoteEmbedder:
    """Client for an external embedding service.

    Wire contract: POST {url}/embed with {"texts": [...]} returns
    {"embeddings": [[...], ...], "dim": N}. Requests go out in batches with
    bounded retries and exponential backoff; failures carry the index of the
    offending batch. The advertised dimension must not change mid-session.
    """

    kind = "remote-service"

    def __init__(
        self,
        url: str,
        batch_size: int = 32,
        max_retries: int = 3,
        backoff_s: float = 0.2,
        timeout_s: float = 10.0,
        session: requests.Session | None = None,
    ):
        self.url = url.rstrip("/")
        self.batch_size = batch_size
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s
        self.dim: int | None = None
        self._session = session or requests.Session()

    def _post_batch(self, batch: Sequence[str], batch_index: int) -> np.ndarray:
        delay = self.backoff_s
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(delay)
                delay *= 2
            try:
                resp = self._session.post(
                    f"{self.url}/embed", json={"texts": list(batch)}, timeout=self.timeout_s
                )
                if resp.status_code >= 500:
                    last_error = BackendError(
                        f"server error {resp.status_code}", batch_index=batch_index
                    )
                    continue
                resp.raise_for_status()
                payload = resp.json()
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
                continue
            if "embeddings" not in payload or "dim" not in payload:
                raise ProtocolError("response missing 'embeddings' or 'dim'")
            dim = int(payload["dim"])
            if self.dim is None:
                self.dim = dim
            elif dim != self.dim:
                raise ProtocolError(
                    f"embedding dim changed mid-session: {self.dim} -> {dim}"
                )
            vectors = np.asarray(payload["embeddings"], dtype=np.float64)
            if vectors.shape != (len(batch), dim):
                raise ProtocolError(
                    f"expected shape {(len(batch), dim)}, got {vectors.shape}"
                )
            if not np.all(np.isfinite(vectors)):
                raise ProtocolError("non-finite values in embeddings")
            return vectors
        raise BackendError(
            f"embed batch {batch_index} failed after {self.max_retries + 1} attempts: {last_error}",
            batch_index=batch_index,
        )

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            raise ConfigError("embed requires at least one text")
        chunks = []
        for batch_index, start in enumerate(range(0, len(texts), self.batch_size)):
            chunks.append(
                self._post_batch(texts[start : start + self.batch_size], batch_index)
            )
        return np.vstack(chunks)


def embed(backend: EmbedderBackend, texts: Sequence[str]) -> np.ndarray:
    """One embedding row per text, order preserved."""
    return backend.embed(texts)


def _cosine_rows(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise cosine; returns (scores, degenerate-mask for zero vectors)."""
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    degenerate = (na == 0) | (nb == 0)
    denom = np.where(degenerate, 1.0, na * nb)
    scores = np.einsum("ij,ij->i", a, b) / denom
    scores = np.where(degenerate, 0.0, np.clip(scores, -1.0, 1.0))
    return scores, degenerate


def score_pairs(
    src: Sequence[str], tgt: Sequence[str], backend: EmbedderBackend
) -> list[ScoredPair]:
    """Cosine quality score per aligned (src, tgt) pair."""
    if len(src) != len(tgt):
        raise ConfigError(f"{len(src)} source vs {len(tgt)} target sentences")
    if not src:
        raise ConfigError("empty corpus")
    src_vecs = backend.embed(src)
    tgt_vecs = backend.embed(tgt)
    scores, degenerate = _cosine_rows(src_vecs, tgt_vecs)
    return [
        ScoredPair(s, t, float(score), bool(deg))
        for s, t, score, deg in zip(src, tgt, scores, degenerate)
    ]


def filter_by_threshold(
    pairs: Sequence[ScoredPair], tau: float
) -> tuple[list[ScoredPair], list[ScoredPair]]:
    """Partition into (kept, dropped) by score >= tau, preserving order."""
    if not -1.0 <= tau <= 1.0:
        raise ConfigError(f"tau must be in [-1, 1], got {tau}")
    kept = [p for p in pairs if p.score >= tau]
    dropped = [p for p in pairs if p.score < tau]
    return kept, dropped


def _score_matrix(
    src: Sequence[str], tgt: Sequence[str], backend: EmbedderBackend, max_cells: int
) -> np.ndarray:
    if not src or not tgt:
        raise ConfigError("both corpora must be nonempty")
    cells = len(src) * len(tgt)
    if cells > max_cells:
        raise SizeError(
            f"{len(src)}x{len(tgt)} = {cells} cells exceeds the cap of {max_cells}; "
            "align in windows over the corpora instead"
        )
    src_vecs = backend.embed(src)
    tgt_vecs = backend.embed(tgt)

    def unit(rows: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        return np.divide(rows, norms, out=np.zeros_like(rows), where=norms > 0)

    return np.clip(unit(src_vecs) @ unit(tgt_vecs).T, -1.0, 1.0)


def realign(
    src: Sequence[str],
    tgt: Sequence[str],
    backend: EmbedderBackend,
    mode: str = "one-to-one",
    max_cells: int = DEFAULT_MAX_CELLS,
) -> AlignmentResult:
    """Match source to target sentences by maximum quality score.

    argmax mode: each source row gets its best target (ties -> smallest
    target index); target indices may repeat. one-to-one mode: greedy
    global matching on descending score (ties -> smallest (i, j)),
    stopping when either side is exhausted, so the matches form an
    injective partial mapping.
    """
    if mode not in ("argmax", "one-to-one"):
        raise ConfigError(f"unknown alignment mode {mode!r}")
    matrix = _score_matrix(src, tgt, backend, max_cells)
    matches: list[tuple[int, int, float]] = []
    if mode == "argmax":
        best = np.argmax(matrix, axis=1)  # first maximum = smallest j
        for i, j in enumerate(best):
            matches.append((i, int(j), float(matrix[i, j])))
    else:
        n, m = matrix.shape
        flat = matrix.ravel()
        ii, jj = np.divmod(np.arange(flat.size), m)
        order = np.lexsort((jj, ii, -flat))
        used_src = np.zeros(n, dtype=bool)
        used_tgt = np.zeros(m, dtype=bool)
        remaining = min(n, m)
        for idx in order:
            i, j = int(ii[idx]), int(jj[idx])
            if used_src[i] or used_tgt[j]:
                continue
            used_src[i] = used_tgt[j] = True
            matches.append((i, j, float(flat[idx])))
            remaining -= 1
            if remaining == 0:
                break
        matches.sort()
    return AlignmentResult(tuple(matches), mode)


def brute_force_best_total(matrix: np.ndarray) -> float:
    """Optimal one-to-one assignment total by permutation enumeration.

    Exponential; intended as a test oracle for tiny corpora (n <= ~6).
    """
    from itertools import permutations

    n, m = matrix.shape
    if n > 8 or m > 8:
        raise SizeError("brute force oracle is for tiny matrices only")
    best = -np.inf
    if n <= m:
        for perm in permutations(range(m), n):
            best = max(best, sum(matrix[i, perm[i]] for i in range(n)))
    else:
        for perm in permutations(range(n), m):
            best = max(best, sum(matrix[perm[j], j] for j in range(m)))
    return float(best)


def format_score(score: float) -> str:
    """Serialize a score with 6 decimal places (round-half-even)."""
    return f"{score:.6f}"
