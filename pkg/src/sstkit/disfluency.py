"""Rule-based disfluency correction and synthetic disfluency injection.

A disfluent stretch has up to three parts: the reparandum (words to drop),
an optional interregnum (editing term, filler, marker or interjection), and
the repair (the speaker's correction, which is kept). Six disfluency types
are handled:

  FilledPause          lexicon match, removed anywhere
  Interjection         lexicon match, removed anywhere; a following comma is
                       absorbed when sentence-initial or comma-delimited
  DiscourseMarker      lexicon match, only sentence-initial or after a comma;
                       a following comma is absorbed
  RepetitionCorrection maximal adjacent repeated n-gram collapsed, keeping
                       the last occurrence (the repair)
  FalseStart           abandoned clause before a comma followed by a
                       clause-restart word; the prefix is dropped
  Edit                 editing phrase from the lexicon, removed together with
                       the preceding reparandum n-gram whose length matches
                       the repair that follows

Injection is the inverse operation used to synthesize labeled training and
evaluation data: correct(inject(s)) == s holds exactly for the first four
types; FalseStart and Edit injection is best-effort only.
"""

from __future__ import annotations

import random
import unicodedata
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, SstkitError

_MAX_EDIT_REPARANDUM = 4
_NUMBER_WORDS = (
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
)


class DisfluencyType(Enum):
    FILLED_PAUSE = "filled_pause"
    INTERJECTION = "interjection"
    DISCOURSE_MARKER = "discourse_marker"
    REPETITION_CORRECTION = "repetition_correction"
    FALSE_START = "false_start"
    EDIT = "edit"


class LabelMismatch(SstkitError):
    """Predicted and gold sentences disagree on token count."""


class EmptyInput(SstkitError):
    """Operation requires at least one token."""


@dataclass(frozen=True)
class DisfluentSpan:
    """Token index ranges (half-open) for one disfluent stretch."""

    reparandum: tuple[int, int]
    interregnum: tuple[int, int]
    repair: tuple[int, int]
    type: DisfluencyType

    def __post_init__(self):
        for lo, hi in (self.reparandum, self.interregnum, self.repair):
            if lo > hi:
                raise ConfigError("span range reversed")
        if not (self.reparandum[1] <= self.interregnum[0] and self.interregnum[1] <= self.repair[0]):
            raise ConfigError("span parts must be ordered and non-overlapping")

@dataclass
class LabeledSentence:
    """Tokens with an aligned disfluent/fluent flag per token (True = disfluent)."""

    tokens: list[str]
    labels: list[bool]

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise LabelMismatch(
                f"{len(self.tokens)} tokens vs {len(self.labels)} labels"
            )

    def fluent_tokens(self) -> list[str]:
        return [t for t, d in zip(self.tokens, self.labels) if not d]


@dataclass(frozen=True)
class DisfluencyLexicons:
    """Phrase lists driving the rule matchers; each phrase is a token tuple."""

    fillers: tuple[tuple[str, ...], ...]
    interjections: tuple[tuple[str, ...], ...]
    discourse_markers: tuple[tuple[str, ...], ...]
    edit_phrases: tuple[tuple[str, ...], ...]
    restart_words: frozenset[str]


def _read_phrase_file(path) -> tuple[tuple[str, ...], ...]:
    phrases = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = unicodedata.normalize("NFC", line.strip())
        if line and not line.startswith("#"):
            phrases.append(tuple(line.split()))
    # Longest phrases first so multi-token entries win over their prefixes.
    return tuple(sorted(set(phrases), key=lambda p: (-len(p), p)))


def load_lexicons(lang: str = "en", base_dir: str | Path | None = None) -> DisfluencyLexicons:
    """Load the packaged lexicons for a language, or from a custom directory.

    A directory must contain fillers.txt, interjections.txt,
    discourse_markers.txt, edit_phrases.txt and restarts.txt (UTF-8, one
    entry per line, `#` comments).
    """
    if base_dir is not None:
        root = Path(base_dir)
        if not root.is_dir():
            raise ConfigError(f"lexicon directory not found: {root}")
        get = lambda name: root / name  # noqa: E731
    else:
        pkg = resources.files("sstkit.data") / "lexicons" / lang
        try:
            pkg.iterdir()
        except (FileNotFoundError, NotADirectoryError):
            raise ConfigError(f"no packaged lexicons for language {lang!r}") from None
        get = lambda name: pkg / name  # noqa: E731
    try:
        return DisfluencyLexicons(
            fillers=_read_phrase_file(get("fillers.txt")),
            interjections=_read_phrase_file(get("interjections.txt")),
            discourse_markers=_read_phrase_file(get("discourse_markers.txt")),
            edit_phrases=_read_phrase_file(get("edit_phrases.txt")),
            restart_words=frozenset(
                w for p in _read_phrase_file(get("restarts.txt")) for w in p
            ),
        )
    except FileNotFoundError as exc:
        raise ConfigError(f"missing lexicon file: {exc}") from exc


# ---------------------------------------------------------------------------
# Correction
# ---------------------------------------------------------------------------


def _match_phrase(
    tokens: Sequence[str], surv: Sequence[int], pos: int, phrases: Sequence[tuple[str, ...]]
) -> tuple[str, ...] | None:
    for phrase in phrases:
        if pos + len(phrase) > len(surv):
            continue
        if all(tokens[surv[pos + k]] == phrase[k] for k in range(len(phrase))):
            return phrase
    return None


def _surviving(alive: Sequence[bool]) -> list[int]:
    return [i for i, a in enumerate(alive) if a]


def _edit_pass(tokens, alive, lexicons, spans):
    surv = _surviving(alive)
    pos = 0
    while pos < len(surv):
        phrase = _match_phrase(tokens, surv, pos, lexicons.edit_phrases)
        if phrase is None:
            pos += 1
            continue
        e, f = pos, pos + len(phrase)
        matched_n = 0
        for n in range(min(_MAX_EDIT_REPARANDUM, e, len(surv) - f), 0, -1):
            before = [tokens[surv[e - n + k]] for k in range(n)]
            after = [tokens[surv[f + k]] for k in range(n)]
            if any(a == b for a, b in zip(before, after)):
                matched_n = n
                break
        start = e - matched_n
        for p in range(start, f):
            alive[surv[p]] = False
        spans.append(
            DisfluentSpan(
                reparandum=(surv[start], surv[e - 1] + 1) if matched_n else (surv[e], surv[e]),
                interregnum=(surv[e], surv[f - 1] + 1),
                repair=(surv[f], surv[f + matched_n - 1] + 1) if matched_n else (surv[f], surv[f]) if f < len(surv) else (len(tokens), len(tokens)),
                type=DisfluencyType.EDIT,
            )
        )
        pos = f
    return


def _false_start_pass(tokens, alive, lexicons, spans):
    surv = _surviving(alive)
    for pos in range(1, len(surv) - 1):
        if tokens[surv[pos]] == "," and tokens[surv[pos + 1]] in lexicons.restart_words:
            for p in range(0, pos + 1):
                alive[surv[p]] = False
            spans.append(
                DisfluentSpan(
                    reparandum=(surv[0], surv[pos] + 1),
                    interregnum=(surv[pos] + 1, surv[pos] + 1),
                    repair=(surv[pos + 1], len(tokens)),
                    type=DisfluencyType.FALSE_START,
                )
            )
            return


def _lexicon_pass(tokens, alive, lexicons, spans):
    changed = True
    while changed:
        changed = False
        surv = _surviving(alive)
        for pos in range(len(surv)):
            kind = None
            phrase = _match_phrase(tokens, surv, pos, lexicons.fillers)
            if phrase is not None:
                kind = DisfluencyType.FILLED_PAUSE
                absorb_comma = False
            if kind is None:
                phrase = _match_phrase(tokens, surv, pos, lexicons.interjections)
                if phrase is not None:
                    kind = DisfluencyType.INTERJECTION
                    absorb_comma = pos == 0 or (
                        pos > 0 and tokens[surv[pos - 1]] == ","
                    )
            if kind is None:
                phrase = _match_phrase(tokens, surv, pos, lexicons.discourse_markers)
                if phrase is not None and (pos == 0 or tokens[surv[pos - 1]] == ","):
                    kind = DisfluencyType.DISCOURSE_MARKER
                    absorb_comma = True
            if kind is None:
                continue
            end = pos + len(phrase)
            if absorb_comma and end < len(surv) and tokens[surv[end]] == ",":
                end += 1
            for p in range(pos, end):
                alive[surv[p]] = False
            spans.append(
                DisfluentSpan(
                    reparandum=(surv[pos], surv[pos]),
                    interregnum=(surv[pos], surv[end - 1] + 1),
                    repair=(surv[end - 1] + 1, surv[end - 1] + 1),
                    type=kind,
                )
            )
            changed = True
            break


def _repetition_pass(tokens, alive, spans):
    while True:
        surv = _surviving(alive)
        m = len(surv)
        found = False
        for n in range(m // 2, 0, -1):
            for i in range(0, m - 2 * n + 1):
                if all(tokens[surv[i + k]] == tokens[surv[i + n + k]] for k in range(n)):
                    for p in range(i, i + n):
                        alive[surv[p]] = False
                    spans.append(
                        DisfluentSpan(
                            reparandum=(surv[i], surv[i + n - 1] + 1),
                            interregnum=(surv[i + n - 1] + 1, surv[i + n - 1] + 1),
                            repair=(surv[i + n], surv[i + 2 * n - 1] + 1),
                            type=DisfluencyType.REPETITION_CORRECTION,
                        )
                    )
                    found = True
                    break
            if found:
                break
        if not found:
            return


def find_disfluencies(
    tokens: Sequence[str], lexicons: DisfluencyLexicons
) -> tuple[list[DisfluentSpan], list[bool]]:
    """Locate disfluent spans; returns (spans, removed-flag per token).

    Passes run in surface-structure order: editing phrases first, then
    fillers/interjections/markers, then false starts on what survives (so a
    removed sentence-initial marker's comma cannot masquerade as an abandoned
    clause), then repetition collapse.
    """
    alive = [True] * len(tokens)
    spans: list[DisfluentSpan] = []
    _edit_pass(tokens, alive, lexicons, spans)
    _lexicon_pass(tokens, alive, lexicons, spans)
    _false_start_pass(tokens, alive, lexicons, spans)
    _repetition_pass(tokens, alive, spans)
    removed = [not a for a in alive]
    return spans, removed


def correct(
    tokens: Sequence[str], lexicons: DisfluencyLexicons | None = None
) -> tuple[list[str], LabeledSentence]:
    """Remove disfluencies; returns (fluent tokens, labels on the input).

    Surviving tokens keep their input order (the output is a subsequence of
    the input); an already-fluent sentence comes back unchanged.
    """
    if lexicons is None:
        lexicons = load_lexicons("en")
    tokens = list(tokens)
    _, removed = find_disfluencies(tokens, lexicons)
    labeled = LabeledSentence(tokens, removed)
    return labeled.fluent_tokens(), labeled


# ---------------------------------------------------------------------------
# Injection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InjectionConfig:
    """Per-type injection probabilities; each type fires at most once."""

    p_filled_pause: float = 0.0
    p_interjection: float = 0.0
    p_discourse_marker: float = 0.0
    p_repetition: float = 0.0
    p_false_start: float = 0.0
    p_edit: float = 0.0
    max_repeat_ngram: int = 3

    def __post_init__(self):
        for name in (
            "p_filled_pause", "p_interjection", "p_discourse_marker",
            "p_repetition", "p_false_start", "p_edit",
        ):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {p}")

    @classmethod
    def from_dict(cls, data: dict) -> "InjectionConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown injection config keys: {sorted(unknown)}")
        return cls(**data)


def inject(
    tokens: Sequence[str],
    config: InjectionConfig,
    seed: int,
    lexicons: DisfluencyLexicons | None = None,
) -> LabeledSentence:
    """Insert synthetic disfluencies into a fluent sentence.

    All randomness comes from the seed, so the output is bit-reproducible.
    Inserted tokens are labeled disfluent, originals stay fluent. Types are
    applied in a fixed order (repetition, filled pause, edit, false start,
    discourse marker, interjection) so that sentence-initial insertions end
    up outermost.
    """
    if not tokens:
        raise EmptyInput("cannot inject disfluencies into an empty sentence")
    if lexicons is None:
        lexicons = load_lexicons("en")
    rng = random.Random(seed)
    work = list(tokens)
    labels = [False] * len(work)

    def insert(at: int, new_tokens: Sequence[str]):
        work[at:at] = list(new_tokens)
        labels[at:at] = [True] * len(new_tokens)

    if rng.random() < config.p_repetition:
        n = rng.randint(1, max(1, min(config.max_repeat_ngram, len(work))))
        i = rng.randint(0, len(work) - n)
        insert(i, work[i : i + n])

    if rng.random() < config.p_filled_pause and lexicons.fillers:
        filler = rng.choice(lexicons.fillers)
        insert(rng.randint(0, len(work)), filler)

    if rng.random() < config.p_edit and lexicons.edit_phrases and len(tokens) >= 2:
        n = rng.randint(2, min(3, len(work)))
        j = rng.randint(0, len(work) - n)
        repair = work[j : j + n]
        corrupted = list(repair)
        c = rng.randrange(n)
        if corrupted[c] in _NUMBER_WORDS:
            corrupted[c] = rng.choice([w for w in _NUMBER_WORDS if w != corrupted[c]])
        else:
            corrupted[c] = rng.choice([w for w in work if w != corrupted[c]] or ["something"])
        insert(j, corrupted + list(rng.choice(lexicons.edit_phrases)))

    if rng.random() < config.p_false_start:
        k = min(3, max(1, len(tokens) - 1))
        insert(0, list(tokens[:k]) + [","])

    if rng.random() < config.p_discourse_marker and lexicons.discourse_markers:
        insert(0, list(rng.choice(lexicons.discourse_markers)) + [","])

    if rng.random() < config.p_interjection and lexicons.interjections:
        insert(0, list(rng.choice(lexicons.interjections)) + [","])

    return LabeledSentence(work, labels)


# ---------------------------------------------------------------------------
# Label evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PRF1:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    no_positives: bool = False

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "PRF1":
        if tp == 0 and fp == 0 and fn == 0:
            return cls(0.0, 0.0, 0.0, 0, 0, 0, no_positives=True)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if tp else 0.0
        return cls(precision, recall, f1, tp, fp, fn)


def evaluate_labels(pred: LabeledSentence, gold: LabeledSentence) -> PRF1:
    """Precision/recall/F1 over the disfluent class for one sentence pair."""
    if len(pred.tokens) != len(gold.tokens):
        raise LabelMismatch(
            f"pred has {len(pred.tokens)} tokens, gold has {len(gold.tokens)}"
        )
    tp = fp = fn = 0
    for p, g in zip(pred.labels, gold.labels):
        if p and g:
            tp += 1
        elif p and not g:
            fp += 1
        elif g and not p:
            fn += 1
    return PRF1.from_counts(tp, fp, fn)


def evaluate_corpus(
    pairs: Iterable[tuple[LabeledSentence, LabeledSentence]]
) -> PRF1:
    """Micro-averaged PRF1 over (pred, gold) sentence pairs."""
    tp = fp = fn = 0
    for pred, gold in pairs:
        r = evaluate_labels(pred, gold)
        tp, fp, fn = tp + r.tp, fp + r.fp, fn + r.fn
    return PRF1.from_counts(tp, fp, fn)


# ---------------------------------------------------------------------------
# Label TSV I/O: token<TAB>{0|1} per line, blank line between sentences.
# ---------------------------------------------------------------------------


def write_label_tsv(sentences: Iterable[LabeledSentence], path: str | Path) -> None:
    blocks = []
    for sent in sentences:
        blocks.append(
            "\n".join(f"{t}\t{1 if d else 0}" for t, d in zip(sent.tokens, sent.labels))
        )
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")


def read_label_tsv(path: str | Path) -> list[LabeledSentence]:
    sentences = []
    tokens: list[str] = []
    labels: list[bool] = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines + [""], start=1):
        if not line.strip():
            if tokens:
                sentences.append(LabeledSentence(tokens, labels))
                tokens, labels = [], []
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[1] not in ("0", "1"):
            raise ConfigError(f"{path}:{lineno}: expected token<TAB>0|1")
        tokens.append(parts[0])
        labels.append(parts[1] == "1")
    return sentences
