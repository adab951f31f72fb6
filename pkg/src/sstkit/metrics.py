"""Evaluation metrics: WER, corpus BLEU, MOS and KPI survey aggregation.

WER comes from a unit-cost Levenshtein alignment with a deterministic
backtrace (correct > substitution > deletion > insertion among minimal
alignments). BLEU is corpus-level with clipped n-gram counts and a
13a-style tokenizer; no smoothing by default, so any zero n-gram bucket
zeroes the score. MOS and KPI means use exact rational arithmetic and are
rounded half-up to two decimals only at the reporting boundary.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, SstkitError


class EmptyReference(SstkitError):
    """WER is undefined for an empty reference (N = 0)."""


class CorpusMismatch(SstkitError):
    """Hypothesis and reference corpora differ in length."""


class RatingRange(SstkitError):
    """A rating fell outside the accepted [0, 5] scale."""


# ---------------------------------------------------------------------------
# Word error rate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    hits: int

    @property
    def ref_len(self) -> int:
        return self.substitutions + self.deletions + self.hits

    @property
    def edits(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        return self.edits / self.ref_len

    def __add__(self, other: "WerBreakdown") -> "WerBreakdown":
        return WerBreakdown(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.hits + other.hits,
        )


def wer(ref: Sequence[str], hyp: Sequence[str]) -> WerBreakdown:
    """Minimal-cost word alignment counts against a reference.

    The rate is (S + D + I) / N with N the reference length, so it can
    exceed 1 when the hypothesis inserts freely.
    """
    if not ref:
        raise EmptyReference("reference is empty; WER undefined")
    R, H = len(ref), len(hyp)
    cost = [[0] * (H + 1) for _ in range(R + 1)]
    for i in range(1, R + 1):
        cost[i][0] = i
    for j in range(1, H + 1):
        cost[0][j] = j
    for i in range(1, R + 1):
        ref_i = ref[i - 1]
        row = cost[i]
        prev = cost[i - 1]
        for j in range(1, H + 1):
            diag = prev[j - 1] + (0 if ref_i == hyp[j - 1] else 1)
            row[j] = min(diag, prev[j] + 1, row[j - 1] + 1)

    s = d = ins = c = 0
    i, j = R, H
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and cost[i][j] == cost[i - 1][j - 1]:
            c += 1
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and cost[i][j] == cost[i - 1][j - 1] + 1:
            s += 1
            i, j = i - 1, j - 1
        elif i > 0 and cost[i][j] == cost[i - 1][j] + 1:
            d += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return WerBreakdown(s, d, ins, c)


# ---------------------------------------------------------------------------
# BLEU
# ---------------------------------------------------------------------------

_13A_PAD_SYMBOLS = re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])")
_13A_PERIOD_BEFORE = re.compile(r"([^0-9])([\.,])")
_13A_PERIOD_AFTER = re.compile(r"([\.,])([^0-9])")
_13A_DASH_AFTER_DIGIT = re.compile(r"([0-9])(-)")


def tokenize_13a(sentence: str) -> list[str]:
    """mteval-13a-style tokenization: detach symbols and non-numeric ./,"""
    s = sentence.strip()
    s = _13A_PAD_SYMBOLS.sub(r" \1 ", s)
    s = _13A_PERIOD_BEFORE.sub(r"\1 \2 ", s)
    s = _13A_PERIOD_AFTER.sub(r" \1 \2", s)
    s = _13A_DASH_AFTER_DIGIT.sub(r"\1 \2 ", s)
    return s.split()


@dataclass(frozen=True)
class BleuScore:
    score: float
    ngram_precisions: tuple[float, ...]
    brevity_penalty: float
    hyp_len: int
    ref_len: int


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(
    hyps: Sequence[str],
    refs: Sequence[str],
    max_n: int = 4,
    smooth: str = "none",
) -> BleuScore:
    """Corpus BLEU with one reference per hypothesis.

    Orders whose corpus-wide n-gram denominator is zero are left out of the
    geometric mean (so a corpus of very short sentences can still score).
    With smooth="none" any remaining zero numerator makes the score 0;
    smooth="exp" halves a running weight for each zero bucket instead.
    """
    if len(hyps) != len(refs):
        raise CorpusMismatch(f"{len(hyps)} hypotheses vs {len(refs)} references")
    if not hyps:
        raise CorpusMismatch("empty corpus")
    if smooth not in ("none", "exp"):
        raise ConfigError(f"unknown smoothing {smooth!r}")

    numer = [0] * max_n
    denom = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for hyp_s, ref_s in zip(hyps, refs):
        hyp_t = tokenize_13a(hyp_s)
        ref_t = tokenize_13a(ref_s)
        hyp_len += len(hyp_t)
        ref_len += len(ref_t)
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(hyp_t, n)
            if not hyp_counts:
                continue
            ref_counts = _ngrams(ref_t, n)
            numer[n - 1] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
            denom[n - 1] += sum(hyp_counts.values())

    precisions = tuple(
        (numer[k] / denom[k]) if denom[k] else 0.0 for k in range(max_n)
    )
    if hyp_len == 0:
        return BleuScore(0.0, precisions, 0.0 if ref_len else 1.0, 0, ref_len)
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)

    included = [k for k in range(max_n) if denom[k] > 0]
    if not included:
        return BleuScore(0.0, precisions, bp, hyp_len, ref_len)

    log_sum = 0.0
    smooth_weight = 1.0
    for k in included:
        if numer[k] > 0:
            log_sum += math.log(numer[k] / denom[k])
        elif smooth == "exp":
            smooth_weight *= 2.0
            log_sum += math.log(1.0 / (smooth_weight * denom[k]))
        else:
            return BleuScore(0.0, precisions, bp, hyp_len, ref_len)
    geo = math.exp(log_sum / len(included))
    return BleuScore(bp * geo * 100.0, precisions, bp, hyp_len, ref_len)


# ---------------------------------------------------------------------------
# MOS and KPI aggregation (exact rational arithmetic)
# ---------------------------------------------------------------------------


def _to_fraction(value, name: str) -> Fraction:
    try:
        frac = Fraction(str(value)) if isinstance(value, float) else Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise RatingRange(f"{name} is not a number: {value!r}") from exc
    if not Fraction(0) <= frac <= Fraction(5):
        raise RatingRange(f"{name} must be in [0, 5], got {value}")
    return frac


def round_half_up(value: Fraction, places: int = 2) -> Decimal:
    quantum = Decimal(1).scaleb(-places)
    return (Decimal(value.numerator) / Decimal(value.denominator)).quantize(
        quantum, rounding=ROUND_HALF_UP
    )


@dataclass(frozen=True)
class Mos:
    audio_quality: Fraction
    interpretability: Fraction
    mos: Fraction

    def report(self) -> dict:
        return {
            "aq": float(round_half_up(self.audio_quality)),
            "i": float(round_half_up(self.interpretability)),
            "mos": float(round_half_up(self.mos)),
        }


def mos(aq, i) -> Mos:
    """Mean opinion score: the average of audio quality and interpretability."""
    aq_f = _to_fraction(aq, "aq")
    i_f = _to_fraction(i, "i")
    return Mos(aq_f, i_f, (aq_f + i_f) / 2)


@dataclass(frozen=True)
class KpiSummary:
    translation_quality: Fraction
    speech_quality: Fraction
    interpretability: Fraction
    n_raters: int

    def report(self) -> dict:
        return {
            "tq": float(round_half_up(self.translation_quality)),
            "sq": float(round_half_up(self.speech_quality)),
            "i": float(round_half_up(self.interpretability)),
            "n_raters": self.n_raters,
        }


def kpi_aggregate(ratings: Sequence[tuple]) -> KpiSummary:
    """Arithmetic mean of per-rater (tq, sq, i) triples on the 0-5 scale."""
    if not ratings:
        raise RatingRange("need at least one rater")
    tq = sq = i_total = Fraction(0)
    for idx, triple in enumerate(ratings):
        if len(triple) != 3:
            raise RatingRange(f"rating {idx} is not a (tq, sq, i) triple")
        tq += _to_fraction(triple[0], f"tq[{idx}]")
        sq += _to_fraction(triple[1], f"sq[{idx}]")
        i_total += _to_fraction(triple[2], f"i[{idx}]")
    n = len(ratings)
    return KpiSummary(tq / n, sq / n, i_total / n, n)


# ---------------------------------------------------------------------------
# Bundled reference fixtures (read-only survey/benchmark results used by the
# report renderer and tests; not reproducible targets).
# ---------------------------------------------------------------------------

_FIXTURE_NAMES = ("kpi_survey", "tts_mos", "asr_wer", "dc_f1", "nmt_bleu")


def load_reference(name: str) -> dict:
    if name not in _FIXTURE_NAMES:
        raise ConfigError(f"unknown reference fixture {name!r}; have {_FIXTURE_NAMES}")
    path = resources.files("sstkit.data") / "reference" / f"{name}.json"
    return json.loads(path.read_text(encoding="utf-8"))


def kpi_from_report(report: Mapping) -> KpiSummary:
    """Rebuild a KpiSummary from its reported (2-decimal) form."""
    return KpiSummary(
        Fraction(str(report["tq"])),
        Fraction(str(report["sq"])),
        Fraction(str(report["i"])),
        int(report["n_raters"]),
    )
