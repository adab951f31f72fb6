"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with its runtime against the stated budget.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete. The console frontend has its own acceptance checks
in frontend/; nothing here depends on it.
"""

import math
import random
import threading
import time
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from sstkit import corpusfilter as cf
from sstkit import disfluency as dc
from sstkit import loadtest, metrics, textprep
from sstkit.audio import Utterance
from sstkit.codec import ToneCodec
from sstkit.pipeline import PhonemeDurations, length_regulate
from sstkit.serving import FixedDelayRunner, build_pool


def report(n: int, name: str, t0: float, budget_s: float) -> None:
    elapsed = time.perf_counter() - t0
    print(f"[PASS] criterion {n} ({name}): {elapsed:.2f}s < {budget_s:.0f}s budget")
    assert elapsed < budget_s, f"criterion {n} exceeded its {budget_s}s runtime budget"


# -- criterion 1 -------------------------------------------------------------


def test_c1_mos_exactness():
    t0 = time.perf_counter()
    rows = [
        (4.70, 4.48, "4.59"),
        (4.63, 4.21, "4.42"),
        (4.74, 4.32, "4.53"),
        (4.79, 4.57, "4.68"),
    ]
    for aq, i, expected in rows:
        result = metrics.mos(aq, i)
        assert result.mos == Fraction(expected), (aq, i)
        assert f"{metrics.round_half_up(result.mos)}" == expected
    report(1, "MOS exactness", t0, 1.0)


# -- criterion 2 -------------------------------------------------------------


def brute_force_edit_distance(ref: tuple, hyp: tuple) -> int:
    @lru_cache(maxsize=None)
    def go(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(
            go(i - 1, j - 1) + (0 if ref[i - 1] == hyp[j - 1] else 1),
            go(i - 1, j) + 1,
            go(i, j - 1) + 1,
        )

    distance = go(len(ref), len(hyp))
    go.cache_clear()
    return distance


def test_c2_wer_oracle_equivalence():
    t0 = time.perf_counter()
    rng = random.Random(20240501)
    alphabet = "abcd"
    for case in range(10_000):
        ref = tuple(rng.choice(alphabet) for _ in range(rng.randint(1, 12)))
        hyp = tuple(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
        breakdown = metrics.wer(ref, hyp)
        assert breakdown.edits == brute_force_edit_distance(ref, hyp), (ref, hyp)
        assert breakdown.wer == breakdown.edits / len(ref)
        identity = metrics.wer(ref, ref)
        assert identity.wer == 0.0
    report(2, "WER oracle equivalence, 10k instances", t0, 30.0)


# -- criteria 3 and 4 --------------------------------------------------------

SAFE_VOCAB = [
    "tickets", "flight", "party", "garden", "lecture", "teacher", "doctor",
    "farmer", "market", "river", "mountain", "train", "ticket", "window",
    "evening", "morning", "paper", "letter", "signal", "bridge", "village",
    "engine", "handle", "bottle", "candle", "mirror", "pencil", "carpet",
    "stadium", "harbor", "valley", "meadow", "castle", "tunnel", "statue",
]


def test_c3_disfluency_round_trip():
    t0 = time.perf_counter()
    lexicons = dc.load_lexicons("en")
    config = dc.InjectionConfig(
        p_filled_pause=0.7, p_interjection=0.7,
        p_discourse_marker=0.7, p_repetition=0.7,
    )
    rng = random.Random(77)
    tp = fp = fn = 0
    for seed in range(1_000):
        # distinct tokens: repetition reparandum labels are then unambiguous
        base = rng.sample(SAFE_VOCAB, rng.randint(3, 10))
        noisy = dc.inject(base, config, seed=seed, lexicons=lexicons)
        fluent, predicted = dc.correct(noisy.tokens, lexicons)
        assert fluent == base, (base, noisy.tokens, fluent)
        scored = dc.evaluate_labels(predicted, noisy)
        tp, fp, fn = tp + scored.tp, fp + scored.fp, fn + scored.fn
    overall = dc.PRF1.from_counts(tp, fp, fn)
    assert overall.f1 == 1.0 and tp > 0
    report(3, "disfluency inject/correct round trip, 1k sentences", t0, 10.0)


def test_c4_worked_examples_verbatim():
    t0 = time.perf_counter()
    lexicons = dc.load_lexicons("en")
    examples = [
        # filled pause
        ("what about the uh party we have to go to ?",
         "what about the party we have to go to ?"),
        # interjection
        ("ugh , what a night it has been !",
         "what a night it has been !"),
        # discourse marker
        ("well , we are going to the party .",
         "we are going to the party ."),
        # repetition
        ("if i can't can't go to the party today , it is not going to look good .",
         "if i can't go to the party today , it is not going to look good ."),
        # edit
        ("we need two tickets i'm sorry three tickets for the flight",
         "we need three tickets for the flight"),
    ]
    for disfluent, expected in examples:
        fluent, _ = dc.correct(disfluent.split(), lexicons)
        assert " ".join(fluent) == expected, disfluent
    report(4, "worked correction examples", t0, 1.0)


# -- criterion 5 -------------------------------------------------------------


def distinct_sentences(rng: random.Random, n: int) -> list[str]:
    out = set()
    while len(out) < n:
        out.add(" ".join(rng.choice(SAFE_VOCAB) for _ in range(rng.randint(3, 7))))
    return sorted(out)


def test_c5_corpus_filter_recovery():
    t0 = time.perf_counter()
    backend = cf.DeterministicEmbedder()

    # permutation recovery, 100 seeds, n <= 50
    for seed in range(100):
        rng = random.Random(seed)
        n = rng.randint(2, 50)
        src = distinct_sentences(rng, n)
        perm = list(range(n))
        rng.shuffle(perm)
        tgt = [None] * n
        for i, j in enumerate(perm):
            tgt[j] = src[i]
        result = cf.realign(src, tgt, backend, mode="one-to-one")
        assert {(i, j) for i, j, _ in result.matches} == {
            (i, perm[i]) for i in range(n)
        }, f"seed {seed}"

    # noisy tiny corpora vs the exhaustive-permutation oracle (informational)
    divergences = []
    for seed in range(20):
        rng = random.Random(1_000 + seed)
        n = rng.randint(2, 6)
        src = distinct_sentences(rng, n)
        tgt = distinct_sentences(random.Random(2_000 + seed), n)
        result = cf.realign(src, tgt, backend, mode="one-to-one")
        greedy_total = sum(s for _, _, s in result.matches)
        matrix = backend.embed(src) @ backend.embed(tgt).T
        optimal = cf.brute_force_best_total(matrix)
        if greedy_total < optimal - 1e-9:
            divergences.append((seed, greedy_total, optimal))
    for seed, greedy_total, optimal in divergences:
        print(f"  [info] greedy {greedy_total:.6f} < optimal {optimal:.6f} (seed {seed})")

    # threshold partition identity
    rng = random.Random(31)
    for _ in range(200):
        pairs = [
            cf.ScoredPair(f"s{i}", f"t{i}", rng.uniform(-1, 1))
            for i in range(rng.randint(0, 60))
        ]
        tau = rng.uniform(-1, 1)
        kept, dropped = cf.filter_by_threshold(pairs, tau)
        assert len(kept) + len(dropped) == len(pairs)
        assert sorted(map(id, kept + dropped)) == sorted(map(id, pairs))
        assert all(p.score >= tau for p in kept)
        assert all(p.score < tau for p in dropped)
    report(5, "corpus filter recovery + partition identity", t0, 60.0)


# -- criterion 6 -------------------------------------------------------------


def test_c6_codec_round_trip():
    t0 = time.perf_counter()
    codec = ToneCodec()
    alphabet = codec.params.alphabet
    rng = random.Random(6502)
    noise_rng = np.random.default_rng(6502)
    for case in range(1_000):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 64)))
        clean = codec.synthesize(text)
        assert codec.decode(clean) == text, f"clean mismatch on {text!r}"
        x = clean.samples.astype(np.float64)
        signal_rms = math.sqrt(float(np.mean(x * x)))
        noise = noise_rng.normal(0.0, signal_rms / 10.0, x.size)  # 20 dB SNR
        noisy = Utterance(
            np.clip(x + noise, -32768, 32767).astype(np.int16), clean.sample_rate
        )
        assert codec.decode(noisy) == text, f"noisy mismatch on {text!r}"
    report(6, "codec round trip, 1k strings clean + 20 dB", t0, 60.0)


# -- criterion 7 -------------------------------------------------------------


def test_c7_length_regulator_law():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    for _ in range(1_000):
        n = int(rng.integers(1, 24))
        durations = tuple(int(d) for d in rng.integers(0, 6, n))
        pd = PhonemeDurations(tuple(f"p{i}" for i in range(n)), durations)
        out = length_regulate(pd, rng.normal(size=(n, 8)))
        assert out.shape[0] == sum(durations)
    report(7, "length regulator law, 1k vectors", t0, 5.0)


# -- criterion 8 -------------------------------------------------------------


def test_c8_serving_invariants_under_load():
    t0 = time.perf_counter()
    pool = build_pool(
        2, 3,
        lambda: FixedDelayRunner({"asr": 50, "dc": 50, "mt": 50, "tts": 50}),
        queue_capacity=600,
    )
    try:
        handles = []
        lock = threading.Lock()

        def submit_many(k):
            for _ in range(50):
                h = pool.dispatch({"req": k})
                with lock:
                    handles.append(h)

        threads = [threading.Thread(target=submit_many, args=(i,)) for i in range(10)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(handles) == 500
        for h in handles:
            h.result(timeout=120)

        counts = pool.counts()
        assert counts["ok"] + counts["error"] + counts["rejected"] == 500
        assert counts["ok"] == 500

        # mutual exclusion from the occupancy log
        dispatches = {}
        intervals = {}
        for event in pool.occupancy_log:
            if event[0] == "dispatch":
                _, rid, replica, ts = event
                dispatches[rid] = (replica, ts)
            elif event[0] == "complete":
                _, rid, replica, ts, _outcome = event
                rep, start = dispatches.pop(rid)
                assert rep == replica
                intervals.setdefault(replica, []).append((start, ts))
        assert sum(len(v) for v in intervals.values()) == 500
        for replica, spans in intervals.items():
            spans.sort()
            for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
                assert e1 <= s2, f"mutual exclusion violated on {replica}"

        # work conservation: never queued while a replica was idle
        for event in pool.occupancy_log:
            if event[0] == "enqueue":
                assert event[4] == 0

        # FIFO among queued requests
        enqueued = [e[1] for e in pool.occupancy_log if e[0] == "enqueue"]
        dispatched = [e[1] for e in pool.occupancy_log if e[0] == "dispatch"]
        queued_set = set(enqueued)
        assert [r for r in dispatched if r in queued_set] == enqueued
    finally:
        pool.shutdown()
    report(8, "serving invariants, 500 requests on 2x3 pool", t0, 120.0)


# -- criterion 9 -------------------------------------------------------------


def test_c9_latency_scaling_shape():
    t0 = time.perf_counter()
    stage_ms = {"asr": 8.0, "dc": 2.0, "mt": 4.0, "tts": 6.0}
    service_ms = sum(stage_ms.values())  # 20 ms deterministic service time
    levels = [50, 100, 500, 1000]

    def duration_for(users: int, replicas: int) -> float:
        cycle_s = loadtest.predicted_median_ms(replicas, service_ms, users) / 1000.0
        return max(2.0, 3.5 * cycle_s)

    medians = {}
    for label, (devices, per_device) in (("deployed", (8, 13)), ("baseline", (1, 1))):
        replicas = devices * per_device
        pool = build_pool(
            devices, per_device,
            lambda: FixedDelayRunner(stage_ms, consolidate=True),
            queue_capacity=2048,
        )
        try:
            rows = []
            for users in levels:
                profile = loadtest.LoadProfile(
                    users=users,
                    duration_s=duration_for(users, replicas),
                    target=pool,
                    seed=9,
                )
                rows.append(loadtest.run_load(profile))
            medians[label] = [r.median_ms for r in rows]
        finally:
            pool.shutdown()

    deployed, baseline = medians["deployed"], medians["baseline"]
    print(f"  deployed medians: {deployed}")
    print(f"  baseline medians: {baseline}")

    # (a) deployed beats baseline at every level
    for level, dep, base in zip(levels, deployed, baseline):
        assert dep < base, f"deployed !< baseline at {level} users"

    # (b) both columns monotone non-decreasing in users
    assert deployed == sorted(deployed), f"deployed not monotone: {deployed}"
    assert baseline == sorted(baseline), f"baseline not monotone: {baseline}"

    # (c) measured medians within +-20% of the queueing prediction
    for label, replicas, column in (("deployed", 104, deployed), ("baseline", 1, baseline)):
        for users, measured in zip(levels, column):
            predicted = loadtest.predicted_median_ms(replicas, service_ms, users)
            assert abs(measured - predicted) / predicted <= 0.20, (
                f"{label}@{users}: measured {measured} vs predicted {predicted}"
            )
    report(9, "latency scaling shape (deployed vs baseline)", t0, 300.0)


# -- criterion 10 ------------------------------------------------------------


def test_c10_bleu_sanity():
    t0 = time.perf_counter()
    corpus = [
        "the cat sat on the mat",
        "dogs bark at the moon every night",
        "rain falls softly on the green hills",
    ]
    assert metrics.bleu(corpus, corpus).score == 100.0

    disjoint = metrics.bleu(["aa bb cc dd"], ["xx yy zz ww"])
    assert disjoint.score == 0.0

    clipped = metrics.bleu(["the the the"], ["the cat"])
    assert clipped.ngram_precisions[0] == pytest.approx(1 / 3)
    assert clipped.score == 0.0

    refs = [
        "the cat sat on a mat",
        "dogs bark at a moon every night",
        "rain fell softly on green hills",
        "a quick brown fox jumped over the lazy dog",
    ]
    hyps = [
        "the cat sat on the mat",
        "dogs bark at the moon every night",
        "rain falls softly on the green hills",
        "a quick brown fox jumps over the lazy dog",
    ]
    base = metrics.bleu(hyps, refs).score
    rng = random.Random(10)
    for _ in range(100):
        order = list(range(len(hyps)))
        rng.shuffle(order)
        assert metrics.bleu([hyps[i] for i in order], [refs[i] for i in order]).score == base
    report(10, "BLEU sanity + permutation invariance", t0, 10.0)


# -- criterion 11 ------------------------------------------------------------


def test_c11_bpe_merges_and_losslessness():
    t0 = time.perf_counter()
    toy = {"low": 5, "lower": 2, "newest": 6, "widest": 3}
    model = textprep.bpe_learn(toy, 2)
    assert model.merges == (("e", "s"), ("es", "t"))

    rng = random.Random(11)
    alphabet = "abcdefghijklmnop"
    corpus = {}
    for _ in range(400):
        token = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 12)))
        corpus[token] = corpus.get(token, 0) + rng.randint(1, 5)
    trained = textprep.bpe_learn(corpus, 80)
    for case in range(10_000):
        token = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 16)))
        assert textprep.bpe_join(textprep.bpe_apply(trained, token)) == token
    report(11, "BPE merges + losslessness on 10k tokens", t0, 20.0)
