"""Regenerate the frozen server fixtures the console tests compare against.

Run from the repository root with the Python package installed:
    python frontend/scripts/make_fixtures.py
"""

import base64
import json
import random
from pathlib import Path

from fastapi.testclient import TestClient

from sstkit import corpusfilter as cf
from sstkit.audio import wav_bytes
from sstkit.codec import ToneCodec
from sstkit.httpapi import PipelineRunner, StageResources, create_app
from sstkit.serving import build_pool

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
WORDS = [
    "river", "mountain", "garden", "ticket", "signal", "bridge", "window",
    "teacher", "farmer", "doctor", "market", "engine", "letter", "bottle",
    "candle", "mirror", "pencil", "carpet", "village", "evening", "harbor",
]


def make_pairs(n: int) -> tuple[list[str], list[str]]:
    rng = random.Random(1234)
    src, tgt = [], []
    for i in range(n):
        words = [rng.choice(WORDS) for _ in range(rng.randint(3, 7))]
        src.append(" ".join(words))
        if rng.random() < 0.4:
            tgt.append(" ".join(words))  # aligned pair
        elif rng.random() < 0.7:
            mutated = list(words)
            mutated[rng.randrange(len(mutated))] = rng.choice(WORDS)
            tgt.append(" ".join(mutated))  # noisy pair
        else:
            tgt.append(" ".join(rng.choice(WORDS) for _ in range(rng.randint(3, 7))))
    return src, tgt


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    resources = StageResources()
    pool = build_pool(1, 2, lambda: PipelineRunner(resources))
    try:
        with TestClient(create_app(pool)) as client:
            src, tgt = make_pairs(100)
            resp = client.post("/api/v1/filter/score", json={"src": src, "tgt": tgt})
            resp.raise_for_status()
            scores = resp.json()["scores"]

            # server-side partitions over the scores the API returned
            taus = [round(-1.0 + 0.1 * k, 1) for k in range(21)]
            pairs = [cf.ScoredPair(s, t, sc) for s, t, sc in zip(src, tgt, scores)]
            index_of = {id(p): i for i, p in enumerate(pairs)}
            partitions = []
            for tau in taus:
                kept, _ = cf.filter_by_threshold(pairs, tau)
                partitions.append([index_of[id(p)] for p in kept])
            (OUT / "filter_scores.json").write_text(
                json.dumps(
                    {"src": src, "tgt": tgt, "scores": scores,
                     "taus": taus, "server_kept_indices": partitions},
                    indent=1,
                ),
                encoding="utf-8",
            )

            codec_text = "what about the uh party we have to go to ?"
            audio_b64 = base64.b64encode(
                wav_bytes(ToneCodec().synthesize(codec_text))
            ).decode("ascii")
            resp = client.post(
                "/api/v1/ssmt",
                json={"audio_b64": audio_b64, "src": "en", "tgt": "hi"},
            )
            resp.raise_for_status()
            (OUT / "ssmt_response.json").write_text(
                json.dumps({"request_text": codec_text, "response": resp.json()}, indent=1),
                encoding="utf-8",
            )
    finally:
        pool.shutdown()
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
