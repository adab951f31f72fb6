"""sstkit: desk-scale cascaded speech translation toolkit.

Subpackages cover text preparation (normalization, BPE, language id),
rule-based disfluency correction, evaluation metrics (WER/BLEU/MOS/KPI),
parallel-corpus filtering, a deterministic ASR/DC/MT/TTS pipeline built on a
reversible tone codec, a replica-pool serving layer with an HTTP API, and a
closed-loop load-test harness with a queueing simulator.
"""

__version__ = "0.1.0"
