"""PCM utterances and RIFF WAVE I/O (mono, 16-bit only)."""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AudioFormatError

ASR_RATE = 16_000
TTS_RATE = 22_050
SUPPORTED_RATES = (ASR_RATE, TTS_RATE)


@dataclass(eq=False)
class Utterance:
    """Mono signed 16-bit PCM samples at 16 kHz (recognition input) or
    22.05 kHz (synthesis output)."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.ndim != 1:
            raise AudioFormatError(f"expected mono 1-D samples, got shape {samples.shape}")
        if samples.dtype != np.int16:
            if not np.issubdtype(samples.dtype, np.integer):
                raise AudioFormatError(f"expected int16 PCM, got dtype {samples.dtype}")
            if samples.size and (samples.min() < -32768 or samples.max() > 32767):
                raise AudioFormatError("integer samples out of int16 range")
            samples = samples.astype(np.int16)
        self.samples = samples
        if self.sample_rate not in SUPPORTED_RATES:
            raise AudioFormatError(
                f"sample rate {self.sample_rate} unsupported; expected one of {SUPPORTED_RATES}"
            )

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_ms(self) -> float:
        return 1000.0 * self.samples.size / self.sample_rate

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Utterance)
            and self.sample_rate == other.sample_rate
            and np.array_equal(self.samples, other.samples)
        )


def _read_wave(reader: wave.Wave_read, origin: str) -> Utterance:
    if reader.getnchannels() != 1:
        raise AudioFormatError(f"{origin}: expected mono, got {reader.getnchannels()} channels")
    if reader.getsampwidth() != 2:
        raise AudioFormatError(
            f"{origin}: expected 16-bit samples, got {8 * reader.getsampwidth()}-bit"
        )
    if reader.getcomptype() != "NONE":
        raise AudioFormatError(f"{origin}: compressed WAVE ({reader.getcomptype()}) unsupported")
    frames = reader.readframes(reader.getnframes())
    samples = np.frombuffer(frames, dtype="<i2").astype(np.int16)
    return Utterance(samples, reader.getframerate())


def read_wav(path: str | Path) -> Utterance:
    try:
        with wave.open(str(path), "rb") as reader:
            return _read_wave(reader, str(path))
    except wave.Error as exc:
        raise AudioFormatError(f"{path}: not a RIFF WAVE file ({exc})") from exc


def read_wav_bytes(data: bytes) -> Utterance:
    try:
        with wave.open(io.BytesIO(data), "rb") as reader:
            return _read_wave(reader, "<bytes>")
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"not a RIFF WAVE payload ({exc})") from exc


def write_wav(utterance: Utterance, path: str | Path) -> None:
    with wave.open(str(path), "wb") as writer:
        writer.setnchannels(1)
        writer.setsampwidth(2)
        writer.setframerate(utterance.sample_rate)
        writer.writeframes(utterance.samples.astype("<i2").tobytes())


def wav_bytes(utterance: Utterance) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as writer:
        writer.setnchannels(1)
        writer.setsampwidth(2)
        writer.setframerate(utterance.sample_rate)
        writer.writeframes(utterance.samples.astype("<i2").tobytes())
    return buf.getvalue()
