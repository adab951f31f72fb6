"""Reversible tone codec standing in for neural recognition and synthesis.

Each alphabet symbol owns one frequency on an evenly spaced grid well below
the Nyquist limit of 16 kHz input. Synthesis renders each symbol as a
fixed-length sine segment with short cosine ramps; decoding energy-gates
the waveform into speech regions, slices them into symbol windows and
classifies each window by its dominant DFT frequency with a rejection band
for off-grid tones. This keeps the full recognition->synthesis cascade
end-to-end testable with bit-level expectations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError, UnsupportedSymbolError
from .audio import TTS_RATE, Utterance

DEFAULT_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789 '.,?!-"

_UNKNOWN = "?"
_FFT_SIZE = 8192
_SILENCE_FLOOR = 100.0  # absolute frame-RMS floor in int16 units
_GATE_FRACTION = 0.25  # relative to the loudest frame


@dataclass(frozen=True)
class CodecParams:
    base_hz: float = 400.0
    spacing_hz: float = 80.0
    segment_ms: float = 60.0
    ramp_ms: float = 5.0
    amplitude: float = 0.5
    sample_rate: int = TTS_RATE
    alphabet: str = DEFAULT_ALPHABET

    def __post_init__(self):
        if self.spacing_hz < 80.0:
            raise ConfigError("symbol spacing below 80 Hz cannot be resolved reliably")
        top = self.base_hz + self.spacing_hz * (len(self.alphabet) - 1)
        if not (0 < self.base_hz and top <= 4000.0):
            raise ConfigError("frequency grid must sit inside (0, 4000] Hz")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ConfigError("alphabet contains duplicate symbols")
        if not 0 < self.amplitude <= 1.0:
            raise ConfigError("amplitude must be in (0, 1]")


class ToneCodec:
    def __init__(self, params: CodecParams | None = None):
        self.params = params or CodecParams()
        p = self.params
        self.freq_of = {
            sym: p.base_hz + i * p.spacing_hz for i, sym in enumerate(p.alphabet)
        }
        self._freq_grid = np.array(sorted(self.freq_of.values()))
        self._sym_by_freq = {f: s for s, f in self.freq_of.items()}
        self.segment_samples = round(p.segment_ms / 1000.0 * p.sample_rate)
        self.reject_band_hz = 0.3 * p.spacing_hz
        self._segment_cache: dict[str, np.ndarray] = {}

    # -- synthesis ----------------------------------------------------------

    def _render_segment(self, symbol: str) -> np.ndarray:
        cached = self._segment_cache.get(symbol)
        if cached is not None:
            return cached
        p = self.params
        n = self.segment_samples
        t = np.arange(n) / p.sample_rate
        tone = np.sin(2.0 * np.pi * self.freq_of[symbol] * t)
        ramp = round(p.ramp_ms / 1000.0 * p.sample_rate)
        envelope = np.ones(n)
        if ramp > 0:
            fade = 0.5 * (1.0 - np.cos(np.pi * np.arange(ramp) / ramp))
            envelope[:ramp] = fade
            envelope[-ramp:] = fade[::-1]
        segment = np.round(tone * envelope * p.amplitude * 32767.0).astype(np.int16)
        self._segment_cache[symbol] = segment
        return segment

    def synthesize(self, text: str) -> Utterance:
        """One fixed-length tone segment per symbol; empty text -> empty audio."""
        for symbol in text:
            if symbol not in self.freq_of:
                raise UnsupportedSymbolError(symbol)
        if not text:
            return Utterance(np.zeros(0, dtype=np.int16), self.params.sample_rate)
        parts = [self._render_segment(symbol) for symbol in text]
        return Utterance(np.concatenate(parts), self.params.sample_rate)

    # -- decoding -----------------------------------------------------------

    @staticmethod
    def _frame_rms(x: np.ndarray, sample_rate: int) -> tuple[np.ndarray, int, int]:
        win = round(0.020 * sample_rate)
        hop = round(0.010 * sample_rate)
        if x.size < win:
            pad = np.zeros(win)
            pad[: x.size] = x
            frames = pad[None, :]
        else:
            n_frames = 1 + (x.size - win) // hop
            idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
            frames = x[idx]
        return np.sqrt(np.mean(frames * frames, axis=1)), win, hop

    def _speech_regions(self, x: np.ndarray, sample_rate: int) -> list[tuple[int, int]]:
        rms, win, hop = self._frame_rms(x, sample_rate)
        peak = float(rms.max()) if rms.size else 0.0
        if peak < _SILENCE_FLOOR:
            return []
        gate = max(_SILENCE_FLOOR, _GATE_FRACTION * peak)
        speech = rms >= gate
        regions = []
        start = None
        for k, flag in enumerate(speech):
            if flag and start is None:
                start = k
            elif not flag and start is not None:
                regions.append((start * hop, min(x.size, (k - 1) * hop + win)))
                start = None
        if start is not None:
            regions.append((start * hop, x.size))
        return regions

    def _classify_windows(self, windows: np.ndarray, sample_rate: int) -> str:
        spectrum = np.abs(np.fft.rfft(windows, n=_FFT_SIZE, axis=1))
        freqs = np.fft.rfftfreq(_FFT_SIZE, d=1.0 / sample_rate)
        band = (freqs >= self.params.base_hz - 2 * self.params.spacing_hz) & (
            freqs <= self._freq_grid[-1] + 2 * self.params.spacing_hz
        )
        spectrum[:, ~band] = 0.0
        peak_freqs = freqs[np.argmax(spectrum, axis=1)]
        out = []
        for f in peak_freqs:
            slot = int(np.argmin(np.abs(self._freq_grid - f)))
            nearest = self._freq_grid[slot]
            if abs(nearest - f) > self.reject_band_hz:
                out.append(_UNKNOWN)
            else:
                out.append(self._sym_by_freq[float(nearest)])
        return "".join(out)

    def decode(self, utterance: Utterance) -> str:
        """Inverse of synthesize on clean input; silence decodes to "".

        Robust to additive white noise down to roughly 20 dB SNR; a tone
        landing between two grid frequencies decodes to '?'.
        """
        sr = utterance.sample_rate
        x = utterance.samples.astype(np.float64)
        if x.size == 0:
            return ""
        seg = round(self.params.segment_ms / 1000.0 * sr)
        pieces = []
        for lo, hi in self._speech_regions(x, sr):
            length = hi - lo
            n_sym = max(1, round(length / seg))
            bounds = np.linspace(lo, hi, n_sym + 1).round().astype(int)
            width = min(seg, int(np.diff(bounds).min()))
            windows = np.stack(
                [x[bounds[k] : bounds[k] + width] for k in range(n_sym)]
            )
            pieces.append(self._classify_windows(windows, sr))
        return "".join(pieces)


def detect_pauses(
    utterance: Utterance, energy_threshold: float, min_silence_ms: float
) -> list[tuple[float, float]]:
    """Speech segments delimited by sufficiently long low-energy stretches.

    Frames are 20 ms with a 10 ms hop; a frame is silent when its RMS (as a
    fraction of full scale) falls below energy_threshold. Silent runs of at
    least min_silence_ms split the audio; returned (start_ms, end_ms) spans
    are ordered and non-overlapping.
    """
    if min_silence_ms <= 0:
        raise ConfigError("min_silence_ms must be > 0")
    x = utterance.samples.astype(np.float64) / 32768.0
    if x.size == 0:
        return []
    sr = utterance.sample_rate
    rms, win, hop = ToneCodec._frame_rms(x * 32768.0, sr)
    rms = rms / 32768.0
    silent = rms < energy_threshold
    frame_ms = 1000.0 * hop / sr
    win_ms = 1000.0 * win / sr

    # Silent runs shorter than min_silence_ms do not split speech.
    breaks = np.zeros(len(silent), dtype=bool)
    k = 0
    while k < len(silent):
        if silent[k]:
            j = k
            while j < len(silent) and silent[j]:
                j += 1
            if (j - k - 1) * frame_ms + win_ms >= min_silence_ms:
                breaks[k:j] = True
            k = j
        else:
            k += 1

    segments = []
    start = None
    for k in range(len(silent)):
        is_speech = not breaks[k]
        if is_speech and start is None:
            start = k
        elif not is_speech and start is not None:
            segments.append((start, k - 1))
            start = None
    if start is not None:
        segments.append((start, len(silent) - 1))

    out = []
    total_ms = 1000.0 * x.size / sr
    for first, last in segments:
        # Trim sub-threshold edge frames left over from short silent runs.
        while first <= last and silent[first]:
            first += 1
        while last >= first and silent[last]:
            last -= 1
        if first > last:
            continue
        out.append((first * frame_ms, min(total_ms, last * frame_ms + win_ms)))
    return out
