"""Raw-audio utilities: WAV I/O, spectrograms, frame slicing, baseline embeddings.

Audio is optional corpus-side; these routines back the spectrogram view,
clip playback fixtures, and an embedding provider for uploaded snippets.
The embedding provider is a deterministic stand-in for a pretrained
network: summary statistics of log-mel band energies, tiled to the
requested dim, so equal audio always maps to equal vectors.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .frames import FRAMES_PER_CLIP

SPECTROGRAM_WINDOW = 1024
SPECTROGRAM_HOP = 256
DB_FLOOR = -80.0
MEL_BANDS = 128
_LOG_EPS = 1e-10


@dataclass(frozen=True)
class Waveform:
    sample_rate: int
    samples: np.ndarray  # float64 in [-1, 1], mono

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("samples must be a nonempty 1-D array")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class SpectrogramMatrix:
    """dB values in [-80, 0], shape (freq_bins, time_steps); a time column's
    values are normalized to the clip-wide peak (0 dB)."""

    sample_rate: int
    values: np.ndarray
    window: int = SPECTROGRAM_WINDOW
    hop: int = SPECTROGRAM_HOP

    @property
    def freq_bins(self) -> int:
        return self.values.shape[0]

    @property
    def time_steps(self) -> int:
        return self.values.shape[1]


def load_wav(path: str | Path) -> Waveform:
    """PCM 8/16-bit mono WAV; samples normalized to [-1, 1]."""
    try:
        with wave.open(str(path), "rb") as fh:
            channels = fh.getnchannels()
            width = fh.getsampwidth()
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except wave.Error as exc:
        raise FormatError(f"not a readable WAV file: {path} ({exc})") from exc
    if channels != 1:
        raise FormatError(f"only mono WAV supported, file has {channels} channels")
    if width == 1:
        samples = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif width == 2:
        samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    else:
        raise FormatError(f"unsupported sample width {8 * width} bits")
    if samples.size == 0:
        raise FormatError(f"empty WAV file: {path}")
    return Waveform(rate, samples)


def write_wav(w: Waveform, path: str | Path) -> None:
    """16-bit PCM writer; the fixture/export counterpart of load_wav."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scaled = np.clip(np.round(w.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(w.sample_rate)
        fh.writeframes(scaled.tobytes())


def stft_magnitudes(samples: np.ndarray, window: int, hop: int) -> np.ndarray:
    """Hann-windowed STFT magnitude, shape (window // 2 + 1, time_steps)."""
    n = samples.size
    if n < window:
        raise ValueError(f"input of {n} samples is shorter than the {window} window")
    steps = 1 + (n - window) // hop
    idx = np.arange(window)[None, :] + hop * np.arange(steps)[:, None]
    segments = samples[idx] * np.hanning(window)[None, :]
    return np.abs(np.fft.rfft(segments, axis=1)).T


def spectrogram(w: Waveform) -> SpectrogramMatrix:
    """20*log10(magnitude / clip max), clipped to [-80, 0]; silence sits at
    the floor. Doubling the input amplitude leaves the matrix unchanged."""
    mags = stft_magnitudes(w.samples, SPECTROGRAM_WINDOW, SPECTROGRAM_HOP)
    peak = float(mags.max())
    if peak <= 0.0:
        values = np.full_like(mags, DB_FLOOR)
    else:
        with np.errstate(divide="ignore"):
            values = 20.0 * np.log10(mags / peak)
        values = np.clip(values, DB_FLOOR, 0.0)
    return SpectrogramMatrix(w.sample_rate, values)


def slice_frames(w: Waveform) -> list[Waveform]:
    """Ten 1-second segments with boundaries at integer seconds.

    Nominal input is a 10-second clip; longer audio is truncated, and
    clips of at least 1 second are zero-padded out to the full 10.
    """
    if w.duration < 1.0:
        raise ValueError(f"clip of {w.duration:.3f}s is shorter than one frame")
    per = w.sample_rate
    need = FRAMES_PER_CLIP * per
    samples = w.samples[:need]
    if samples.size < need:
        samples = np.concatenate([samples, np.zeros(need - samples.size)])
    return [Waveform(w.sample_rate, samples[i * per : (i + 1) * per]) for i in range(FRAMES_PER_CLIP)]


def mel_filterbank(sample_rate: int, n_fft: int, n_bands: int) -> np.ndarray:
    """Triangular mel filters, shape (n_bands, n_fft // 2 + 1)."""
    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)

    mel_points = np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_bands + 2)
    hz_points = mel_to_hz(mel_points)
    bins = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    bank = np.zeros((n_bands, bins.size))
    for b in range(n_bands):
        lo, mid, hi = hz_points[b : b + 3]
        rising = (bins - lo) / max(mid - lo, 1e-12)
        falling = (hi - bins) / max(hi - mid, 1e-12)
        bank[b] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def baseline_embedding(w: Waveform, dim: int) -> np.ndarray:
    """Deterministic per-frame embeddings, shape (10, dim), float32.

    Each 1-second frame yields the mean and standard deviation over time
    of 128 log-mel band energies; the 256 features are tiled or truncated
    to dim. A stand-in for a learned embedder: identical audio gives
    identical vectors, and spectrally different audio separates.
    """
    if dim < 16:
        raise ValueError(f"dim must be >= 16, got {dim}")
    bank = mel_filterbank(w.sample_rate, SPECTROGRAM_WINDOW, MEL_BANDS)
    out = np.empty((FRAMES_PER_CLIP, dim), dtype=np.float32)
    for i, segment in enumerate(slice_frames(w)):
        mags = stft_magnitudes(segment.samples, SPECTROGRAM_WINDOW, SPECTROGRAM_HOP)
        band_energy = np.log10(bank @ (mags**2) + _LOG_EPS)
        features = np.concatenate([band_energy.mean(axis=1), band_energy.std(axis=1)])
        reps = int(np.ceil(dim / features.size))
        out[i] = np.tile(features, reps)[:dim].astype(np.float32)
    return out
