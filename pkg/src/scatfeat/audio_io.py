"""WAV loading, band-limited resampling and length normalization."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import CorruptHeaderError, UnsupportedEncodingError

_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE

# Anti-aliasing design: 85 dB Kaiser stopband (past the 60 dB target) with
# the stopband edge placed at the output Nyquist, not centered on it.
_STOPBAND_DB = 85.0
_TRANSITION_WIDTH = 0.1  # fraction of the narrower Nyquist band


@dataclass(frozen=True)
class Waveform:
    """Mono audio signal with a fixed sample rate.

    Samples are dimensionless amplitudes, nominally in [-1, 1], stored as
    float64. Instances are immutable values, safe to share across threads.
    """

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("waveform must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains NaN or Inf samples")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


def load_wav(path) -> Waveform:
    """Load a RIFF/WAVE file as a mono Waveform.

    Accepts PCM 16-bit and IEEE float 32-bit encodings; multi-channel audio
    is averaged down to mono. Integer PCM is scaled to [-1, 1) by dividing
    by 32768.

    Raises FileNotFoundError, CorruptHeaderError or UnsupportedEncodingError.
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeaderError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise CorruptHeaderError(f"{path}: fmt chunk truncated")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
            if fmt[0] == _WAVE_FORMAT_EXTENSIBLE:
                # true codec sits in the first two bytes of the SubFormat GUID
                if len(body) < 26:
                    raise CorruptHeaderError(f"{path}: extensible fmt truncated")
                (sub_code,) = struct.unpack_from("<H", body, 24)
                fmt = (sub_code,) + fmt[1:]
        elif chunk_id == b"data":
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise CorruptHeaderError(f"{path}: missing fmt or data chunk")

    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if n_channels < 1 or sample_rate <= 0:
        raise CorruptHeaderError(f"{path}: invalid channel count or rate")

    if audio_format == _WAVE_FORMAT_PCM and bits == 16:
        raw = np.frombuffer(payload, dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedEncodingError(
            f"{path}: format tag {audio_format} with {bits} bits "
            "(only PCM16 and float32 are supported)")

    if samples.size % n_channels != 0:
        samples = samples[: samples.size - samples.size % n_channels]
    if samples.size == 0:
        raise CorruptHeaderError(f"{path}: empty data chunk")
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    return Waveform(samples, int(sample_rate))


def resample(w: Waveform, target_hz: int) -> Waveform:
    """Resample with a Kaiser-windowed sinc anti-aliasing filter.

    Output length is round(len * target / source). When the target rate
    equals the source rate the input is returned unchanged.
    """
    if target_hz <= 0:
        raise ValueError("target_hz must be positive")
    if target_hz == w.sample_rate_hz:
        return w
    g = math.gcd(target_hz, w.sample_rate_hz)
    up, down = target_hz // g, w.sample_rate_hz // g
    max_rate = max(up, down)
    width = _TRANSITION_WIDTH / max_rate  # Nyquist units at the upsampled rate
    numtaps, beta = signal.kaiserord(_STOPBAND_DB, width)
    # resample_poly scales the supplied taps by `up` itself
    taps = signal.firwin(numtaps | 1, 1.0 / max_rate - width / 2.0,
                         window=("kaiser", beta))
    out = signal.resample_poly(w.samples, up, down, window=taps)
    n_out = int(math.floor(len(w) * target_hz / w.sample_rate_hz + 0.5))
    return Waveform(out[:n_out], target_hz)


def fix_length(w: Waveform, n_samples: int) -> Waveform:
    """Force a waveform to exactly n_samples.

    Longer signals are center-cropped; shorter ones are zero-padded
    symmetrically with the extra sample on the right when the padding is odd.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if len(w) == n_samples:
        return w
    return Waveform(pad_or_crop_center(w.samples, n_samples), w.sample_rate_hz)


def pad_or_crop_center(x: np.ndarray, n: int) -> np.ndarray:
    """Center-crop or symmetrically zero-pad a 1-D array to length n."""
    cur = x.shape[0]
    if cur == n:
        return x
    if cur > n:
        start = (cur - n) // 2
        return x[start:start + n]
    left = (n - cur) // 2
    return np.pad(x, (left, n - cur - left))
