"""Two-layer time scattering and log-frequency scattering.

The transform cascades wavelet-modulus stages and closes each path with a
Gaussian low-pass at scale t, sampled every t/2 samples:

  order 0:  x * phi
  order 1:  |x * psi_l1| * phi               for every first-bank wavelet
  order 2:  ||x * psi_l1| * psi_l2| * phi    for admissible (l1, l2) pairs

A second-layer path is admissible when the l2 center frequency lies strictly
below the l1 filter's bandwidth; the envelope |x * psi_l1| carries no energy
above that bandwidth, so higher l2 paths are omitted rather than zero-filled.

Frequency scattering additionally runs a q=1 wavelet modulus along the
log-frequency axis of the order-1 coefficients (geometric-region bins only,
which are the uniformly log-spaced ones). Per protocol those outputs are not
low-pass averaged along the axis; the classifier supplies the invariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import fft as sfft

from .audio_io import Waveform, fix_length, pad_or_crop_center
from .errors import (AxisTooShortError, InvalidSpecError, LengthMismatchError,
                     SampleRateError)
from .filterbank import FilterBank, cached_bank

SAMPLE_RATE_HZ = 16000


def next_pow2(n: int) -> int:
    return 1 << max(int(n) - 1, 0).bit_length()


@dataclass(frozen=True)
class ScatteringConfig:
    """Parameters of the two-layer decomposition.

    q1/q2 are wavelets per octave of the first/second bank, t the averaging
    scale in samples, n the fixed signal length. f_wavelet_len is the
    averaging-scale analogue (in log-frequency bins) of the bank used for
    frequency scattering. log_compress applies ln(s + log_eps) to every
    coefficient before pooling.
    """

    q1: int = 5
    q2: int = 1
    t: int = 16384
    n: int = 51000
    freq_scattering: bool = False
    f_wavelet_len: int = 32
    log_compress: bool = False
    log_eps: float = 1e-7

    @property
    def n_fft(self) -> int:
        return next_pow2(self.n)

    @property
    def hop(self) -> int:
        return self.t // 2

    def validate(self) -> None:
        if self.n < 1:
            raise InvalidSpecError("n must be positive")
        if self.t > self.n_fft:
            raise InvalidSpecError(f"t={self.t} exceeds next_pow2(n)={self.n_fft}")
        if self.t < 2:
            raise InvalidSpecError("t must be at least 2")
        if self.log_eps <= 0:
            raise InvalidSpecError("log_eps must be positive")
        if self.freq_scattering and self.f_wavelet_len < 2:
            raise InvalidSpecError("f_wavelet_len must be at least 2")


@dataclass(frozen=True)
class ScatteringPath:
    """Time-scattering path: order 0 has no indices, order 1 carries its
    first-bank filter index, order 2 both indices."""

    order: int
    lambda1_index: int | None = None
    lambda2_index: int | None = None


@dataclass(frozen=True)
class FrequencyScatteringPath:
    """One frequency-scattering output: wavelet_index along the log-frequency
    axis, lambda1_bin the position on that axis (geometric bins, ordered by
    ascending first-bank filter index, i.e. descending center frequency)."""

    wavelet_index: int
    lambda1_bin: int


@dataclass
class ScatteringFeatures:
    """Per-path frame sequences plus the pooled utterance vector.

    paths_order fixes the canonical flattening: order 0, order 1 by ascending
    lambda1_index, order 2 lexicographic, then frequency-scattering paths.
    Every path holds the same number of frames (hop t/2).
    """

    frames: dict
    paths_order: tuple
    utterance_vector: np.ndarray = field(default=None)

    @property
    def n_frames(self) -> int:
        return len(self.frames[self.paths_order[0]])

    def frame_matrix(self) -> np.ndarray:
        return np.stack([self.frames[p] for p in self.paths_order])


_FFT_WORKERS = 2


def wavelet_modulus(x: np.ndarray, bank: FilterBank) -> np.ndarray:
    """|x * psi| for every filter, computed by frequency-domain products
    with the analytic responses. Returns an (n_filters, n_fft) array."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != bank.spec.n_fft:
        raise LengthMismatchError(
            f"signal length {x.shape} does not match bank n_fft={bank.spec.n_fft}")
    spectrum = sfft.fft(x)
    return np.abs(sfft.ifft(spectrum[None, :] * bank.responses, axis=1,
                            workers=_FFT_WORKERS))


def _layer2_blocks(u1: np.ndarray, bank2: FilterBank, bank1: FilterBank):
    """Yield (lambda1_index, admissible lambda2 indices, |u1 * psi_l2| rows)."""
    if bank2.spec.n_fft != bank1.spec.n_fft:
        raise InvalidSpecError("bank2 must share the first bank's n_fft")
    if u1.shape != (len(bank1.filters), bank1.spec.n_fft):
        raise LengthMismatchError(
            f"u1 shape {u1.shape} does not match bank1 layout")
    centers2 = bank2.center_freqs
    responses2 = bank2.responses
    for i1, f1 in enumerate(bank1.filters):
        admissible = np.flatnonzero(centers2 < f1.bandwidth)
        if admissible.size == 0:
            continue
        spectrum = sfft.fft(u1[i1])
        block = np.abs(sfft.ifft(spectrum[None, :] * responses2[admissible], axis=1,
                                 workers=_FFT_WORKERS))
        yield i1, admissible, block


def scatter_layer2(u1: np.ndarray, bank2: FilterBank,
                   bank1: FilterBank) -> dict[tuple[int, int], np.ndarray]:
    """Second wavelet-modulus layer over the first-layer envelopes.

    Returns {(lambda1_index, lambda2_index): sequence} for admissible pairs
    only, in lexicographic order.
    """
    out: dict[tuple[int, int], np.ndarray] = {}
    for i1, admissible, block in _layer2_blocks(u1, bank2, bank1):
        for row, i2 in enumerate(admissible):
            out[(i1, int(i2))] = block[row]
    return out


def lowpass_average(u: np.ndarray, lowpass: np.ndarray, hop: int) -> np.ndarray:
    """Convolve path sequences with phi (circularly, in frequency) and sample
    every `hop` samples. Tiny negative FFT residue is clamped so averaged
    moduli stay non-negative. Accepts a single sequence or a matrix of them.
    """
    u = np.asarray(u, dtype=np.float64)
    single = u.ndim == 1
    if single:
        u = u[None, :]
    n_fft = lowpass.shape[0]
    if u.shape[1] != n_fft:
        raise LengthMismatchError(
            f"sequence length {u.shape[1]} does not match lowpass length {n_fft}")
    if hop < 1 or n_fft % hop != 0:
        raise ValueError(f"hop={hop} must divide n_fft={n_fft}")
    spectra = sfft.rfft(u, axis=1, workers=_FFT_WORKERS) * lowpass[: n_fft // 2 + 1]
    # Decimating (u*phi) by hop aliases its spectrum: fold the n_fft bins
    # onto n_frames bins and invert at the short length. Exact, and far
    # cheaper than a full-length inverse FFT per path.
    n_frames = n_fft // hop
    if n_frames >= 2:
        full = np.concatenate([spectra, np.conj(spectra[:, -2:0:-1])], axis=1)
        folded = full.reshape(u.shape[0], hop, n_frames).sum(axis=1)
        smoothed = np.real(sfft.ifft(folded, axis=1, workers=_FFT_WORKERS)) / hop
    else:
        smoothed = sfft.irfft(spectra, n=n_fft, axis=1)[:, ::hop]
    frames = np.maximum(smoothed, 0.0)
    return frames[0] if single else frames


def _pool(frames: dict, paths_order: tuple) -> np.ndarray:
    return np.array([float(np.mean(frames[p])) for p in paths_order])


def pool_utterance(features: ScatteringFeatures) -> np.ndarray:
    """Per-path mean over time frames, concatenated in paths_order."""
    return _pool(features.frames, features.paths_order)


def time_scattering(w: Waveform, cfg: ScatteringConfig) -> ScatteringFeatures:
    """Order-0/1/2 scattering frames and pooled utterance vector.

    The waveform is forced to cfg.n samples (center crop / symmetric pad),
    then symmetrically zero-padded to n_fft = next_pow2(n) for circular FFT
    filtering. Expects 16 kHz input.
    """
    if w.sample_rate_hz != SAMPLE_RATE_HZ:
        raise SampleRateError(
            f"expected {SAMPLE_RATE_HZ} Hz input, got {w.sample_rate_hz}")
    cfg.validate()
    n_fft = cfg.n_fft
    x = pad_or_crop_center(fix_length(w, cfg.n).samples, n_fft)
    bank1 = cached_bank(cfg.q1, cfg.t, n_fft)
    bank2 = cached_bank(cfg.q2, cfg.t, n_fft)

    u1 = wavelet_modulus(x, bank1)

    paths: list = [ScatteringPath(0)]
    rows = [lowpass_average(x, bank1.lowpass, cfg.hop)]
    s1 = lowpass_average(u1, bank1.lowpass, cfg.hop)
    for i1 in range(len(bank1.filters)):
        paths.append(ScatteringPath(1, i1))
        rows.append(s1[i1])
    for i1, admissible, block in _layer2_blocks(u1, bank2, bank1):
        s2 = lowpass_average(block, bank1.lowpass, cfg.hop)
        for row, i2 in enumerate(admissible):
            paths.append(ScatteringPath(2, i1, int(i2)))
            rows.append(s2[row])

    frames_mat = np.stack(rows)
    if cfg.log_compress:
        frames_mat = np.log(frames_mat + cfg.log_eps)
    frames = {p: frames_mat[i] for i, p in enumerate(paths)}
    features = ScatteringFeatures(frames, tuple(paths))
    features.utterance_vector = _pool(frames, features.paths_order)
    return features


def frequency_scattering(s_time: ScatteringFeatures,
                         cfg: ScatteringConfig) -> ScatteringFeatures:
    """Append wavelet-modulus coefficients computed along the log-frequency
    axis of the order-1 frames.

    For each time frame, the order-1 coefficients on geometric-region bins
    form a 1-D signal over log-lambda; a q=1 Morlet bank with averaging scale
    cfg.f_wavelet_len decomposes it. The moduli are kept unaveraged and
    cascaded after the time-scattering paths.
    """
    if not cfg.freq_scattering:
        raise InvalidSpecError("cfg.freq_scattering is off")
    cfg.validate()
    bank1 = cached_bank(cfg.q1, cfg.t, cfg.n_fft)
    geo = bank1.geometric_indices()
    if len(geo) < 2:
        raise AxisTooShortError(
            f"log-frequency axis has {len(geo)} bins, need at least 2")
    if cfg.f_wavelet_len > len(bank1.filters):
        raise InvalidSpecError(
            f"f_wavelet_len={cfg.f_wavelet_len} exceeds the layer-1 filter "
            f"count {len(bank1.filters)}")

    n_bins = len(geo)
    axis = np.stack([s_time.frames[ScatteringPath(1, i)] for i in geo])  # (bins, frames)
    n_fft_fr = next_pow2(max(n_bins, cfg.f_wavelet_len))
    bank_fr = cached_bank(1, cfg.f_wavelet_len, n_fft_fr)

    # Edge-replicated padding: a constant axis signal stays constant, so the
    # zero-mean wavelets return exactly zero on it.
    pad_left = (n_fft_fr - n_bins) // 2
    padded = np.pad(axis.T, ((0, 0), (pad_left, n_fft_fr - n_bins - pad_left)),
                    mode="edge")
    spectra = sfft.fft(padded, axis=1)
    moduli = np.abs(sfft.ifft(spectra[None, :, :] * bank_fr.responses[:, None, :],
                              axis=2))  # (wavelets, frames, n_fft_fr)
    moduli = moduli[:, :, pad_left:pad_left + n_bins]

    frames = dict(s_time.frames)
    paths = list(s_time.paths_order)
    for mu in range(len(bank_fr.filters)):
        for b in range(n_bins):
            p = FrequencyScatteringPath(mu, b)
            frames[p] = moduli[mu, :, b]
            paths.append(p)
    out = ScatteringFeatures(frames, tuple(paths))
    out.utterance_vector = _pool(frames, out.paths_order)
    return out


def make_config(**kwargs) -> ScatteringConfig:
    """ScatteringConfig with defaults overridden by keyword arguments."""
    return replace(ScatteringConfig(), **kwargs)
