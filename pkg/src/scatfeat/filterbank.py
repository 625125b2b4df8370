"""Constant-Q Morlet filter banks defined in the frequency domain.

A bank holds analytic band-pass wavelets psi and one Gaussian low-pass phi,
all sampled on the n_fft DFT grid in normalized frequency (cycles/sample).
Center frequencies follow two regimes:

  * geometric: lambda_k = lambda_max * 2^(-k/q) while lambda_k >= q/t,
    with bandwidth proportional to lambda/q so that neighboring filters
    cross at their half-power points;
  * linear: below the geometric bottom, centers continue downward in exact
    steps of 1/t with a fixed bandwidth proportional to 1/t, until the 1/t
    line is passed. Anchoring the linear grid at the last geometric center
    keeps every gap equal to 1/t, which is what keeps the Littlewood-Paley
    sum free of junction spikes.

After construction all band-pass responses are rescaled by one global
factor so that the Littlewood-Paley sum peaks at exactly 1, making the
wavelet transform non-expansive.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidSpecError

_LN2 = float(np.log(2.0))

# Frequency-domain std of the low-pass, in units of 1/t. The equivalent
# time-domain std is t/(2*pi*0.25) ~ 0.64*t.
_SIGMA_PHI_FACTOR = 0.25
# Frequency-domain std of linear-region wavelets, in units of 1/t.
_SIGMA_LIN_FACTOR = 0.6
# Drop a trailing linear filter whose center would sit below this many 1/t;
# such a wavelet degenerates into a clipped near-DC bump.
_MIN_CENTER_FACTOR = 0.25

_PERIODIZATION_EPS = 1e-7


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class FilterBankSpec:
    """Parameters of one bank: q wavelets per octave, averaging scale t
    (samples, power of two) and DFT length n_fft (power of two, >= t)."""

    q: int
    t: int
    n_fft: int

    def validate(self) -> None:
        if self.q < 1:
            raise InvalidSpecError(f"q must be >= 1, got {self.q}")
        if not _is_pow2(self.t):
            raise InvalidSpecError(f"t must be a power of two, got {self.t}")
        if not _is_pow2(self.n_fft):
            raise InvalidSpecError(f"n_fft must be a power of two, got {self.n_fft}")
        if self.t > self.n_fft:
            raise InvalidSpecError(f"t={self.t} exceeds n_fft={self.n_fft}")


@dataclass(frozen=True)
class BandpassFilter:
    """One analytic wavelet: nominal center (cycles/sample), nominal
    bandwidth (lambda/q in the geometric region, 1/t in the linear one)
    and its non-negative gain over all n_fft DFT bins."""

    center_freq_normalized: float
    bandwidth: float
    response: np.ndarray
    region: str  # "geo" | "lin"


@dataclass(frozen=True)
class FilterBank:
    filters: tuple[BandpassFilter, ...]
    lowpass: np.ndarray
    spec: FilterBankSpec

    @property
    def center_freqs(self) -> np.ndarray:
        return np.array([f.center_freq_normalized for f in self.filters])

    @property
    def bandwidths(self) -> np.ndarray:
        return np.array([f.bandwidth for f in self.filters])

    @property
    def responses(self) -> np.ndarray:
        """All band-pass gains stacked as an (n_filters, n_fft) matrix."""
        if not self.filters:
            return np.zeros((0, self.spec.n_fft))
        return np.stack([f.response for f in self.filters])

    def geometric_indices(self) -> list[int]:
        return [i for i, f in enumerate(self.filters) if f.region == "geo"]


def _periodized_gaussian(n_fft: int, center: float, sigma: float) -> np.ndarray:
    """exp(-(w-center)^2 / 2 sigma^2) summed over enough unit periods that
    the wrap-around error stays below _PERIODIZATION_EPS."""
    n_periods = int(np.ceil(np.sqrt(-2.0 * sigma**2 * np.log(_PERIODIZATION_EPS)))) + 1
    freqs = np.fft.fftfreq(n_fft)
    out = np.zeros(n_fft)
    for p in range(-n_periods, n_periods + 1):
        out += np.exp(-((freqs - center + p) ** 2) / (2.0 * sigma**2))
    return out


def morlet_response(n_fft: int, center: float, sigma: float) -> np.ndarray:
    """Frequency response of an analytic Morlet wavelet.

    A Gaussian bump at +center minus a DC-centered Gaussian scaled so the
    response at bin 0 is exactly zero (zero-mean wavelet); the residual
    negative lobe on the negative-frequency side is clipped to keep the
    response non-negative and one-sided.
    """
    bump = _periodized_gaussian(n_fft, center, sigma)
    base = _periodized_gaussian(n_fft, 0.0, sigma)
    kappa = bump[0] / base[0]
    return np.maximum(bump - kappa * base, 0.0)


def gaussian_lowpass(n_fft: int, sigma: float) -> np.ndarray:
    """Gaussian low-pass with unit gain at DC."""
    out = _periodized_gaussian(n_fft, 0.0, sigma)
    return out / out[0]


def sigma_for_q(q: int) -> float:
    """Bandwidth-to-center ratio making adjacent geometric filters cross at
    their half-power points: sigma = c_q * lambda."""
    ratio = 2.0 ** (-1.0 / q)
    return ((1.0 - ratio) / (1.0 + ratio)) / np.sqrt(_LN2)


def max_center_freq(q: int) -> float:
    """Highest center frequency: the top filter's half-power point lands on
    the Nyquist bin, i.e. lambda_max * (1 + c_q*sqrt(ln 2)) = 1/2."""
    return 0.5 / (1.0 + sigma_for_q(q) * np.sqrt(_LN2))


def build_morlet_bank(spec: FilterBankSpec) -> FilterBank:
    """Construct the Morlet bank described in the module docstring.

    Raises InvalidSpecError when the spec is inconsistent or t is too small
    relative to q for any geometric filter to exist.
    """
    spec.validate()
    q, t, n_fft = spec.q, spec.t, spec.n_fft
    c_q = sigma_for_q(q)
    ratio = 2.0 ** (-1.0 / q)

    lam_max = max_center_freq(q)
    cutoff = q / t
    if lam_max < cutoff - 1e-12:
        raise InvalidSpecError(
            f"geometric region is empty: lambda_max={lam_max:.4g} < q/t={cutoff:.4g}")

    centers: list[float] = []
    regions: list[str] = []
    lam = lam_max
    while lam >= cutoff - 1e-12:
        centers.append(lam)
        regions.append("geo")
        lam *= ratio

    # linear tail anchored at the geometric bottom, exact 1/t spacing
    lam = centers[-1] - 1.0 / t
    while lam > _MIN_CENTER_FACTOR / t:
        centers.append(lam)
        regions.append("lin")
        lam -= 1.0 / t

    sigma_lin = _SIGMA_LIN_FACTOR / t
    filters = []
    for center, region in zip(centers, regions):
        sigma = c_q * center if region == "geo" else sigma_lin
        bandwidth = center / q if region == "geo" else 1.0 / t
        resp = morlet_response(n_fft, center, sigma)
        filters.append(BandpassFilter(center, bandwidth, resp, region))

    lowpass = gaussian_lowpass(n_fft, _SIGMA_PHI_FACTOR / t)

    # Global rescale: largest s with max over bins of
    # |phi|^2 + s * psi_sum <= 1. phi keeps unit DC gain.
    psi_sq = np.stack([f.response for f in filters]) ** 2
    mirrored = psi_sq[:, (-np.arange(n_fft)) % n_fft]
    psi_sum = 0.5 * (psi_sq.sum(axis=0) + mirrored.sum(axis=0))
    head = lowpass**2
    mask = psi_sum > 1e-12
    scale = float(np.sqrt(np.min((1.0 - head[mask]) / psi_sum[mask])))
    filters = [
        BandpassFilter(f.center_freq_normalized, f.bandwidth,
                       f.response * scale, f.region)
        for f in filters
    ]
    return FilterBank(tuple(filters), lowpass, spec)


@lru_cache(maxsize=32)
def cached_bank(q: int, t: int, n_fft: int) -> FilterBank:
    """Memoized build_morlet_bank; banks are immutable and shareable."""
    return build_morlet_bank(FilterBankSpec(q, t, n_fft))


def littlewood_paley_sum(bank: FilterBank) -> np.ndarray:
    """Per-bin sum |phi(w)|^2 + 1/2 sum_lambda (|psi(w)|^2 + |psi(-w)|^2)."""
    n_fft = bank.spec.n_fft
    total = bank.lowpass**2
    if bank.filters:
        sq = bank.responses**2
        total = total + 0.5 * (sq.sum(axis=0) + sq[:, (-np.arange(n_fft)) % n_fft].sum(axis=0))
    return total


def littlewood_paley_bounds(bank: FilterBank) -> dict:
    """Max of the Littlewood-Paley sum over all DFT bins, and its min over
    the covered band [1/t, lambda_max] (all bins when the bank is empty)."""
    lp = littlewood_paley_sum(bank)
    freqs = np.abs(np.fft.fftfreq(bank.spec.n_fft))
    if bank.filters:
        lam_top = bank.filters[0].center_freq_normalized
        band = (freqs >= 1.0 / bank.spec.t - 1e-12) & (freqs <= lam_top + 1e-12)
    else:
        band = np.ones_like(lp, dtype=bool)
    return {"min": float(lp[band].min()), "max": float(lp.max())}


def bank_to_csv_rows(bank: FilterBank, sample_rate_hz: int) -> list[str]:
    """CSV dump rows: index,center_freq_hz,bandwidth_hz,region(geo|lin)."""
    rows = ["index,center_freq_hz,bandwidth_hz,region"]
    for i, f in enumerate(bank.filters):
        rows.append(f"{i},{f.center_freq_normalized * sample_rate_hz:.6f},"
                    f"{f.bandwidth * sample_rate_hz:.6f},{f.region}")
    return rows
