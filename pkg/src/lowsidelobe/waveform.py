"""Transmit waveforms: LFM chirps, Tukey tapers and Bezier-shaped NLFM pulses."""

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.signal import windows

from ._validation import check_count, check_positive, check_signal
from .exceptions import AliasingError, DomainError, InvalidSizeError

N_CONTROL = 10


@dataclass(frozen=True)
class Waveform:
    """Complex baseband pulse plus the parameters that produced it.

    Attributes
    ----------
    samples : ndarray of complex, shape (N,)
    sample_rate : float
        Hz.
    bandwidth : float
        Swept bandwidth in Hz.
    pulse_width : float
        Seconds; ``round(pulse_width * sample_rate) == N``.
    taper : ndarray of float, shape (N,)
        Amplitude weighting applied on transmit (all ones for NLFM).
    taper_alpha : float
        Tukey parameter of ``taper`` (0 for an untapered pulse).
    """

    samples: np.ndarray
    sample_rate: float
    bandwidth: float
    pulse_width: float
    taper: np.ndarray = field(default=None)
    taper_alpha: float = 0.0

    def __post_init__(self):
        samples = check_signal(self.samples, "samples", min_length=2)
        taper = np.ones(samples.size) if self.taper is None else check_signal(self.taper, "taper", dtype=float)
        if taper.size != samples.size:
            raise InvalidSizeError("taper and samples differ in length")
        if np.any(taper < 0) or np.any(taper > 1):
            raise ValueError("taper values must lie in [0, 1]")
        if np.max(np.abs(samples)) > 1 + 1e-12:
            raise ValueError("waveform samples must satisfy |s| <= 1")
        if round(self.pulse_width * self.sample_rate) != samples.size:
            raise InvalidSizeError("pulse_width * sample_rate does not match the sample count")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "taper", taper)

    def __len__(self):
        return self.samples.size

    @property
    def energy(self):
        return float(np.vdot(self.samples, self.samples).real)


@dataclass(frozen=True)
class FrequencyFunction:
    """Instantaneous frequency (Hz) per output sample."""

    values: np.ndarray
    bandwidth: float

    def __post_init__(self):
        object.__setattr__(self, "values", check_signal(self.values, "values", dtype=float))

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class BezierGenome:
    """The ten free Bezier control weights (Hz) of one NLFM half-sweep.

    The curve's first and last control points are fixed at ``0`` and
    ``bandwidth / 2`` and are not stored here.
    """

    control_weights: np.ndarray
    bandwidth: float

    def __post_init__(self):
        w = check_signal(self.control_weights, "control_weights", dtype=float)
        if w.size != N_CONTROL:
            raise InvalidSizeError(f"a genome has exactly {N_CONTROL} weights, got {w.size}")
        if np.any(w < 0) or np.any(w > self.bandwidth / 2):
            raise ValueError("control weights must lie in [0, bandwidth/2]")
        object.__setattr__(self, "control_weights", w)

    @property
    def control_points(self):
        """All twelve control points including the fixed endpoints."""
        return np.concatenate(([0.0], self.control_weights, [self.bandwidth / 2]))

    @classmethod
    def linear(cls, bandwidth):
        """Collinear control points: the Bezier curve is a straight LFM ramp."""
        i = np.arange(1, N_CONTROL + 1)
        return cls(i * (bandwidth / 2) / (N_CONTROL + 1), bandwidth)


def tukey_window(n, alpha):
    """Tapered-cosine window of length ``n`` with taper fraction ``alpha``.

    ``alpha=0`` is rectangular and ``alpha=1`` is a Hann window.
    """
    n = check_count(n, "n", minimum=2)
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    return windows.tukey(n, alpha, sym=True)


def generate_lfm(bandwidth, pulse_width, sample_rate, taper_alpha=0.0):
    """Tukey-tapered linear FM pulse sweeping ``-bandwidth/2 .. +bandwidth/2``.

    Parameters
    ----------
    bandwidth : float
        Swept bandwidth in Hz (0 gives a constant tone at baseband).
    pulse_width : float
        Pulse duration in seconds.
    sample_rate : float
        Complex sample rate in Hz; must be at least ``bandwidth``.
    taper_alpha : float
        Tukey parameter of the amplitude taper.

    Returns
    -------
    Waveform
    """
    bandwidth = check_positive(bandwidth, "bandwidth", strict=False)
    pulse_width = check_positive(pulse_width, "pulse_width")
    sample_rate = check_positive(sample_rate, "sample_rate")
    if sample_rate < bandwidth:
        raise AliasingError(f"sample_rate {sample_rate:g} Hz is below bandwidth {bandwidth:g} Hz")
    n = int(round(pulse_width * sample_rate))
    if n < 2:
        raise InvalidSizeError(f"pulse holds {n} samples; need at least 2")
    t = np.arange(n) / sample_rate
    taper = tukey_window(n, taper_alpha)
    samples = taper * np.exp(1j * np.pi * (bandwidth / pulse_width) * (t - pulse_width / 2) ** 2)
    return Waveform(samples, sample_rate, bandwidth, pulse_width, taper, float(taper_alpha))


def bernstein_basis(n, t):
    """Bernstein polynomials of order ``n`` at ``t``; shape ``t.shape + (n+1,)``."""
    t = np.asarray(t, dtype=float)[..., None]
    i = np.arange(n + 1)
    coeffs = np.array([comb(n, k) for k in i], dtype=float)
    return coeffs * (1.0 - t) ** (n - i) * t ** i


def bezier_eval(weights, t):
    """Evaluate a 1-D Bezier curve with control weights ``weights`` at ``t``.

    ``t`` may be a scalar or an array of values in ``[0, 1]``.
    """
    w = check_signal(weights, "weights", min_length=2, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t_arr)) or np.any(t_arr < 0) or np.any(t_arr > 1):
        raise DomainError("Bezier parameter t must lie in [0, 1]")
    value = bernstein_basis(w.size - 1, t_arr) @ w
    return float(value) if value.ndim == 0 else value


def build_nlfm_frequency(genome, n_samples):
    """Symmetric NLFM frequency function defined by a Bezier genome.

    The first half of the pulse follows the Bezier curve over the control
    points ``[0, w_1..w_10, bandwidth/2]`` shifted down by ``bandwidth/2``.
    Time is uniform over the half pulse, with ``t = 1`` at the pulse centre,
    so collinear weights reproduce an exact linear ramp. The second half is
    the first half reflected in both time and frequency, which gives
    ``values[k] == -values[n-1-k]``.
    """
    n_samples = check_count(n_samples, "n_samples", minimum=4)
    if n_samples % 2:
        raise InvalidSizeError(f"n_samples must be even for a mirrored sweep, got {n_samples}")
    half = n_samples // 2
    t = 2.0 * np.arange(half) / (n_samples - 1)
    first = bezier_eval(genome.control_points, t) - genome.bandwidth / 2
    return FrequencyFunction(np.concatenate((first, -first[::-1])), genome.bandwidth)


def synthesize_nlfm(freq, sample_rate):
    """Unit-modulus waveform whose phase integrates ``freq`` (left Riemann sum)."""
    sample_rate = check_positive(sample_rate, "sample_rate")
    phase = 2 * np.pi * np.cumsum(freq.values) / sample_rate
    n = len(freq)
    return Waveform(np.exp(1j * phase), sample_rate, freq.bandwidth, n / sample_rate, np.ones(n), 0.0)
