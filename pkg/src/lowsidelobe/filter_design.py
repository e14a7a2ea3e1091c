"""Convolution matrices, matched and minimum-ISL filters, and sidelobe metrics.

The filter output for transmit samples ``s`` and filter taps ``W`` is
``y = S @ W`` where ``S`` is the ``(N+L-1, L)`` convolution matrix of ``s``.
The compressed peak is pinned to the centre row ``(N+L-2) // 2``; the
mainlobe is the odd-width block of rows around it and every other row counts
as sidelobe.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from ._validation import check_count, check_odd_width, check_signal
from .exceptions import InvalidSizeError, SingularSystemError, UndefinedRatioError

MAX_CONDITION = 1e12
PROVENANCES = ("matched", "min_isl", "rls", "external")


def _samples(w):
    return check_signal(getattr(w, "samples", w), "waveform")


def _taps(W):
    return check_signal(getattr(W, "weights", W), "weights")


@dataclass(frozen=True)
class ConvolutionMatrix:
    """Transmit convolution matrix ``S`` with its mainlobe row mask.

    Build with :func:`build_convolution_matrix`; ``entries`` is read-only.
    """

    entries: np.ndarray
    waveform: np.ndarray
    mainlobe_rows: np.ndarray

    @property
    def n_waveform(self):
        return self.waveform.size

    @property
    def n_filter(self):
        return self.entries.shape[1]

    @property
    def n_out(self):
        return self.entries.shape[0]

    @property
    def center_row(self):
        return (self.n_out - 1) // 2

    @property
    def peak_vector(self):
        """Zero-padded, centre-aligned matched vector ``s~`` (peak = ``s~^H W``)."""
        return self.entries[self.center_row].conj()

    @property
    def sidelobe_rows(self):
        mask = np.ones(self.n_out, dtype=bool)
        mask[self.mainlobe_rows] = False
        return np.flatnonzero(mask)

    @property
    def sidelobe_matrix(self):
        """``S_m``: ``S`` with the mainlobe rows deleted."""
        return self.entries[self.sidelobe_rows]

    @property
    def energy(self):
        return float(np.vdot(self.waveform, self.waveform).real)


@dataclass(frozen=True)
class FilterWeights:
    """Filter taps plus how they were obtained."""

    weights: np.ndarray
    provenance: str = "external"
    mainlobe_constraint: complex = None

    def __post_init__(self):
        object.__setattr__(self, "weights", check_signal(self.weights, "weights"))
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True)
class CompressionMetrics:
    isl_db: float
    psl_db: float
    snr_loss_db: float
    mainlobe_width_samples: int

    def to_dict(self):
        def enc(v):
            if v is None or np.isnan(v):
                return None
            return "-inf" if v == -np.inf else float(v)

        return {
            "isl_db": enc(self.isl_db),
            "psl_db": enc(self.psl_db),
            "snr_loss_db": enc(self.snr_loss_db),
            "mainlobe_width_samples": int(self.mainlobe_width_samples),
        }


def mainlobe_rows(n_out, mainlobe_width):
    """Row indices of the mainlobe, centred on row ``(n_out - 1) // 2``."""
    n_out = check_count(n_out, "n_out")
    width = check_odd_width(mainlobe_width, n_out)
    center = (n_out - 1) // 2
    return np.arange(center - width // 2, center + width // 2 + 1)


def build_convolution_matrix(waveform, filter_length, mainlobe_width=1):
    """Return the ``(N+L-1) x L`` convolution matrix of ``waveform``.

    Column ``c`` holds the waveform in rows ``c .. c+N-1``.
    """
    s = _samples(waveform)
    L = check_count(filter_length, "filter_length")
    entries = linalg.convolution_matrix(s, L, mode="full")
    entries.flags.writeable = False
    s = s.copy()
    s.flags.writeable = False
    rows = mainlobe_rows(entries.shape[0], mainlobe_width)
    rows.flags.writeable = False
    return ConvolutionMatrix(entries, s, rows)


def _cholesky(A, what):
    try:
        factor = linalg.cho_factor(A, lower=False, check_finite=False)
    except np.linalg.LinAlgError:
        raise SingularSystemError(f"{what} is not positive definite", np.linalg.cond(A)) from None
    anorm = np.linalg.norm(A, 1)
    pocon = lapack.zpocon if np.iscomplexobj(A) else lapack.dpocon
    rcond, info = pocon(factor[0], anorm, uplo="U")
    if info != 0 or rcond * MAX_CONDITION < 1:
        cond = np.inf if rcond == 0 else 1.0 / rcond
        raise SingularSystemError(f"{what} is numerically singular", cond)
    return factor


def solve_min_isl(S, alpha=None):
    """Minimum integrated-sidelobe mismatched filter.

    Minimizes ``||S_m W||^2`` subject to the centre-row response
    ``s~^H W == alpha``::

        W = alpha * Q^-1 s~ / (s~^H Q^-1 s~),   Q = S_m^H S_m

    Parameters
    ----------
    S : ConvolutionMatrix
    alpha : complex, optional
        Peak constraint; defaults to the waveform energy (the matched-filter
        peak).

    Raises
    ------
    SingularSystemError
        If ``Q`` is not positive definite or its estimated condition number
        exceeds ``1e12``.
    """
    alpha = S.energy if alpha is None else complex(alpha)
    s_tilde = S.peak_vector
    Sm = S.sidelobe_matrix
    if Sm.shape[0] == 0:
        # No sidelobe rows: every filter meeting the constraint has zero ISL.
        x = s_tilde
    else:
        factor = _cholesky(Sm.conj().T @ Sm, "S_m^H S_m")
        x = linalg.cho_solve(factor, s_tilde, check_finite=False)
    W = alpha * x / np.vdot(s_tilde, x)
    return FilterWeights(W, "min_isl", alpha)


def matched_filter(waveform, filter_length=None):
    """Time-reversed conjugate of the waveform, centre-padded to ``filter_length``.

    Padding puts ``(L - N) // 2`` zeros in front so the peak lands on the
    centre output row, matching :attr:`ConvolutionMatrix.peak_vector`.
    """
    s = _samples(waveform)
    L = s.size if filter_length is None else check_count(filter_length, "filter_length")
    if L < s.size:
        raise InvalidSizeError(f"filter_length {L} is shorter than the waveform ({s.size})")
    W = np.zeros(L, dtype=complex)
    offset = (L - s.size) // 2
    W[offset:offset + s.size] = s[::-1].conj()
    return FilterWeights(W, "matched", np.vdot(s, s))


def apply_filter(W, y_in):
    """Full linear convolution of ``y_in`` with the filter taps."""
    return np.convolve(check_signal(y_in, "y_in"), _taps(W))


def peak_response(W, S):
    return complex(S.entries[S.center_row] @ _taps(W))


def isl_energy(W, S):
    """Raw sidelobe energy ``||S_m W||^2`` (unnormalized)."""
    w = _taps(W)
    if w.size != S.n_filter:
        raise InvalidSizeError(f"filter has {w.size} taps, matrix expects {S.n_filter}")
    r = S.sidelobe_matrix @ w
    return float(np.vdot(r, r).real)


def isl(W, S):
    """Integrated sidelobe level in dB relative to the centre-row peak power.

    Returns ``-inf`` when there is no sidelobe energy.
    """
    energy = isl_energy(W, S)
    peak = abs(peak_response(W, S)) ** 2
    if peak == 0:
        raise UndefinedRatioError("mainlobe response is zero")
    if energy == 0:
        return -np.inf
    return 10 * np.log10(energy / peak)


def psl(response, mainlobe):
    """Peak sidelobe level in dB: largest sidelobe over largest mainlobe sample."""
    mag = np.abs(check_signal(response, "response"))
    mask = np.zeros(mag.size, dtype=bool)
    mask[np.asarray(mainlobe, dtype=int)] = True
    if not mask.any():
        raise ValueError("mainlobe index set is empty")
    if mask.all():
        raise UndefinedRatioError("no sidelobe samples outside the mainlobe")
    main = mag[mask].max()
    if main == 0:
        raise UndefinedRatioError("mainlobe response is zero")
    side = mag[~mask].max()
    return -np.inf if side == 0 else 20 * np.log10(side / main)


def snr_loss(w_t, w_r):
    """Normalized two-way SNR loss (dB) of transmit/receive amplitude weights.

    ``10 log10((sum w_t w_r)^2 / (N sum (w_t w_r)^2))``; 0 dB for uniform
    weighting and negative otherwise.
    """
    wt = check_signal(w_t, "w_t", dtype=float)
    wr = check_signal(w_r, "w_r", dtype=float)
    if wt.size != wr.size:
        raise InvalidSizeError("w_t and w_r must have equal length")
    p = wt * wr
    denom = wt.size * np.sum(p * p)
    if denom == 0:
        raise UndefinedRatioError("all weight products are zero")
    return 10 * np.log10(np.sum(p) ** 2 / denom)


def receive_profile(W, S):
    """Filter magnitudes on the ``N`` taps that meet the pulse at the peak row."""
    w = _taps(W)
    N = S.n_waveform
    cols = S.center_row - np.arange(N)
    valid = (cols >= 0) & (cols < w.size)
    profile = np.zeros(N)
    profile[valid] = np.abs(w[cols[valid]])
    return profile


def compression_metrics(W, S):
    """ISL, PSL and SNR loss of filter ``W`` against the waveform in ``S``."""
    response = S.entries @ _taps(W)
    # PSL is undefined (reported as NaN) when the mainlobe covers every row.
    psl_db = psl(response, S.mainlobe_rows) if S.sidelobe_rows.size else np.nan
    return CompressionMetrics(
        isl_db=isl(W, S),
        psl_db=psl_db,
        snr_loss_db=snr_loss(np.abs(S.waveform), receive_profile(W, S)),
        mainlobe_width_samples=len(S.mainlobe_rows),
    )
