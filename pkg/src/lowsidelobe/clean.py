"""CLEAN-style deconvolution of range profiles with strong scatterers.

Columns of the convolution matrix ``S`` index range cells, so a scene is a
length-``L`` vector of complex amplitudes ``a`` and the received profile is
``y = S a + n``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._validation import check_count, check_positive, check_signal
from .exceptions import InvalidSizeError, SingularSystemError
from .filter_design import MAX_CONDITION, _cholesky

STRONG_MARGIN_DB = 20.0


@dataclass(frozen=True)
class RangeScene:
    impulse_response: np.ndarray
    noise_power: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "impulse_response", check_signal(self.impulse_response, "impulse_response"))
        check_positive(self.noise_power, "noise_power", strict=False)

    @classmethod
    def from_cells(cls, n_cells, cells, noise_power=0.0, seed=0):
        """Build from ``{index, re, im}`` records (the scene JSON layout)."""
        n_cells = check_count(n_cells, "n_cells")
        a = np.zeros(n_cells, dtype=complex)
        for cell in cells:
            k = int(cell["index"])
            if not 0 <= k < n_cells:
                raise InvalidSizeError(f"cell index {k} outside 0..{n_cells - 1}")
            a[k] = complex(float(cell["re"]), float(cell["im"]))
        return cls(a, float(noise_power), int(seed))


@dataclass(frozen=True)
class DetectionResult:
    cell_index: int
    statistic: float
    threshold: float
    detected: bool
    amplitude_estimate: complex


@dataclass(frozen=True)
class StrongScattererSet:
    cells: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=int).reshape(-1)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if cells.size != amps.size:
            raise InvalidSizeError("cells and amplitudes differ in length")
        if np.unique(cells).size != cells.size:
            raise ValueError("strong-scatterer cells must be unique")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def empty(cls):
        return cls(np.zeros(0, dtype=int), np.zeros(0, dtype=complex))


def _profile(S, y):
    y = check_signal(y, "y")
    if y.size != S.n_out:
        raise InvalidSizeError(f"profile has {y.size} samples, S has {S.n_out} rows")
    return y


def _cell(S, k):
    k = int(k)
    if not 0 <= k < S.n_filter:
        raise IndexError(f"cell {k} outside 0..{S.n_filter - 1}")
    return k


def simulate_profile(S, scene):
    """``y = S a + n`` with circular Gaussian noise of variance ``noise_power``."""
    a = scene.impulse_response
    if a.size != S.n_filter:
        raise InvalidSizeError(f"scene has {a.size} cells, S addresses {S.n_filter}")
    y = S.entries @ a
    if scene.noise_power > 0:
        rng = np.random.default_rng(scene.seed)
        scale = np.sqrt(scene.noise_power / 2)
        y = y + scale * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))
    return y


def ls_deconvolve(S, y):
    """Least-squares scene estimate from the normal equations ``S^H S a = S^H y``."""
    y = _profile(S, y)
    A = S.entries
    factor = _cholesky(A.conj().T @ A, "S^H S")
    return linalg.cho_solve(factor, A.conj().T @ y, check_finite=False)


def _regularized_deconvolution(S, y, noise_power):
    # S^H (S S^H + s2 I)^-1 y, solved in the smaller L x L form.
    A = S.entries
    G = A.conj().T @ A + noise_power * np.eye(S.n_filter)
    return linalg.solve(G, A.conj().T @ y, assume_a="pos")


def detect(S, y, noise_power, threshold):
    """Per-cell detection statistic ``|d_k^H S^H (S S^H + s2 I)^-1 y|``.

    ``threshold`` may be a scalar or one value per cell.
    """
    y = _profile(S, y)
    noise_power = check_positive(noise_power, "noise_power")
    eta = np.broadcast_to(np.asarray(threshold, dtype=float), (S.n_filter,))
    if np.any(eta <= 0):
        raise ValueError("threshold must be > 0")
    v = _regularized_deconvolution(S, y, noise_power)
    stat = np.abs(v)
    return [
        DetectionResult(k, float(stat[k]), float(eta[k]), bool(stat[k] > eta[k]), complex(v[k]))
        for k in range(S.n_filter)
    ]


def false_alarm_threshold(S, noise_power, pfa):
    """Per-cell threshold giving false-alarm probability ``pfa`` under noise only.

    Under H0 the complex statistic is ``h_k^H n`` with ``h_k = (S S^H + s2 I)^-1 S e_k``,
    a circular Gaussian of variance ``s2 ||h_k||^2``; its modulus is Rayleigh,
    so ``eta_k = sqrt(-var_k ln pfa)``.
    """
    noise_power = check_positive(noise_power, "noise_power")
    if not 0 < pfa < 1:
        raise ValueError(f"pfa must lie in (0, 1), got {pfa}")
    A = S.entries
    R = A @ A.conj().T + noise_power * np.eye(S.n_out)
    H = linalg.solve(R, A, assume_a="pos")
    var = noise_power * np.sum(np.abs(H) ** 2, axis=0)
    return np.sqrt(-var * np.log(pfa))


def estimate_clean(S, y, strong, noise_power, k, normalize=True):
    """Amplitude at cell ``k`` with the strong scatterers' sidelobes nulled.

    Uses ``R = S B B^H S^H + s2 I`` with ``B`` the strong amplitudes placed
    on their cells. The estimate ``s_k^H R^-1 y`` is divided by
    ``s_k^H R^-1 s_k`` (``s_k`` = column ``k`` of ``S``) so that an isolated
    scatterer of amplitude ``A`` returns ``A``; ``normalize=False`` skips the
    division.
    """
    return estimate_clean_profile(S, y, strong, noise_power, normalize=normalize, cells=[_cell(S, k)])[0]


def estimate_clean_profile(S, y, strong, noise_power, normalize=True, cells=None):
    """:func:`estimate_clean` evaluated for several cells (all by default)."""
    y = _profile(S, y)
    noise_power = check_positive(noise_power, "noise_power")
    A = S.entries
    cells = np.arange(S.n_filter) if cells is None else np.asarray(cells, dtype=int)
    if strong.cells.size and (strong.cells.min() < 0 or strong.cells.max() >= S.n_filter):
        raise IndexError("strong-scatterer cell outside the scene")
    # Woodbury on R = s2 I + G G^H, G = S[:, strong] diag(b); only the few
    # strong columns enter the inner solve.
    G = A[:, strong.cells] * strong.amplitudes
    inner = noise_power * np.eye(G.shape[1]) + G.conj().T @ G
    if G.shape[1]:
        cond = 1.0 + np.linalg.norm(G, 2) ** 2 / noise_power
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise SingularSystemError("interference covariance R is numerically singular", cond)

    def r_inv(X):
        if not G.shape[1]:
            return X / noise_power
        return (X - G @ linalg.solve(inner, G.conj().T @ X, assume_a="pos")) / noise_power

    cols = A[:, cells]
    num = cols.conj().T @ r_inv(y)
    if not normalize:
        return num
    denom = np.einsum("ij,ij->j", cols.conj(), r_inv(cols)).real
    return num / denom


def matched_estimate(S, y, k, normalize=False):
    """Matched-filter output at cell ``k`` (divided by ``||s_k||^2`` if ``normalize``)."""
    y = _profile(S, y)
    col = S.entries[:, _cell(S, k)]
    m = np.vdot(col, y)
    return m / np.vdot(col, col).real if normalize else m


def select_strong(detections, margin_db=STRONG_MARGIN_DB):
    """Detected cells whose statistic is ``margin_db`` above the median statistic."""
    stat = np.array([d.statistic for d in detections])
    floor = np.median(stat) * 10 ** (margin_db / 20)
    return np.array([d.cell_index for d in detections if d.detected and d.statistic > floor], dtype=int)


def clean_pipeline(S, y, noise_power, threshold, margin_db=STRONG_MARGIN_DB):
    """Detect strong scatterers, fit their amplitudes, then re-estimate every cell.

    Returns
    -------
    cleaned : ndarray of complex, shape (L,)
    detections : list of DetectionResult
    strong : StrongScattererSet
    """
    y = _profile(S, y)
    detections = detect(S, y, noise_power, threshold)
    cells = select_strong(detections, margin_db)
    if cells.size:
        amps, *_ = linalg.lstsq(S.entries[:, cells], y)
        strong = StrongScattererSet(cells, amps)
    else:
        strong = StrongScattererSet.empty()
    cleaned = estimate_clean_profile(S, y, strong, noise_power)
    return cleaned, detections, strong
