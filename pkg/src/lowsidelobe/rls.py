"""RLS refinement of a mismatched filter towards a sidelobe-free response.

The rows of ``S`` are presented cyclically as regressors with the matching
sample of the desired response ``d`` as target. After every step the raw
sidelobe energy ``||S_m W||^2`` is recorded and the iterate with the lowest
value is kept.
"""

import io
from dataclasses import dataclass, replace

import numpy as np

from ._validation import check_count, check_odd_width, check_positive, check_signal
from .exceptions import DivergenceError, InvalidSizeError
from .filter_design import FilterWeights, mainlobe_rows

DEFAULT_FORGETTING = 0.998
DEFAULT_REGULARIZATION_SCALE = 1e2


@dataclass(frozen=True)
class DesiredResponse:
    values: np.ndarray
    mainlobe_width: int
    peak: complex


@dataclass(frozen=True)
class RlsState:
    """Exponentially weighted RLS state.

    ``inverse_correlation`` is ``P``, the inverse of the weighted regressor
    correlation ``sum lambda^k conj(u) u^T``.
    """

    weights: np.ndarray
    inverse_correlation: np.ndarray
    forgetting_factor: float = DEFAULT_FORGETTING
    regularization: float = 1.0
    iteration: int = 0

    @classmethod
    def initial(cls, weights, forgetting_factor=DEFAULT_FORGETTING, regularization=1.0):
        """Start from ``weights`` with ``P = I / regularization``."""
        w = check_signal(getattr(weights, "weights", weights), "weights")
        lam = float(forgetting_factor)
        if not 0 < lam <= 1:
            raise ValueError(f"forgetting factor must lie in (0, 1], got {lam}")
        delta = check_positive(regularization, "regularization")
        P = np.eye(w.size, dtype=complex) / delta
        return cls(w.copy(), P, lam, delta, 0)


@dataclass(frozen=True)
class IslTrace:
    """Sidelobe energy recorded at every iteration and the best iterate."""

    isl_raw: np.ndarray
    isl_db: np.ndarray
    best_iteration: int
    best_weights: FilterWeights

    def __len__(self):
        return self.isl_raw.size


def build_desired_response(n_out, mainlobe_width, peak, shape="triangular"):
    """Zero-sidelobe target: nonzero only on the centred mainlobe rows.

    ``shape="flat"`` puts ``peak`` on every mainlobe row; ``"triangular"``
    tapers linearly from ``peak`` at the centre, so a 3-sample mainlobe reads
    ``[peak/2, peak, peak/2]``.
    """
    n_out = check_count(n_out, "n_out")
    width = check_odd_width(mainlobe_width, n_out)
    rows = mainlobe_rows(n_out, width)
    d = np.zeros(n_out, dtype=complex)
    if shape == "flat":
        d[rows] = peak
    elif shape == "triangular":
        h = width // 2
        d[rows] = peak * (1 - np.abs(np.arange(-h, h + 1)) / (h + 1))
    else:
        raise ValueError(f"unknown desired-response shape {shape!r}")
    return DesiredResponse(d, width, complex(peak))


def _update(W, P, u, desired, lam):
    # overflow is caught by the callers' finiteness check
    with np.errstate(over="ignore", invalid="ignore"):
        Pu = P @ u.conj()
        k = Pu / (lam + u @ Pu)
        e = desired - u @ W
        W = W + k * e
        P = (P - np.outer(k, u @ P)) / lam
        P = 0.5 * (P + P.conj().T)
    return W, P


def rls_step(state, row, desired):
    """One RLS update with regressor ``row`` (a row of ``S``) and target ``desired``."""
    u = check_signal(row, "row")
    if u.size != state.weights.size:
        raise InvalidSizeError(f"row has {u.size} entries, filter has {state.weights.size}")
    W, P = _update(state.weights, state.inverse_correlation, u, complex(desired), state.forgetting_factor)
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(P))):
        raise DivergenceError("RLS update became non-finite", state.iteration)
    return replace(state, weights=W, inverse_correlation=P, iteration=state.iteration + 1)


def default_regularization(S):
    """``1e2`` times the mean transmit sample power."""
    return DEFAULT_REGULARIZATION_SCALE * S.energy / S.n_waveform


def optimize(S, desired, w_init, iterations, forgetting_factor=DEFAULT_FORGETTING, regularization=None):
    """Run cyclic RLS from ``w_init`` and keep the lowest-ISL iterate.

    Entry ``i`` of the trace is the sidelobe energy after ``i`` updates, so
    entry 0 is ``w_init`` itself and ``iterations`` entries need
    ``iterations - 1`` updates. Update ``i`` presents row ``i mod (N+L-1)``.

    Parameters
    ----------
    S : ConvolutionMatrix
    desired : DesiredResponse or array of length ``N+L-1``
    w_init : FilterWeights or array of length ``L``
    iterations : int
    forgetting_factor : float
    regularization : float, optional
        ``P(0) = I / regularization``; see :func:`default_regularization`.

    Returns
    -------
    IslTrace

    Raises
    ------
    DivergenceError
        With the partial trace (raw energies so far) in ``partial``.
    """
    iterations = check_count(iterations, "iterations")
    d = check_signal(getattr(desired, "values", desired), "desired")
    if d.size != S.n_out:
        raise InvalidSizeError(f"desired response has {d.size} samples, S has {S.n_out} rows")
    if regularization is None:
        regularization = default_regularization(S)
    state = RlsState.initial(w_init, forgetting_factor, regularization)
    if state.weights.size != S.n_filter:
        raise InvalidSizeError(f"initial filter has {state.weights.size} taps, S has {S.n_filter} columns")

    rows = S.entries
    Sm = S.sidelobe_matrix
    Q = Sm.conj().T @ Sm
    peak_row = rows[S.center_row]
    lam = state.forgetting_factor
    W, P = state.weights, state.inverse_correlation

    raw = np.empty(iterations)
    peak_power = np.empty(iterations)
    best, best_W = np.inf, W
    best_iteration = 0
    for i in range(iterations):
        if i:
            u = rows[(i - 1) % S.n_out]
            W, P = _update(W, P, u, d[(i - 1) % S.n_out], lam)
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(P))):
                raise DivergenceError("RLS update became non-finite", i, partial=raw[:i].copy())
        raw[i] = np.vdot(W, Q @ W).real
        peak_power[i] = abs(peak_row @ W) ** 2
        if raw[i] < best:
            best, best_W, best_iteration = raw[i], W, i

    # 0/0 (an all-zero filter) has no defined ISL and is reported as NaN
    with np.errstate(divide="ignore", invalid="ignore"):
        db = 10 * np.log10(raw / peak_power)
    return IslTrace(raw, db, best_iteration, FilterWeights(best_W, "rls", None))


def export_trace(trace):
    """CSV text with columns ``iteration,isl_raw,isl_db,best``."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    buf = io.StringIO()
    buf.write("iteration,isl_raw,isl_db,best\n")
    for i, (raw, db) in enumerate(zip(trace.isl_raw, trace.isl_db)):
        db_txt = "-inf" if db == -np.inf else repr(float(db))
        buf.write(f"{i},{float(raw)!r},{db_txt},{int(i == trace.best_iteration)}\n")
    return buf.getvalue()
