"""scikit-learn style wrappers around the filter designers.

``fit`` takes the transmit waveform (samples or a :class:`Waveform`) and
learns filter taps in ``coef_``; ``transform`` pulse-compresses received
data, one pulse per row for 2-D input.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import bga, clean
from .filter_design import (
    apply_filter,
    build_convolution_matrix,
    compression_metrics,
    matched_filter,
    solve_min_isl,
)
from .rls import DEFAULT_FORGETTING, build_desired_response, optimize


def _waveform_samples(X):
    s = np.asarray(getattr(X, "samples", X))
    if s.ndim != 1 or s.size == 0:
        raise ValueError(f"expected a non-empty 1-D waveform, got shape {s.shape}")
    return s.astype(complex)


class _CompressorMixin(TransformerMixin):
    def transform(self, X):
        check_is_fitted(self, "coef_")
        X = np.asarray(X)
        if X.ndim == 1:
            return apply_filter(self.coef_, X)
        if X.ndim == 2:
            return np.array([apply_filter(self.coef_, row) for row in X])
        raise ValueError(f"expected 1-D or 2-D input, got {X.ndim}-D")

    def _set_metrics(self, S, W):
        m = compression_metrics(W, S)
        self.isl_db_, self.psl_db_, self.snr_loss_db_ = m.isl_db, m.psl_db, m.snr_loss_db
        self.metrics_ = m


class MatchedFilter(_CompressorMixin, BaseEstimator):
    """Matched filter, optionally centre-padded to ``filter_length`` taps."""

    def __init__(self, filter_length=None, mainlobe_width=1):
        self.filter_length = filter_length
        self.mainlobe_width = mainlobe_width

    def fit(self, X, y=None):
        s = _waveform_samples(X)
        W = matched_filter(s, self.filter_length)
        S = build_convolution_matrix(s, len(W), self.mainlobe_width)
        self.filter_ = W
        self.coef_ = W.weights
        self._set_metrics(S, W)
        return self


class MinISLFilter(_CompressorMixin, BaseEstimator):
    """Closed-form minimum integrated-sidelobe mismatched filter.

    Parameters
    ----------
    filter_length : int, optional
        Number of taps; defaults to twice the waveform length.
    mainlobe_width : int
        Odd number of output samples excluded from the sidelobe energy.
    alpha : complex, optional
        Peak-response constraint; defaults to the waveform energy.
    """

    def __init__(self, filter_length=None, mainlobe_width=3, alpha=None):
        self.filter_length = filter_length
        self.mainlobe_width = mainlobe_width
        self.alpha = alpha

    def fit(self, X, y=None):
        s = _waveform_samples(X)
        L = 2 * s.size if self.filter_length is None else self.filter_length
        S = build_convolution_matrix(s, L, self.mainlobe_width)
        W = solve_min_isl(S, self.alpha)
        self.filter_ = W
        self.coef_ = W.weights
        self._set_metrics(S, W)
        return self


class RLSSidelobeFilter(_CompressorMixin, BaseEstimator):
    """Min-ISL filter refined by cyclic RLS towards a sidelobe-free response.

    After ``fit``, ``trace_`` holds the per-iteration ISL and ``coef_`` the
    lowest-ISL iterate.
    """

    def __init__(
        self,
        filter_length=None,
        mainlobe_width=3,
        n_iter=10_000,
        forgetting_factor=DEFAULT_FORGETTING,
        regularization=None,
        desired_shape="triangular",
    ):
        self.filter_length = filter_length
        self.mainlobe_width = mainlobe_width
        self.n_iter = n_iter
        self.forgetting_factor = forgetting_factor
        self.regularization = regularization
        self.desired_shape = desired_shape

    def fit(self, X, y=None):
        s = _waveform_samples(X)
        L = 2 * s.size if self.filter_length is None else self.filter_length
        S = build_convolution_matrix(s, L, self.mainlobe_width)
        w_init = solve_min_isl(S)
        d = build_desired_response(S.n_out, self.mainlobe_width, S.energy, self.desired_shape)
        trace = optimize(S, d, w_init, self.n_iter, self.forgetting_factor, self.regularization)
        self.initial_filter_ = w_init
        self.trace_ = trace
        self.best_iteration_ = trace.best_iteration
        self.filter_ = trace.best_weights
        self.coef_ = trace.best_weights.weights
        self._set_metrics(S, trace.best_weights)
        return self


class CleanDeconvolver(TransformerMixin, BaseEstimator):
    """Strong-scatterer sidelobe removal for range profiles.

    ``fit`` builds the convolution matrix of the transmit waveform over
    ``n_cells`` range cells; ``transform`` maps a received profile of length
    ``N + n_cells - 1`` to cleaned per-cell amplitudes.

    Parameters
    ----------
    n_cells : int, optional
        Defaults to twice the waveform length.
    noise_power : float
    threshold : float, optional
        Detection threshold; when omitted it is derived from ``pfa``.
    pfa : float
    strong_margin_db : float
    """

    def __init__(self, n_cells=None, noise_power=1.0, threshold=None, pfa=1e-6, strong_margin_db=clean.STRONG_MARGIN_DB):
        self.n_cells = n_cells
        self.noise_power = noise_power
        self.threshold = threshold
        self.pfa = pfa
        self.strong_margin_db = strong_margin_db

    def fit(self, X, y=None):
        s = _waveform_samples(X)
        L = 2 * s.size if self.n_cells is None else self.n_cells
        self.matrix_ = build_convolution_matrix(s, L)
        if self.threshold is None:
            self.threshold_ = clean.false_alarm_threshold(self.matrix_, self.noise_power, self.pfa)
        else:
            self.threshold_ = np.full(L, float(self.threshold))
        return self

    def transform(self, X):
        check_is_fitted(self, "matrix_")
        cleaned, detections, strong = clean.clean_pipeline(
            self.matrix_, X, self.noise_power, self.threshold_, self.strong_margin_db
        )
        self.detections_ = detections
        self.strong_ = strong
        return cleaned


class BezierNLFMDesigner(BaseEstimator):
    """Breeder-GA search for a low-ISL Bezier NLFM waveform.

    ``fit`` takes no data. Afterwards ``genome_``, ``waveform_``,
    ``filter_`` and ``history_`` describe the best design found.
    """

    def __init__(
        self,
        bandwidth=5e6,
        pulse_width=20e-6,
        sample_rate=12e6,
        filter_length=None,
        mainlobe_width=3,
        population_size=200,
        truncation_fraction=0.40,
        mutation_rate=0.001,
        max_generations=100,
        stall_generations=20,
        elitism=True,
        random_state=0,
        n_jobs=None,
    ):
        self.bandwidth = bandwidth
        self.pulse_width = pulse_width
        self.sample_rate = sample_rate
        self.filter_length = filter_length
        self.mainlobe_width = mainlobe_width
        self.population_size = population_size
        self.truncation_fraction = truncation_fraction
        self.mutation_rate = mutation_rate
        self.max_generations = max_generations
        self.stall_generations = stall_generations
        self.elitism = elitism
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self):
        params = bga.WaveformParams(
            self.bandwidth, self.pulse_width, self.sample_rate, self.filter_length, self.mainlobe_width
        )
        return bga.GaConfig(
            population_size=self.population_size,
            truncation_fraction=self.truncation_fraction,
            mutation_rate=self.mutation_rate,
            max_generations=self.max_generations,
            stall_generations=self.stall_generations,
            elitism=self.elitism,
            seed=self.random_state,
            waveform_params=params,
        )

    def fit(self, X=None, y=None):
        config = self._config()
        history = bga.evolve(config, n_jobs=self.n_jobs)
        params = config.waveform_params
        self.history_ = history
        self.genome_ = history.best_individual.genome
        self.fitness_ = history.best_individual.fitness
        self.waveform_ = bga.nlfm_waveform(self.genome_, params)
        S = build_convolution_matrix(self.waveform_, params.resolved_filter_length, params.mainlobe_width)
        self.filter_ = solve_min_isl(S)
        return self
