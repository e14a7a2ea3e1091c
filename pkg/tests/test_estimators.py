import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import barker, two_scatterer_scene
from lowsidelobe import clean
from lowsidelobe.clean import RangeScene
from lowsidelobe.estimators import (
    BezierNLFMDesigner,
    CleanDeconvolver,
    MatchedFilter,
    MinISLFilter,
    RLSSidelobeFilter,
)
from lowsidelobe.filter_design import apply_filter, build_convolution_matrix, solve_min_isl
from lowsidelobe.waveform import generate_lfm


def test_params_and_clone():
    est = MinISLFilter(filter_length=20, mainlobe_width=1, alpha=2.0)
    assert est.get_params() == {"filter_length": 20, "mainlobe_width": 1, "alpha": 2.0}
    twin = clone(est).set_params(alpha=3.0)
    assert twin.alpha == 3.0 and est.alpha == 2.0


@pytest.mark.parametrize("cls", [MatchedFilter, MinISLFilter, RLSSidelobeFilter])
def test_not_fitted(cls):
    with pytest.raises(NotFittedError):
        cls().transform(np.ones(4))


def test_min_isl_fit_transform():
    s = barker(13)
    est = MinISLFilter(filter_length=26, mainlobe_width=3).fit(s)
    S = build_convolution_matrix(s, 26, 3)
    np.testing.assert_allclose(est.coef_, solve_min_isl(S).weights)
    np.testing.assert_allclose(est.transform(s), S.entries @ est.coef_, atol=1e-9)
    batch = est.transform(np.vstack([s, 2 * s]))
    np.testing.assert_allclose(batch[1], 2 * batch[0])
    assert est.isl_db_ < MatchedFilter(mainlobe_width=3).fit(s).isl_db_


def test_matched_accepts_waveform():
    wf = generate_lfm(1e6, 1e-5, 2e6)
    est = MatchedFilter().fit(wf)
    assert est.coef_.size == 20
    assert est.snr_loss_db_ == 0


def test_bad_input():
    with pytest.raises(ValueError):
        MinISLFilter().fit(np.ones((2, 3)))
    with pytest.raises(ValueError):
        MatchedFilter().fit(barker(7)).transform(np.ones((2, 2, 2)))


def test_rls_estimator():
    s = barker(7)
    est = RLSSidelobeFilter(filter_length=14, n_iter=50).fit(s)
    assert len(est.trace_) == 50
    assert est.best_iteration_ == int(np.argmin(est.trace_.isl_raw))
    np.testing.assert_allclose(apply_filter(est.coef_, s), est.transform(s))


def test_clean_deconvolver():
    wf = generate_lfm(5e6, 1e-5, 6.4e6, 0.1)
    est = CleanDeconvolver(n_cells=128, noise_power=1.0).fit(wf)
    a, strong, weak = two_scatterer_scene(1)
    y = clean.simulate_profile(est.matrix_, RangeScene(a, 1.0, 1))
    out = est.transform(y)
    assert out.shape == (128,)
    assert strong in est.strong_.cells
    assert abs(20 * np.log10(abs(out[weak]) / abs(a[weak]))) < 1
    with pytest.raises(NotFittedError):
        CleanDeconvolver().transform(y)


def test_nlfm_designer():
    est = BezierNLFMDesigner(pulse_width=8e-6, sample_rate=6e6, filter_length=96,
                             population_size=6, max_generations=2, random_state=1)
    est.fit()
    assert len(est.history_) == 2
    assert est.fitness_ == min(est.history_.best_fitness)
    assert est.waveform_.samples.size == 48
    assert len(est.filter_) == 96
