import numpy as np
import pytest

from mewfit import FitConfig, RawDataset, adapt, mem_fit
from mewfit.outliers import detect, weight_history
from mewfit.experiments import Scenario, generate


def parabola_result(r=20.0):
    data = adapt(generate(Scenario("parabola-outliers")))
    return mem_fit(data, FitConfig(degree=2, reduction_factor=r))


def test_uniform_weights_yield_no_outliers():
    data = adapt(generate(Scenario("parabola-outliers")))
    result = mem_fit(data, FitConfig(degree=2, reduction_factor=1.0))
    report = detect(result, threshold=0.04)    # anything below 1/n
    assert report.n_outliers == 0
    assert report.kept_model is not None


def test_parabola_outliers_flagged():
    report = detect(parabola_result(), threshold=1e-2)
    assert set(np.nonzero(report.outlier)[0].tolist()) == {4, 9}
    assert report.weights[4] < 1e-6
    assert report.weights[9] < 1e-2


def test_kept_refit_close_to_mew_model():
    result = parabola_result()
    report = detect(result, threshold=1e-2)
    assert report.kept_model is not None
    assert np.abs(report.kept_model.coeffs - result.model.coeffs).max() <= 0.05


def test_default_threshold_scales_with_n():
    result = parabola_result()
    report = detect(result)
    assert report.threshold == pytest.approx(1e-3 / 20)


def test_labels_deterministic_function_of_weights():
    result = parabola_result()
    a = detect(result, threshold=1e-2)
    b = detect(result, threshold=1e-2)
    assert np.array_equal(a.outlier, b.outlier)
    # flags are exactly the weights below threshold
    assert np.array_equal(a.outlier, a.weights < a.threshold)


def test_kept_weight_mass_bound():
    result = parabola_result()
    report = detect(result, threshold=1e-2)
    kept_mass = float(result.state.weights[~report.outlier].sum())
    assert kept_mass >= 1.0 - 20 * report.threshold


def test_exact_duplicate_outliers_refit_matches_mew():
    # two exact copies of one bad point; kept points carry near-uniform
    # weights, so the kept-subset uw refit and the mew model coincide
    x = np.linspace(0.0, 1.0, 12)
    y = 0.2 + 0.6 * x
    x = np.append(x, [0.5, 0.5])
    y = np.append(y, [1.0, 1.0])
    data = adapt(RawDataset(x, y))
    result = mem_fit(data, FitConfig(degree=1, reduction_factor=1e4))
    report = detect(result)
    assert set(np.nonzero(report.outlier)[0].tolist()) == {12, 13}
    assert np.abs(report.kept_model.coeffs - result.model.coeffs).max() < 1e-4


def test_weight_history_grid_validation():
    data = adapt(generate(Scenario("parabola-outliers")))
    cfg = FitConfig(degree=2)
    with pytest.raises(ValueError):
        weight_history(data, cfg, [2.0, 4.0])      # must start at 1
    with pytest.raises(ValueError):
        weight_history(data, cfg, [1.0, 5.0, 3.0])  # must ascend


def test_weight_history_rows():
    data = adapt(generate(Scenario("parabola-outliers")))
    rows = weight_history(data, FitConfig(degree=2), [1.0, 2.0, 5.0, 20.0])
    assert len(rows) == 4
    assert np.allclose(rows[0].weights, 0.05)
    assert rows[0].r == 1.0
    assert all(row.converged for row in rows)
    # outlier weights decrease monotonically along the grid
    w5 = [row.weights[4] for row in rows]
    w10 = [row.weights[9] for row in rows]
    assert all(a >= b for a, b in zip(w5, w5[1:]))
    assert all(a >= b for a, b in zip(w10, w10[1:]))
    # non-outlier weights stay near the uniform level
    others = np.ones(20, dtype=bool)
    others[[4, 9]] = False
    for row in rows:
        assert row.weights[others].min() >= 0.03
        assert row.weights[others].max() <= 0.08
