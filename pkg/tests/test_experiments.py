import math

import numpy as np
import pytest

from mewfit import UnknownScenario, adapt
from mewfit.experiments import (LEGENDRE7_COEFFS, Scenario, generate,
                                legendre7, run, synthetic_image)


def test_unknown_scenario_rejected():
    with pytest.raises(UnknownScenario):
        Scenario("mystery")


def test_default_seed_applied():
    assert Scenario("pearson").seed == 0
    assert Scenario("pearson", seed=3).seed == 3


def test_legendre7_endpoint_values():
    # direct evaluation of the published coefficients
    assert legendre7(0.0) == 0.0
    assert legendre7(1.0) == pytest.approx(
        1716 - 6006 + 8316 - 5775 + 2100 - 378 + 28, rel=1e-15)
    assert legendre7(1.0) == pytest.approx(1.0, rel=1e-12)
    assert sum(LEGENDRE7_COEFFS) == 1.0


def test_hidden_line_generation():
    raw = generate(Scenario("hidden-line", seed=6))
    assert raw.n == 21
    on_line = raw.y == raw.x
    # odd 1-based positions untouched: exactly the 11 even 0-based indices
    assert on_line[::2].all()
    assert int(on_line.sum()) == 11


def test_hidden_line_seed_determinism():
    a = generate(Scenario("hidden-line", seed=5))
    b = generate(Scenario("hidden-line", seed=5))
    c = generate(Scenario("hidden-line", seed=6))
    assert np.array_equal(a.y, b.y)
    assert not np.array_equal(a.y, c.y)


def test_legendre_signal_generation():
    raw = generate(Scenario("legendre-signal", seed=2))
    assert raw.n == 100
    assert np.array_equal(raw.x, np.arange(100) / 99.0)
    clean = raw.y == legendre7(raw.x)
    assert int(clean.sum()) == 25


def test_parabola_generation():
    raw = generate(Scenario("parabola-outliers", seed=2))
    assert raw.n == 20
    assert raw.y[4] == 2.0
    assert raw.y[9] == 1.5
    truth = 1.0 - raw.x + 2.0 * raw.x ** 2
    others = np.ones(20, dtype=bool)
    others[[4, 9]] = False
    # Gaussian delta/20 perturbations are small but nonzero
    gaps = np.abs(raw.y - truth)[others]
    assert gaps.max() < 0.25
    assert gaps.min() > 0.0


def test_pearson_fixed_table():
    raw = generate(Scenario("pearson"))
    assert raw.n == 10
    assert raw.x[0] == 0.0 and raw.x[-1] == 7.4


def test_synthetic_image_range_and_shape():
    img = synthetic_image()
    assert img.shape == (99, 350)
    assert img.min() == pytest.approx(0.1, abs=1e-12)
    assert img.max() == pytest.approx(0.9, abs=1e-12)


def test_pearson_run_reproduces_paper_numbers():
    rep = run(Scenario("pearson"))
    assert rep.uw_model.coeffs[0] == pytest.approx(0.96845, abs=1e-4)
    assert rep.uw_model.coeffs[1] == pytest.approx(-0.90747, abs=1e-4)
    assert rep.mse_uw == pytest.approx(0.41357e-2, abs=1e-6)
    assert rep.result.model.coeffs[0] == pytest.approx(0.99781, abs=1e-3)
    assert rep.result.model.coeffs[1] == pytest.approx(-0.84758, abs=1e-3)
    assert len(rep.history) >= 2
    assert rep.history[0].r == 1.0
    assert rep.history[0].entropy == pytest.approx(math.log(10), rel=1e-12)


def test_hidden_line_run_properties():
    rep = run(Scenario("hidden-line"))
    coeffs = rep.result.model.coeffs
    assert abs(coeffs[1] - 1.0) < 1e-3
    assert abs(coeffs[0]) <= 1e-3
    assert abs(rep.result.state.entropy - math.log(11)) < 0.02


def test_run_seed_determinism():
    a = run(Scenario("parabola-outliers"))
    b = run(Scenario("parabola-outliers"))
    assert np.array_equal(a.raw.y, b.raw.y)
    assert np.array_equal(a.result.state.weights, b.result.state.weights)
    assert np.array_equal(a.result.model.coeffs, b.result.model.coeffs)
