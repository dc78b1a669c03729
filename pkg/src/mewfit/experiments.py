"""Seeded end-to-end scenarios: the benchmark fits and the denoising run.

Each scenario builds its dataset from the documented deterministic streams,
so identical (name, seed) pairs reproduce bit-identical inputs and reports.
Random draws are not transferable from the original studies, so checks
against published digits apply only to the deterministic scenarios; the
seeded ones assert property-level outcomes.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .denoise import DenoiseConfig, NoiseSpec, denoise, inject_noise, psnr
from .exceptions import UnknownScenario
from .maxent import FitConfig, mem_fit, uniform_baseline
from .model import PolynomialModel, RawDataset, adapt, residuals, unscale
from .outliers import detect, weight_history
from .rng import Rng

# Pearson's ten-point linear-approximation benchmark (1901). The adapted
# uniform-weight fit must reproduce a = (0.96845, -0.90747); see
# _validate_pearson below, which runs at import.
PEARSON_X = (0.0, 0.9, 1.8, 2.6, 3.3, 4.4, 5.2, 6.1, 6.5, 7.4)
PEARSON_Y = (5.9, 5.4, 4.4, 4.6, 3.5, 3.7, 2.8, 2.8, 2.4, 1.5)

# Degree-seven Legendre polynomial mapped onto [0, 1] with endpoint values
# 0 and 1; ascending coefficients.
LEGENDRE7_COEFFS = (0.0, 28.0, -378.0, 2100.0, -5775.0, 8316.0, -6006.0, 1716.0)

SCENARIO_NAMES = ("pearson", "hidden-line", "legendre-signal",
                  "parabola-outliers", "image-denoise")

# Seeds are part of the scenario definition: the qualitative setups need,
# for example, scrambled points that do not accidentally fall back on the
# hidden line, and a noise subset whose connected solution branch recovers
# the signal; defaults were chosen by scanning for each study's intended
# geometry.
DEFAULT_SEEDS = {
    "pearson": 0,
    "hidden-line": 24,
    "legendre-signal": 584,
    "parabola-outliers": 9,
    "image-denoise": 1,
}

DEFAULT_REDUCTION = {
    "pearson": 100.0,
    "hidden-line": 1e4,
    "legendre-signal": 1e6,
    "parabola-outliers": 20.0,
}

DEFAULT_DEGREE = {
    "pearson": 1,
    "hidden-line": 1,
    "legendre-signal": 7,
    "parabola-outliers": 2,
}


def legendre7(x):
    return PolynomialModel(np.array(LEGENDRE7_COEFFS))(x)


def _validate_pearson():
    data = adapt(RawDataset(np.array(PEARSON_X), np.array(PEARSON_Y)))
    model, _ = uniform_baseline(data, 1)
    expected = np.array([0.96845, -0.90747])
    if np.abs(model.coeffs - expected).max() > 1e-4:
        raise AssertionError(
            f"Pearson fixture failed validation: {model.coeffs} vs {expected}")


_validate_pearson()


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise UnknownScenario(
                f"{self.name!r}; valid names: {', '.join(SCENARIO_NAMES)}")
        if self.seed is None:
            object.__setattr__(self, "seed", DEFAULT_SEEDS[self.name])


def synthetic_image(rows=99, cols=350):
    """Smooth low-frequency test image with intensities inside [0.1, 0.9]."""
    i = np.arange(rows, dtype=float)[:, None]
    j = np.arange(cols, dtype=float)[None, :]
    f = (np.sin(2.0 * math.pi * j / 175.0)
         + 0.8 * np.sin(2.0 * math.pi * i / 66.0 + 1.0)
         + 0.5 * np.sin(2.0 * math.pi * (i / 99.0 + j / 116.0))
         + 0.3 * np.sin(2.0 * math.pi * j / 290.0 + 2.0))
    low, high = f.min(), f.max()
    return 0.1 + 0.8 * (f - low) / (high - low)


def generate(scenario):
    """Build the scenario's input data.

    Returns a RawDataset for the fitting scenarios and the clean truth image
    for ``image-denoise``.
    """
    params = scenario.params
    rng = Rng(scenario.seed)
    if scenario.name == "pearson":
        return RawDataset(np.array(PEARSON_X), np.array(PEARSON_Y))
    if scenario.name == "hidden-line":
        n = params.get("n", 21)
        x = np.arange(n, dtype=float) / (n - 1)
        y = x.copy()
        for i in range(1, n, 2):     # even positions, 1-based
            y[i] = rng.uniform()
        return RawDataset(x, y)
    if scenario.name == "legendre-signal":
        n = params.get("n", 100)
        noisy_count = params.get("noisy_count", 75)
        x = np.arange(n, dtype=float) / (n - 1)
        y = legendre7(x)
        for i in rng.sample_indices(n, noisy_count):
            y[i] = rng.uniform()
        return RawDataset(x, y)
    if scenario.name == "parabola-outliers":
        n = params.get("n", 20)
        x = np.arange(n, dtype=float) / (n - 1)
        y = 1.0 - x + 2.0 * x * x
        for i in range(n):
            y[i] += rng.normal() / 20.0
        y[4] = 2.0      # outliers at 1-based positions 5 and 10
        y[9] = 1.5
        return RawDataset(x, y)
    if scenario.name == "image-denoise":
        return synthetic_image(params.get("rows", 99), params.get("cols", 350))
    raise UnknownScenario(scenario.name)


@dataclass(frozen=True)
class FitReport:
    scenario: Scenario
    raw: RawDataset
    uw_model: PolynomialModel
    uw_model_unscaled: PolynomialModel
    mse_uw: float
    result: object                  # FitResult
    model_unscaled: PolynomialModel
    outliers: object                # OutlierReport
    history: list                   # WeightHistoryRow per grid point


@dataclass(frozen=True)
class DenoiseReport:
    scenario: Scenario
    truth: np.ndarray
    noisy: np.ndarray
    mask: np.ndarray
    clean: np.ndarray
    flagged: np.ndarray
    psnr_noisy: float
    psnr_clean: float
    sensitivity: float
    specificity: float


def _r_grid(r_max, points=13):
    if r_max <= 1.0:
        return [1.0]
    grid = [1.0]
    for k in range(1, points):
        grid.append(r_max ** (k / (points - 1)))
    return grid


def run(scenario):
    """Execute a scenario end to end and return its report bundle."""
    if scenario.name == "image-denoise":
        return _run_denoise(scenario)
    params = scenario.params
    raw = generate(scenario)
    data = adapt(raw)
    degree = params.get("degree", DEFAULT_DEGREE[scenario.name])
    r = params.get("reduction_factor", DEFAULT_REDUCTION[scenario.name])
    config = FitConfig(degree=degree, reduction_factor=r)
    uw_model, mse_uw = uniform_baseline(data, degree)
    result = mem_fit(data, config)
    report = FitReport(
        scenario=scenario,
        raw=raw,
        uw_model=uw_model,
        uw_model_unscaled=unscale(uw_model, data.scale),
        mse_uw=mse_uw,
        result=result,
        model_unscaled=unscale(result.model, data.scale),
        outliers=detect(result),
        history=weight_history(data, config, _r_grid(r)),
    )
    return report


def _run_denoise(scenario):
    params = scenario.params
    truth = generate(scenario)
    spec = NoiseSpec(params.get("probability", 0.15),
                     params.get("safety", 0.5),
                     scenario.seed)
    noisy, mask = inject_noise(truth, spec)
    cfg = params.get("config", DenoiseConfig())
    clean, flagged = denoise(noisy, cfg)
    clean_pixels = ~mask
    sensitivity = float((flagged & mask).sum()) / max(int(mask.sum()), 1)
    specificity = 1.0 - float((flagged & clean_pixels).sum()) / max(
        int(clean_pixels.sum()), 1)
    return DenoiseReport(
        scenario=scenario,
        truth=truth,
        noisy=noisy,
        mask=mask,
        clean=clean,
        flagged=flagged,
        psnr_noisy=psnr(noisy, truth),
        psnr_clean=psnr(clean, truth),
        sensitivity=sensitivity,
        specificity=specificity,
    )
