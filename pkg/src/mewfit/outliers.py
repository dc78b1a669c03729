"""Outlier labeling from converged maximal-entropy weights.

A point whose weight collapses below a threshold is treated as shut off by
the fit; the method itself is the detector, no separate statistical test is
involved. The report carries a reference fit: uniform weights on the kept
subset only, the classical manual-removal comparison.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegreeTooHigh
from .maxent import FitConfig, mem_fit, uniform_baseline
from .model import PolynomialModel

# Relative to the uniform level 1/n so the cut scales with dataset size.
DEFAULT_THRESHOLD_FRACTION = 1e-3


@dataclass(frozen=True)
class OutlierReport:
    outlier: np.ndarray             # True where the point is flagged
    weights: np.ndarray
    threshold: float
    kept_model: PolynomialModel | None   # uw refit on the kept subset
    kept_mse: float | None

    @property
    def n_outliers(self):
        return int(self.outlier.sum())


def detect(result, threshold=None):
    """Label points by weight collapse and refit the kept subset uniformly.

    ``threshold`` defaults to 1e-3/n. The kept-subset comparison is fitted in
    the same adapted coordinates (no re-adaptation), so its coefficients are
    directly comparable with the maximal-entropy model's.
    """
    p = result.state.weights
    n = len(p)
    if threshold is None:
        threshold = DEFAULT_THRESHOLD_FRACTION / n
    flags = p < threshold
    kept_model = kept_mse = None
    kept = ~flags
    if kept.any():
        try:
            kept_model, kept_mse = uniform_baseline(
                result.data.subset(kept), result.config.degree)
        except DegreeTooHigh:
            pass
    return OutlierReport(flags, p.copy(), float(threshold), kept_model, kept_mse)


@dataclass(frozen=True)
class WeightHistoryRow:
    r: float
    weights: np.ndarray
    entropy: float
    converged: bool


def weight_history(data, config, r_grid):
    """One converged fit per reduction factor, warm-started along the grid.

    Rows where the fit fails are marked unconverged and carry NaN weights;
    the sweep continues from the last good distribution.
    """
    r_grid = [float(r) for r in r_grid]
    if not r_grid or r_grid[0] != 1.0 or any(
            b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise ValueError("r_grid must be ascending and start at 1")
    rows = []
    p_prev = None
    for i, r in enumerate(r_grid):
        cfg = FitConfig(
            degree=config.degree,
            reduction_factor=r,
            continuation_steps=config.continuation_steps,
            outer_tol=config.outer_tol,
            outer_max_iter=config.outer_max_iter,
            weight_floor=config.weight_floor,
            beta_max=config.beta_max,
            cap_beta=config.cap_beta,
        )
        try:
            result = mem_fit(data, cfg, p0=p_prev)
        except Exception:
            rows.append(WeightHistoryRow(r, np.full(data.n, np.nan), np.nan, False))
            continue
        rows.append(WeightHistoryRow(r, result.state.weights.copy(),
                                     result.state.entropy, result.converged))
        p_prev = result.state.weights
    return rows
