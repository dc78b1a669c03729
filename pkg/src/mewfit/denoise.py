"""Grayscale image denoising by sliding-window maximal-entropy fits.

Corrupted pixels behave as outliers inside a window: as the prescribed mse
descends through a ladder of reduction factors their weights collapse, the
pixel is flagged, and its intensity is replaced by the window polynomial's
prediction. Windows localize the fit because a single low-degree polynomial
cannot model a whole row of natural image content; overlapping windows vote
by averaging their predictions.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DegenerateRange, DimensionMismatch, MewfitError
from .maxent import PERFECT_FIT_MSE, FitConfig, _run_stage
from .model import PolynomialModel, RawDataset, adapt, unscale, weighted_mse
from .normal_equations import FitWorkspace
from .rng import Rng


@dataclass(frozen=True)
class NoiseSpec:
    """Bernoulli pixel selection plus truncated Gaussian perturbation."""

    probability: float
    safety: float
    seed: int = 1

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must be in [0, 1]")
        if not 0.0 <= self.safety <= 1.0:
            raise ValueError("safety factor must be in [0, 1]")


@dataclass(frozen=True)
class DenoiseConfig:
    window: int = 15
    degree: int = 3
    mse_schedule: tuple = (2.0, 5.0, 10.0, 20.0)
    weight_tol: float = 5e-3
    sweep_order: str = "alternating"
    max_passes: int = 4
    # Windows whose largest uniform-fit residual square carries less than
    # this share of the total have no outlier signature: smooth content
    # grades its residuals continuously (the share stays near or below 1/4)
    # while a corrupted pixel towers above the bed. Skipping them protects
    # clean pixels from the tail collapse that deep reduction causes even
    # on perfectly clean windows.
    share_gate: float = 0.40
    # Windows spanning less than ~3 gray levels of the 255-level scale are
    # treated as flat: their variation is quantization staircase, not
    # structure, and any corruption of visible magnitude lifts the band
    # above this floor anyway.
    min_band: float = 3.0 / 255.0
    # A flag only sticks when the repair would move the pixel by at least
    # this much; smaller deviations are below the gray-level resolution on
    # images that went through 8-bit quantization.
    repair_floor: float = 2.0 / 255.0
    fit: FitConfig | None = None     # overrides for the per-window solver

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.degree + 1 > self.window:
            raise ValueError("degree too high for the window")
        if any(r < 1.0 for r in self.mse_schedule) or any(
                b <= a for a, b in zip(self.mse_schedule, self.mse_schedule[1:])):
            raise ValueError("mse_schedule must be ascending, all >= 1")
        if self.sweep_order not in ("alternating", "rows-then-columns",
                                    "columns-then-rows"):
            raise ValueError(f"unknown sweep order {self.sweep_order!r}")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")

    def fit_config(self):
        base = self.fit or FitConfig(degree=self.degree, outer_tol=1e-10,
                                     outer_max_iter=300)
        return replace(base, degree=self.degree)


def check_image(img):
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("image must be a 2-d grid")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("intensities outside [0, 1]")
    return img


def inject_noise(img, spec):
    """Perturb Bernoulli-selected pixels with clipped Gaussian noise.

    Returns the noisy image and the true corruption mask (for scoring only).
    Draws are interleaved per pixel in row-major order: one uniform for the
    selection, then one normal if the pixel was selected.
    """
    img = check_image(img)
    rng = Rng(spec.seed)
    noisy = img.copy()
    mask = np.zeros(img.shape, dtype=bool)
    rows, cols = img.shape
    for i in range(rows):
        for j in range(cols):
            if rng.uniform() < spec.probability:
                mask[i, j] = True
                value = img[i, j] + spec.safety * rng.normal()
                noisy[i, j] = min(1.0, max(0.0, value))
    return noisy, mask


def psnr(a, b):
    """Peak signal-to-noise ratio in dB on unit-range intensities; +inf for
    identical grids."""
    a = check_image(a)
    b = check_image(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    mse_pixels = float(np.mean(np.square(a - b)))
    if mse_pixels == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse_pixels)


def _window_starts(length, window, stride):
    last = length - window
    starts = list(range(0, last + 1, stride))
    if starts[-1] != last:
        starts.append(last)
    return starts


def _ladder_outcome(values, cfg, fit_cfg):
    """Run the reduction-factor ladder on one window's intensity vector.

    Returns (flag mask over the window, predictions in intensity units) or
    None when the window is degenerate or nothing gets flagged. Depends on
    the values only, so results are cached by the caller.
    """
    n = len(values)
    positions = np.arange(n, dtype=float)
    try:
        data = adapt(RawDataset(positions, values))
    except DegenerateRange:
        return None
    if data.scale.y_band < cfg.min_band:
        return None     # quantization staircase, not structure
    ws = FitWorkspace(data, cfg.degree)
    p = np.full(n, 1.0 / n)
    _, e_uw = ws.solve_weighted(p)
    mse_uw = weighted_mse(e_uw, p)
    if mse_uw <= PERFECT_FIT_MSE:
        return None
    e2_uw = np.square(e_uw)
    if float(e2_uw.max()) < cfg.share_gate * float(e2_uw.sum()):
        return None     # no outlier signature, nothing to repair
    beta = 0.0
    flags = None
    out = None
    for r in cfg.mse_schedule:
        out = _run_stage(ws, mse_uw / float(r), p, beta, fit_cfg)
        p, beta = out.p, out.beta
        new_flags = p < cfg.weight_tol
        if flags is not None and new_flags.any() and \
                np.array_equal(new_flags, flags):
            flags = new_flags
            break       # ladder stabilized on a non-empty flag set
        flags = new_flags
    if out is None or not flags.any():
        return None
    predicted = _kept_prediction(data, ws, out.coeffs, flags, cfg, positions)
    # sub-resolution deviations are quantization artifacts, not corruption
    flags = flags & (np.abs(predicted - values) >= cfg.repair_floor)
    if not flags.any():
        return None
    return flags, predicted, p


def _kept_prediction(data, ws, ladder_coeffs, flags, cfg, positions):
    """Replacement values for flagged pixels.

    The converged model still leans toward a flagged pixel by the weight it
    retains as the constraint's error carrier; refitting the kept subset
    with uniform weights removes that pull (the manual-removal comparison of
    the outlier workflow) and the two fits are otherwise equivalent.
    """
    kept = ~flags
    if int(kept.sum()) >= cfg.degree + 1:
        try:
            sub = data.subset(kept)
            ws_kept = FitWorkspace(sub, cfg.degree)
            coeffs, _ = ws_kept.solve_weighted(np.full(sub.n, 1.0 / sub.n))
            model = PolynomialModel(ws_kept.monomial_coeffs(coeffs))
            return unscale(model, data.scale)(positions)
        except MewfitError:
            pass
    model = PolynomialModel(ws.monomial_coeffs(ladder_coeffs))
    return unscale(model, data.scale)(positions)


def _apply_pass(img, axis, cfg, fit_cfg, flagged, weight_min, cache):
    """Sweep every 1-d slice along ``axis``; apply averaged replacements and
    return the number of pixels flagged by this pass."""
    work = img if axis == 0 else img.T
    flags_t = flagged if axis == 0 else flagged.T
    wmin_t = weight_min if axis == 0 else weight_min.T
    n_slices, length = work.shape
    window = cfg.window
    stride = max(1, math.ceil(window / 2))
    if length < window:
        return 0
    pred_sum = np.zeros_like(work)
    pred_cnt = np.zeros(work.shape, dtype=int)
    starts = _window_starts(length, window, stride)
    for s in range(n_slices):
        row = work[s]
        for start in starts:
            values = row[start:start + window]
            key = values.tobytes()
            if key in cache:
                out = cache[key]
            else:
                out = _ladder_outcome(values.copy(), cfg, fit_cfg)
                cache[key] = out
            if out is None:
                continue
            flags, predicted, p = out
            idx = np.nonzero(flags)[0] + start
            pred_sum[s, idx] += predicted[flags]
            pred_cnt[s, idx] += 1
            wmin_t[s, idx] = np.minimum(wmin_t[s, idx], p[flags])
    hit = pred_cnt > 0
    work[hit] = np.clip(pred_sum[hit] / pred_cnt[hit], 0.0, 1.0)
    flags_t |= hit
    return int(hit.sum())


def _pass_axes(order, max_passes):
    first = 1 if order == "columns-then-rows" else 0
    return [(first + k) % 2 for k in range(max_passes)]


def denoise(noisy, cfg=None):
    """Detect and repair corrupted pixels.

    Sweeps rows and columns (order per config) with overlapping windows; each
    window runs the maximal-entropy fit through the reduction-factor ladder
    and pixels whose converged weight falls below ``weight_tol`` are flagged
    and replaced by the window polynomial's prediction. Passes repeat until
    one flags nothing or ``max_passes`` is reached; already-flagged pixels
    may be re-predicted by later passes, which polishes the repairs.
    Unflagged pixels are never modified.
    """
    clean, flagged, _ = denoise_detail(noisy, cfg)
    return clean, flagged


def denoise_detail(noisy, cfg=None):
    """Like :func:`denoise`, also returning the per-pixel minimum converged
    weight over all windows that flagged the pixel (1.0 where unflagged)."""
    if cfg is None:
        cfg = DenoiseConfig()
    img = check_image(noisy).copy()
    fit_cfg = cfg.fit_config()
    flagged = np.zeros(img.shape, dtype=bool)
    weight_min = np.ones(img.shape)
    cache = {}
    for axis in _pass_axes(cfg.sweep_order, cfg.max_passes):
        if _apply_pass(img, axis, cfg, fit_cfg, flagged, weight_min,
                       cache) == 0:
            break
    return img, flagged, weight_min
