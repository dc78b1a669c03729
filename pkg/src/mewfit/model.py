"""Data model: unit-square adaptation, polynomial models, residuals, and the
weighted mean squared error.

Raw ``(X, Y)`` pairs are mapped affinely onto [0, 1]**2 so residuals read as
fractions of the data bandwidth; every fitting routine in the package works
in these adapted coordinates and results are mapped back on demand.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .exceptions import DegenerateRange, LengthMismatch


@dataclass(frozen=True)
class RawDataset:
    """Given data pairs, kept in input order.

    Parameters
    ----------
    x : array_like
        Abscissae, finite reals.
    y : array_like
        Ordinates, finite reals, same length as ``x``.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or y.ndim != 1:
            raise ValueError("x and y must be one-dimensional")
        if len(x) != len(y):
            raise LengthMismatch(f"{len(x)} x values vs {len(y)} y values")
        if len(x) < 2:
            raise ValueError("need at least 2 points")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("data must be finite")

    @property
    def n(self):
        return len(self.x)


@dataclass(frozen=True)
class Scale:
    """Affine map parameters retained for inverting the adaptation."""

    y_min: float
    y_max: float
    x_min: float
    x_max: float

    @property
    def y_band(self):
        return self.y_max - self.y_min

    @property
    def x_band(self):
        return self.x_max - self.x_min


@dataclass(frozen=True)
class AdaptedDataset:
    """Data mapped onto the unit square, with the scale that produced it.

    Values outside [0, 1] fail construction loudly; silent clamping would
    corrupt the bandwidth-relative residual semantics.
    """

    x: np.ndarray
    y: np.ndarray
    scale: Scale

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if len(x) != len(y):
            raise LengthMismatch(f"{len(x)} x values vs {len(y)} y values")
        if len(x) and (x.min() < 0.0 or x.max() > 1.0):
            raise ValueError("adapted x outside [0, 1]")
        if len(y) and (y.min() < 0.0 or y.max() > 1.0):
            raise ValueError("adapted y outside [0, 1]")

    @property
    def n(self):
        return len(self.x)

    def subset(self, mask):
        """Same adapted coordinates restricted to ``mask`` (no re-adaptation)."""
        return AdaptedDataset(self.x[mask], self.y[mask], self.scale)


@dataclass(frozen=True)
class PolynomialModel:
    """Polynomial in ascending coefficient order: f(x) = sum a_k x**k."""

    coeffs: np.ndarray = field()

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", c)
        if c.ndim != 1 or len(c) == 0:
            raise ValueError("coeffs must be a non-empty 1-d array")
        if not np.isfinite(c).all():
            raise ValueError("coefficients must be finite")

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, x):
        return npoly.polyval(np.asarray(x, dtype=float), self.coeffs)


def adapt(raw):
    """Map a raw dataset onto the unit square.

    Returns an :class:`AdaptedDataset` with
    ``y_i = (Y_i - Y_min)/(Y_max - Y_min)`` and likewise for x; the minima
    land exactly on 0 and the maxima exactly on 1.

    Raises
    ------
    DegenerateRange
        If either bandwidth is zero — the data cannot be normalized.
    """
    x_min, x_max = float(raw.x.min()), float(raw.x.max())
    y_min, y_max = float(raw.y.min()), float(raw.y.max())
    if x_max == x_min:
        raise DegenerateRange("x bandwidth is zero")
    if y_max == y_min:
        raise DegenerateRange("y bandwidth is zero")
    scale = Scale(y_min, y_max, x_min, x_max)
    return AdaptedDataset(
        (raw.x - x_min) / (x_max - x_min),
        (raw.y - y_min) / (y_max - y_min),
        scale,
    )


def unscale(model, scale):
    """Expand the adapted-coordinate fit back to original units.

    ``F(X) = Y_min + (Y_max - Y_min) * f((X - X_min)/(X_max - X_min))``
    expanded to a polynomial in X of the same degree.
    """
    inner = npoly.Polynomial((-scale.x_min / scale.x_band, 1.0 / scale.x_band))
    outer = scale.y_min + scale.y_band * npoly.Polynomial(model.coeffs)(inner)
    coeffs = np.zeros(model.degree + 1)
    coeffs[: len(outer.coef)] = outer.coef
    return PolynomialModel(coeffs)


def residuals(model, data):
    """Pointwise approximation errors e_i = f(x_i) - y_i (bandwidth fractions)."""
    return model(data.x) - data.y


def weighted_mse(e, p):
    """Weighted mean squared error sum(p_i * e_i**2), compensated accumulation."""
    e = np.asarray(e, dtype=float)
    p = np.asarray(p, dtype=float)
    if len(e) != len(p):
        raise LengthMismatch(f"{len(e)} residuals vs {len(p)} weights")
    return math.fsum((p * e * e).tolist())
