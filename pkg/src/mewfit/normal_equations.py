"""Weighted polynomial normal equations: assembly and direct solution.

The Gram matrix ``G[k, s] = sum_i p_i x_i**(k+s)`` depends only on the power
moments of the weighted abscissae, so assembly reduces to 2m+1 moment sums;
each sum is accumulated with ``math.fsum`` because near-vanishing weights mix
magnitudes badly. Systems stay tiny (degree <= ~10), so the solver favours
robustness: Cholesky with a relative pivot tolerance, falling back to
fully-pivoted elimination for semidefinite but consistent systems.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .exceptions import DegreeTooHigh, SingularSystem
from .model import PolynomialModel

# Monomials on [0,1] grow too ill-conditioned from degree 6 on (the degree-7
# Gram already reaches cond ~ 1e10, putting its double-precision solve noise
# above the outer loop's tolerance); build in the shifted basis t = 2x-1 from
# there and convert the coefficients back.
SHIFTED_BASIS_MIN_DEGREE = 6

_PIVOT_RTOL = 1e-13
_RESIDUAL_RTOL = 1e-10


@dataclass(frozen=True)
class NormalSystem:
    """Left- and right-hand sides of the weighted normal equations."""

    gram: np.ndarray
    rhs: np.ndarray
    basis: str  # "monomial" (powers of x) or "shifted" (powers of 2x-1)

    @property
    def size(self):
        return len(self.rhs)


def _moment_sums(t, y, p, degree):
    """Power moments mu_j = sum p t**j (j <= 2m) and nu_k = sum p y t**k."""
    powers = t[:, None] ** np.arange(2 * degree + 1)
    wp = p[:, None] * powers
    mu = [math.fsum(col) for col in wp.T.tolist()]
    wy = (p * y)[:, None] * powers[:, : degree + 1]
    nu = [math.fsum(col) for col in wy.T.tolist()]
    return mu, nu


def assemble(data, p, degree):
    """Build the normal system for ``degree`` at fixed weights ``p``.

    Raises
    ------
    DegreeTooHigh
        If there are fewer points than coefficients.
    """
    n = data.n
    if degree + 1 > n:
        raise DegreeTooHigh(f"degree {degree} needs {degree + 1} points, have {n}")
    p = np.asarray(p, dtype=float)
    if degree >= SHIFTED_BASIS_MIN_DEGREE:
        t = 2.0 * data.x - 1.0
        basis = "shifted"
    else:
        t = data.x
        basis = "monomial"
    mu, nu = _moment_sums(t, data.y, p, degree)
    m1 = degree + 1
    gram = np.empty((m1, m1))
    for k in range(m1):
        for s in range(m1):
            gram[k, s] = mu[k + s]
    return NormalSystem(gram, np.array(nu), basis)


def _cholesky(g, tol):
    """Lower Cholesky factor as nested lists, or None if a pivot dips below tol."""
    n = len(g)
    a = [row[:] for row in g]
    for j in range(n):
        d = a[j][j] - math.fsum(a[j][k] * a[j][k] for k in range(j))
        if d < tol:
            return None
        d = math.sqrt(d)
        a[j][j] = d
        for i in range(j + 1, n):
            a[i][j] = (a[i][j] - math.fsum(a[i][k] * a[j][k] for k in range(j))) / d
    return a


def _cholesky_solve(l, b):
    n = len(b)
    y = [0.0] * n
    for i in range(n):
        y[i] = (b[i] - math.fsum(l[i][k] * y[k] for k in range(i))) / l[i][i]
    x = [0.0] * n
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - math.fsum(l[k][i] * x[k] for k in range(i + 1, n))) / l[i][i]
    return x


def _complete_pivot_solve(g, b, tol):
    """Gaussian elimination with full pivoting; consistent rank-deficient
    systems get the particular solution with free variables at zero."""
    n = len(b)
    a = [g[i][:] + [b[i]] for i in range(n)]
    col_of = list(range(n))
    rank = n
    for step in range(n):
        piv_i, piv_j, piv = step, step, 0.0
        for i in range(step, n):
            for j in range(step, n):
                if abs(a[i][j]) > piv:
                    piv_i, piv_j, piv = i, j, abs(a[i][j])
        if piv <= tol:
            rank = step
            break
        a[step], a[piv_i] = a[piv_i], a[step]
        for row in a:
            row[step], row[piv_j] = row[piv_j], row[step]
        col_of[step], col_of[piv_j] = col_of[piv_j], col_of[step]
        for i in range(step + 1, n):
            f = a[i][step] / a[step][step]
            if f != 0.0:
                for j in range(step, n + 1):
                    a[i][j] -= f * a[step][j]
    for i in range(rank, n):
        if abs(a[i][n]) > tol:
            raise SingularSystem("weighted support too thin for this degree")
    z = [0.0] * n
    for i in range(rank - 1, -1, -1):
        s = a[i][n] - math.fsum(a[i][j] * z[j] for j in range(i + 1, rank))
        z[i] = s / a[i][i]
    x = [0.0] * n
    for k in range(n):
        x[col_of[k]] = z[k]
    return x


def solve(system):
    """Coefficients of the normal system, in the system's own basis.

    Raises
    ------
    SingularSystem
        If the factorization trips the pivot tolerance and the system is not
        consistent, or the solution fails the residual bound.
    """
    g = system.gram
    b = system.rhs
    scale = float(np.abs(np.diag(g)).max())
    tol = _PIVOT_RTOL * max(scale, 1e-300)
    gl = g.tolist()
    bl = b.tolist()
    l = _cholesky(gl, tol)
    if l is not None:
        a = np.array(_cholesky_solve(l, bl))
    else:
        a = np.array(_complete_pivot_solve(gl, bl, tol))
    gap = float(np.abs(g @ a - b).max())
    if gap > _RESIDUAL_RTOL * (1.0 + float(np.abs(b).max())):
        raise SingularSystem(f"normal-equation residual {gap:.3e} above bound")
    return a


def to_monomial(coeffs, basis):
    """Convert solver output to ascending powers of x on [0, 1]."""
    if basis == "monomial":
        return np.asarray(coeffs, dtype=float)
    composed = npoly.Polynomial(coeffs)(npoly.Polynomial((-1.0, 2.0)))
    out = np.zeros(len(coeffs))
    out[: len(composed.coef)] = composed.coef
    return out


class FitWorkspace:
    """Reusable per-dataset state for repeated weighted fits.

    The abscissa powers and the basis choice depend only on the data and the
    degree, so iterative callers hoist them out of the loop; ``solve_weighted``
    then runs assembly, factorization, and residual evaluation without
    rebuilding anything.
    """

    def __init__(self, data, degree):
        if degree + 1 > data.n:
            raise DegreeTooHigh(
                f"degree {degree} needs {degree + 1} points, have {data.n}")
        self.degree = degree
        self.y = data.y
        if degree >= SHIFTED_BASIS_MIN_DEGREE:
            t = 2.0 * data.x - 1.0
            self.basis = "shifted"
        else:
            t = data.x
            self.basis = "monomial"
        self.powers = t[:, None] ** np.arange(2 * degree + 1)
        self.vand = np.ascontiguousarray(self.powers[:, : degree + 1])

    def solve_weighted(self, p):
        """Coefficients (in the workspace basis) and residuals at weights p."""
        m1 = self.degree + 1
        mu = [math.fsum(col) for col in (p[:, None] * self.powers).T.tolist()]
        nu = [math.fsum(col)
              for col in ((p * self.y)[:, None] * self.vand).T.tolist()]
        gram = [[mu[k + s] for s in range(m1)] for k in range(m1)]
        tol = _PIVOT_RTOL * max(max(abs(gram[i][i]) for i in range(m1)), 1e-300)
        low = _cholesky(gram, tol)
        if low is not None:
            coeffs = _cholesky_solve(low, nu)
        else:
            coeffs = _complete_pivot_solve(gram, nu, tol)
        gap = max(abs(math.fsum(gram[k][s] * coeffs[s] for s in range(m1))
                      - nu[k]) for k in range(m1))
        if gap > _RESIDUAL_RTOL * (1.0 + max(abs(v) for v in nu)):
            raise SingularSystem(f"normal-equation residual {gap:.3e} above bound")
        coeffs = np.array(coeffs)
        return coeffs, self.vand @ coeffs - self.y

    def monomial_coeffs(self, coeffs):
        return to_monomial(coeffs, self.basis)


def fit_polynomial(data, p, degree):
    """Assemble-and-solve convenience: weighted fit as a PolynomialModel."""
    ws = FitWorkspace(data, degree)
    coeffs, _ = ws.solve_weighted(np.asarray(p, dtype=float))
    return PolynomialModel(ws.monomial_coeffs(coeffs))
