"""Maximal-entropy weight determination coupled to the polynomial fit.

The method prescribes a mean squared error below the uniform-weight level
(``mse_uw / r`` for a reduction factor r > 1) and chooses the weight
distribution of maximal entropy compatible with it. The weights come out in
Gibbs form ``p_i = exp(-beta e_i**2) / Q``; the multiplier ``beta`` solves a
scalar equation handled by safeguarded Newton-Raphson, and the coefficients
and weights are iterated to a joint fixed point. Prescribing a much smaller
error in one jump can land the iteration on an inferior local optimum, so
the target descends geometrically through warm-started continuation stages.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import InfeasibleTarget, NoConvergence
from .model import AdaptedDataset, PolynomialModel, residuals, weighted_mse
from .normal_equations import FitWorkspace

PERFECT_FIT_MSE = 1e-30

# Transient guard: a freshly prescribed target may undercut min e_i**2 of the
# *current* residuals even though it is reachable at the fixed point (the
# constraint's weighted mean always sits above the smallest square there).
# Flooring the per-iteration target keeps beta finite while residuals and
# weights co-evolve; the floor is inactive once the true target is feasible.
_TARGET_FLOOR_FACTOR = 2.0

_DAMPING_MIN = 1.0 / 64.0


class StagePoint(NamedTuple):
    r: float
    mse: float
    entropy: float
    beta: float


@dataclass(frozen=True)
class MemState:
    """Converged weight distribution and its thermodynamic-style summary."""

    weights: np.ndarray
    beta: float
    log_partition: float
    entropy: float
    mse: float
    capped: bool = False

    @property
    def partition(self):
        try:
            return math.exp(self.log_partition)
        except OverflowError:
            return math.inf

    @property
    def alpha(self):
        """Eliminated normalization multiplier: exp(1 + alpha) equals Q."""
        return self.log_partition - 1.0


@dataclass(frozen=True)
class FitConfig:
    degree: int
    reduction_factor: float = 1.0
    continuation_steps: int | None = None
    outer_tol: float = 1e-12
    outer_max_iter: int = 2000
    weight_floor: float = 1e-300
    beta_max: float = 1e12
    cap_beta: bool = True

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if self.reduction_factor < 1.0:
            raise ValueError("reduction factor must be >= 1")
        if self.outer_tol <= 0 or self.outer_max_iter < 1:
            raise ValueError("bad outer-loop controls")
        if self.continuation_steps is not None and self.continuation_steps < 1:
            raise ValueError("continuation_steps must be >= 1")


@dataclass(frozen=True)
class FitResult:
    model: PolynomialModel
    state: MemState
    trace: list
    converged: bool
    iterations: int
    data: AdaptedDataset = field(repr=False, default=None)
    config: FitConfig = None

    @property
    def weights(self):
        return self.state.weights


def _gibbs(e2, beta):
    """Weights, Gibbs mean of e**2, and log Q, all in shifted (stable) form."""
    t = -beta * e2
    t_max = t.max()
    w = np.exp(t - t_max)
    s = float(w.sum())
    p = w / s
    return p, float(p @ e2), t_max + math.log(s)


def partition_function(e, beta):
    """Q = sum exp(-beta e_i**2), evaluated in overflow-safe shifted form."""
    e2 = np.square(np.asarray(e, dtype=float))
    _, _, log_q = _gibbs(e2, beta)
    try:
        return math.exp(log_q)
    except OverflowError:
        return math.inf


def weights_from_beta(e, beta, floor=1e-300):
    """Gibbs weights p_i = exp(-beta e_i**2)/Q; entries below ``floor`` are
    flushed to exact zero so downstream entropy sums stay finite."""
    e2 = np.square(np.asarray(e, dtype=float))
    p, _, _ = _gibbs(e2, beta)
    if floor > 0.0:
        p[p < floor] = 0.0
    return p


def entropy(p):
    """Shannon entropy -sum p ln p in nats, with the 0 ln 0 = 0 convention."""
    p = np.asarray(p, dtype=float)
    pos = p[p > 0.0]
    return -math.fsum((pos * np.log(pos)).tolist())


def _solve_beta_e2(e2, target_mse, beta_init, beta_max, max_iter, rel_tol):
    e2_min, e2_max = float(e2.min()), float(e2.max())
    if target_mse <= e2_min:
        raise InfeasibleTarget(
            f"target {target_mse:.6e} at or below min residual square {e2_min:.6e}")
    if target_mse >= e2_max:
        raise InfeasibleTarget(
            f"target {target_mse:.6e} at or above max residual square {e2_max:.6e}")
    tol = rel_tol * target_mse

    def excess(b):
        _, mean, _ = _gibbs(e2, b)
        return mean - target_mse

    beta = min(max(beta_init, -beta_max), beta_max)
    h = excess(beta)
    if abs(h) <= tol:
        return beta
    # Bracket the root by doubling steps; the mean is monotone decreasing.
    if h > 0.0:
        lo, hi = beta, None
        step = max(1.0, abs(beta))
        while lo + step <= beta_max:
            cand = lo + step
            if excess(cand) < 0.0:
                hi = cand
                break
            lo = cand
            step *= 2.0
        if hi is None:
            if excess(beta_max) >= 0.0:
                raise InfeasibleTarget(
                    f"target {target_mse:.6e} needs beta beyond beta_max {beta_max:.3e}")
            hi = beta_max
    else:
        lo, hi = None, beta
        step = max(1.0, abs(beta))
        while hi - step >= -beta_max:
            cand = hi - step
            if excess(cand) > 0.0:
                lo = cand
                break
            hi = cand
            step *= 2.0
        if lo is None:
            if excess(-beta_max) <= 0.0:
                raise InfeasibleTarget(
                    f"target {target_mse:.6e} needs beta below -beta_max")
            lo = -beta_max

    beta = 0.5 * (lo + hi)
    for _ in range(max_iter):
        p, mean, _ = _gibbs(e2, beta)
        h = mean - target_mse
        if abs(h) <= tol:
            return beta
        if h > 0.0:
            lo = beta
        else:
            hi = beta
        var = float(p @ np.square(e2 - mean))
        nxt = beta + h / var if var > 0.0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if nxt == beta or hi - lo <= 1e-15 * max(1.0, abs(beta)):
            return beta  # bracket exhausted at float resolution
        beta = nxt
    raise NoConvergence(f"beta iteration cap {max_iter} hit")


def solve_beta(e, target_mse, beta_init=0.0, *, beta_max=1e12, max_iter=200,
               rel_tol=1e-13):
    """Multiplier beta at which the Gibbs mean of e**2 equals ``target_mse``.

    The mean is strictly decreasing in beta (its derivative is minus the
    Gibbs variance), so the root is unique; Newton steps are safeguarded by
    a maintained bracket and fall back to bisection whenever they leave it.

    Raises
    ------
    InfeasibleTarget
        If the target lies outside (min e**2, max e**2), or the root would
        exceed ``beta_max`` in magnitude.
    NoConvergence
        If the iteration cap is hit.
    """
    e2 = np.square(np.asarray(e, dtype=float))
    return _solve_beta_e2(e2, target_mse, beta_init, beta_max, max_iter,
                          rel_tol)


def uniform_baseline(data, degree):
    """Classical fit with p_i = 1/n; its mse is the reference level that the
    reduction factor divides."""
    ws = FitWorkspace(data, degree)
    p = np.full(data.n, 1.0 / data.n)
    coeffs, e = ws.solve_weighted(p)
    return PolynomialModel(ws.monomial_coeffs(coeffs)), weighted_mse(e, p)


def _flush_floor(p, floor):
    if floor > 0.0:
        p[p < floor] = 0.0
    return p


def _make_state(e2, beta, weight_floor, capped):
    p, mean, log_q = _gibbs(e2, beta)
    _flush_floor(p, weight_floor)
    return MemState(p, beta, log_q, entropy(p), mean, capped)


class _StageOutcome(NamedTuple):
    p: np.ndarray
    coeffs: np.ndarray      # in the workspace basis
    beta: float
    e: np.ndarray
    iterations: int
    converged: bool
    capped: bool


def _run_stage(ws, target, p, beta, config):
    """Fixed-point iteration at one prescribed target: coefficients from the
    weighted normal equations, beta from the constraint, weights from the
    Gibbs form, repeated until weights and residuals both stop moving.

    Convergence is tested on the residual change rather than the coefficient
    change: at high degree the coefficients carry an irreducible solve-noise
    floor while the residuals stay well determined, and every downstream
    state tolerance depends on residuals and weights only.
    """
    lam = 1.0
    window = 25
    best_dp = math.inf
    prev_best_dp = math.inf
    capped = False
    e_prev = None
    coeffs = None
    for it in range(1, config.outer_max_iter + 1):
        coeffs, e = ws.solve_weighted(p)
        e2 = np.square(e)
        e2_min, e2_max = float(e2.min()), float(e2.max())

        if e2_min < target < e2_max:
            t_eff = target
        elif target <= e2_min:
            if e2_max == e2_min:
                # zero residual spread: weights cannot move the mse
                t_eff = None
            else:
                t_eff = min(_TARGET_FLOOR_FACTOR * e2_min,
                            0.5 * (e2_min + e2_max))
        else:
            t_eff = 0.5 * (e2_min + e2_max) if e2_max > e2_min else None

        capped_now = False
        if t_eff is None:
            beta_new = beta
            capped_now = True
        else:
            try:
                beta_new = _solve_beta_e2(e2, t_eff, beta, config.beta_max,
                                          200, 1e-13)
            except InfeasibleTarget:
                if not config.cap_beta:
                    raise
                beta_new = config.beta_max
                capped_now = True
        capped = capped_now

        p_gibbs, _, _ = _gibbs(e2, beta_new)
        _flush_floor(p_gibbs, config.weight_floor)
        if lam < 1.0:
            p_new = (1.0 - lam) * p + lam * p_gibbs
        else:
            p_new = p_gibbs

        dp = float(np.abs(p_new - p).max())
        de = math.inf if e_prev is None else float(np.abs(e - e_prev).max())

        # oscillation guard: a healthy contraction roughly halves the weight
        # update every few iterations; when a whole window brings no such
        # progress the loop is cycling, so relax the update
        best_dp = min(best_dp, dp)
        if it % window == 0 and dp > 10.0 * config.outer_tol:
            if best_dp >= 0.5 * prev_best_dp:
                lam = max(0.5 * lam, _DAMPING_MIN)
            prev_best_dp = best_dp
            best_dp = math.inf

        p, beta, e_prev = p_new, beta_new, e
        if dp < config.outer_tol and de < config.outer_tol and (
                capped_now or t_eff == target):
            # report the exact Gibbs weights of the final residuals so the
            # returned state satisfies its invariants by construction
            return _StageOutcome(p_gibbs, coeffs, beta, e, it, True, capped_now)
    return _StageOutcome(p, coeffs, beta, e_prev, config.outer_max_iter, False,
                         capped)


def _continuation_steps(config, warm_started):
    if config.continuation_steps is not None:
        return config.continuation_steps
    if warm_started:
        return 1
    # one decade of target reduction per stage tracks the branch connected
    # to the uniform solution
    return max(1, math.ceil(math.log10(config.reduction_factor)))


def _uniform_result(data, config, model, mse_uw, capped):
    n = data.n
    p = np.full(n, 1.0 / n)
    state = MemState(p, 0.0, math.log(n), math.log(n), mse_uw, capped)
    trace = [StagePoint(1.0, mse_uw, math.log(n), 0.0)]
    return FitResult(model, state, trace, True, 0, data, config)


def mem_fit(data, config, p0=None):
    """Run the full solution strategy: uniform start, geometric descent of
    the prescribed mse, fixed-point iteration per stage.

    ``p0`` warm-starts the weights (continuation callers pass the previous
    converged distribution); the target is still referenced to the
    uniform-weight mse of ``data``.

    Raises
    ------
    NoConvergence
        Iteration cap hit; ``.result`` holds the best state reached.
    InfeasibleTarget
        Only when ``config.cap_beta`` is disabled.
    """
    ws = FitWorkspace(data, config.degree)
    n = data.n
    uniform = np.full(n, 1.0 / n)
    base_coeffs, e_uw = ws.solve_weighted(uniform)
    mse_uw = weighted_mse(e_uw, uniform)
    baseline = PolynomialModel(ws.monomial_coeffs(base_coeffs))

    if mse_uw <= PERFECT_FIT_MSE:
        # perfect fit: the constraint cannot be reduced further
        return _uniform_result(data, config, baseline, mse_uw, True)
    if config.reduction_factor == 1.0 and p0 is None:
        return _uniform_result(data, config, baseline, mse_uw, False)

    p = uniform.copy() if p0 is None else np.asarray(p0, dtype=float).copy()
    beta = 0.0
    steps = _continuation_steps(config, p0 is not None)
    trace = [StagePoint(1.0, mse_uw, math.log(n), 0.0)]
    iterations = 0
    r = config.reduction_factor
    out = None
    for k in range(1, steps + 1):
        r_k = r ** (k / steps)
        target = mse_uw / r_k
        out = _run_stage(ws, target, p, beta, config)
        iterations += out.iterations
        p, beta = out.p, out.beta
        state = _make_state(np.square(out.e), beta, config.weight_floor,
                            out.capped)
        trace.append(StagePoint(r_k, state.mse, state.entropy, beta))
        if not out.converged:
            model = PolynomialModel(ws.monomial_coeffs(out.coeffs))
            result = FitResult(model, state, trace, False, iterations, data,
                               config)
            raise NoConvergence(
                f"stage r={r_k:.6g} failed to converge in "
                f"{config.outer_max_iter} iterations", result)
    model = PolynomialModel(ws.monomial_coeffs(out.coeffs))
    return FitResult(model, state, trace, True, iterations, data, config)


@dataclass(frozen=True)
class IdentityDiagnostics:
    """Consistency checks of a converged state against its own multiplier."""

    identity_residual: float    # |H - (beta mse + ln Q)|
    dh_dmse_fd: float           # centered finite difference of H w.r.t. mse
    beta: float

    @property
    def derivative_gap(self):
        return abs(self.dh_dmse_fd - self.beta)


def entropy_identity_check(result, h=1e-3):
    """Evaluate H = beta mse + ln Q on the converged state and compare a
    finite-difference dH/dmse (refit at mse*(1 +/- h)) against beta."""
    state = result.state
    if state.capped:
        raise ValueError("state was capped; the constraint is not active")
    identity = abs(state.entropy - (state.beta * state.mse + state.log_partition))
    data, config = result.data, result.config
    ws = FitWorkspace(data, config.degree)
    entropies = []
    targets = (state.mse * (1.0 - h), state.mse * (1.0 + h))
    for target in targets:
        out = _run_stage(ws, target, state.weights.copy(), state.beta, config)
        if not out.converged:
            raise NoConvergence(f"perturbed refit at target {target:.6e}")
        entropies.append(_make_state(np.square(out.e), out.beta,
                                     config.weight_floor, out.capped).entropy)
    fd = (entropies[1] - entropies[0]) / (targets[1] - targets[0])
    return IdentityDiagnostics(identity, fd, state.beta)
