"""Two-factor cash-flow simulation and least-squares Monte Carlo optimal stopping.

Payoffs are NPVs already expressed in time-0 terms, so the backward sweep
compares them directly with regression estimates of the continuation payoff
and never discounts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import _random
from .discounting import Compounding, Horizon, RatePair, TwoFactor, npv0_coefficients
from .errors import DomainError

MIN_REGRESSION_PATHS = 10

FilterRule = Literal["paper", "itm"]


@dataclass
class PathSet:
    """Simulated revenue ``x1`` and cost ``x2`` levels, each ``(n_paths, steps+1)``."""

    times: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.x1.shape != self.x2.shape or self.x1.shape[1] != self.times.size:
            raise DomainError("path arrays must share shape (n_paths, len(times))")
        if self.x1.shape[0] < 2:
            raise DomainError("need at least 2 paths")

    @property
    def n_paths(self) -> int:
        return self.x1.shape[0]

    @property
    def steps(self) -> int:
        return self.times.size - 1


def simulate_paths(spec: TwoFactor, horizon: Horizon, n_paths: int, seed: int, workers: int = 1) -> PathSet:
    """Exact-scheme correlated GBM for revenue and cost.

    Each step draws three independent normals ``W0, W1, W2``; factor ``i``
    sees ``rho_i * W0 + sqrt(1 - rho_i^2) * W_i``.
    """
    if n_paths < 2:
        raise DomainError("need at least 2 paths")
    dt = horizon.dt
    w = _random.standard_normals(seed, n_paths, (horizon.steps, 3), workers)
    w0, w1, w2 = w[..., 0], w[..., 1], w[..., 2]

    def factor(x0, mu, sigma, rho, wi):
        z = rho * w0 + math.sqrt(1.0 - rho * rho) * wi
        increments = (mu - 0.5 * sigma * sigma) * dt + sigma * math.sqrt(dt) * z
        x = np.empty((n_paths, horizon.steps + 1))
        x[:, 0] = x0
        x[:, 1:] = x0 * np.exp(np.cumsum(increments, axis=1))
        return x

    x1 = factor(spec.x10, spec.mu1, spec.sigma1, spec.rho1, w1)
    x2 = factor(spec.x20, spec.mu2, spec.sigma2, spec.rho2, w2)
    return PathSet(horizon.grid, x1, x2, seed)


def npv_paths(paths: PathSet, rates: RatePair, mu1: float, mu2: float) -> np.ndarray:
    """Per-path, per-date NPV in time-0 terms, ``c1(t) x1 - c2(t) x2``."""
    if rates.mode is not Compounding.CONTINUOUS:
        raise DomainError("path NPVs use the continuous closed form")
    c1, c2 = npv0_coefficients(mu1, mu2, rates, paths.times, paths.times[-1])
    return c1 * paths.x1 - c2 * paths.x2


@dataclass
class QuadraticFit:
    """Continuation estimate ``alpha + beta1*x + beta2*x^2`` at one exercise date."""

    alpha: float
    beta1: float
    beta2: float
    n_used: int

    def __call__(self, x):
        return self.alpha + self.beta1 * x + self.beta2 * x * x


@dataclass
class RegressionFit:
    """Per-date fits; ``None`` marks a date where too few paths passed the filter."""

    fits: list[QuadraticFit | None]
    paths_used: list[int]

    @property
    def degenerate(self) -> list[bool]:
        return [f is None for f in self.fits]


@dataclass
class ExerciseBoundary:
    """Nonnegative roots of ``alpha + (beta1 - 1) x + beta2 x^2`` per exercise date.

    ``lower``/``upper`` are NaN where absent. ``sign_at_zero`` is the sign of
    that quadratic at ``x = 0``: positive means small positive NPVs are held
    (continue), negative means they are taken (exercise).
    """

    times: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    sign_at_zero: np.ndarray


@dataclass
class LsmResult:
    V0: float
    v0: float
    P0: float
    NPV0: float
    se: float
    boundary: ExerciseBoundary
    phi: np.ndarray
    times: np.ndarray
    exercise_step: np.ndarray = field(repr=False)
    exercise_flags: np.ndarray = field(repr=False)
    payoffs: np.ndarray = field(repr=False)
    regression: RegressionFit = field(repr=False)

    @property
    def paths_used(self) -> list[int]:
        return self.regression.paths_used


def _fit_quadratic(x: np.ndarray, y: np.ndarray) -> QuadraticFit:
    # basis shrinks when the regressor takes fewer than three distinct values
    # (time 0, or a lattice with few nodes); lstsq on a scaled basis
    distinct = np.unique(x).size
    k = min(3, distinct)
    scale = float(np.max(np.abs(x))) or 1.0
    xs = x / scale
    basis = np.vander(xs, k, increasing=True)
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    coef = np.concatenate([coef, np.zeros(3 - k)])
    return QuadraticFit(float(coef[0]), float(coef[1] / scale), float(coef[2] / scale**2), int(x.size))


def lsm_value(
    npv0: np.ndarray,
    times: np.ndarray | None = None,
    filter_rule: FilterRule = "paper",
    min_paths: int = MIN_REGRESSION_PATHS,
) -> LsmResult:
    """Optimal-stopping value of ``max(NPV0_t, 0)`` over the simulated dates.

    Sweeping backward from the penultimate date, the payoff each path would
    realise by continuing is regressed on the current NPV. The ``"paper"``
    filter keeps paths with a positive payoff now or a positive realised payoff
    later; ``"itm"`` keeps only those positive now. A path exercises where its
    payoff is positive and at least the fitted continuation (ties exercise),
    which cancels whatever it would have collected later. With fewer than
    ``min_paths`` regression paths the continuation is taken as zero.
    """
    npv0 = np.asarray(npv0, dtype=float)
    if npv0.ndim != 2 or npv0.shape[1] < 2:
        raise DomainError("npv0 must be (n_paths, steps+1) with at least one step")
    n, m = npv0.shape
    steps = m - 1
    if times is None:
        times = np.arange(m, dtype=float)
    payoff = np.maximum(npv0, 0.0)

    flags = np.zeros((n, m), dtype=bool)
    flags[:, steps] = payoff[:, steps] > 0
    exercise_step = np.where(flags[:, steps], steps, -1)
    realised = np.where(flags[:, steps], payoff[:, steps], 0.0)

    fits: list[QuadraticFit | None] = [None] * steps
    used = [0] * steps
    for t in range(steps - 1, -1, -1):
        now = payoff[:, t]
        itm = now > 0
        keep = itm | (realised > 0) if filter_rule == "paper" else itm
        used[t] = int(keep.sum())
        if used[t] < min_paths:
            continuation = np.zeros(n)
        else:
            fits[t] = _fit_quadratic(npv0[keep, t], realised[keep])
            continuation = fits[t](npv0[:, t])
        ex = itm & (now >= continuation)
        flags[:, t] = ex
        realised = np.where(ex, now, realised)
        exercise_step = np.where(ex, t, exercise_step)

    V0 = float(realised.mean())
    se = float(realised.std(ddof=1) / math.sqrt(n))
    NPV0 = float(npv0[0, 0])
    P0 = max(NPV0, 0.0)
    regression = RegressionFit(fits, used)
    return LsmResult(
        V0=V0,
        v0=V0 - P0,
        P0=P0,
        NPV0=NPV0,
        se=se,
        boundary=exercise_boundary(regression, times[:-1]),
        phi=exercise_probability(exercise_step, steps),
        times=np.asarray(times, dtype=float),
        exercise_step=exercise_step,
        exercise_flags=flags,
        payoffs=realised,
        regression=regression,
    )


def quadratic_nonnegative_roots(a0: float, a1: float, a2: float) -> list[float]:
    """Sorted real roots ``>= 0`` of ``a0 + a1 x + a2 x^2``."""
    if a2 == 0.0:
        if a1 == 0.0:
            return []
        root = -a0 / a1
        return [root] if root >= 0 else []
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0:
        return []
    # cancellation-free form of the quadratic formula
    q = -0.5 * (a1 + math.copysign(math.sqrt(disc), a1))
    roots = [q / a2, a0 / q] if q != 0.0 else [0.0, 0.0]
    return sorted(r for r in roots if r >= 0)


def exercise_boundary(fit: RegressionFit, times) -> ExerciseBoundary:
    """Where exercising now and the fitted continuation coincide, per date."""
    k = len(fit.fits)
    lower = np.full(k, np.nan)
    upper = np.full(k, np.nan)
    sign = np.zeros(k)
    for t, f in enumerate(fit.fits):
        if f is None:
            continue
        a0, a1, a2 = f.alpha, f.beta1 - 1.0, f.beta2
        sign[t] = np.sign(a0)
        roots = quadratic_nonnegative_roots(a0, a1, a2)
        if roots:
            lower[t] = roots[0]
        if len(roots) == 2:
            upper[t] = roots[1]
    return ExerciseBoundary(np.asarray(times, dtype=float)[:k], lower, upper, sign)


def exercise_probability(exercise_step: np.ndarray, steps: int) -> np.ndarray:
    """Share of paths exercised at or before each date (``-1`` means never)."""
    exercise_step = np.asarray(exercise_step)
    counts = np.bincount(exercise_step[exercise_step >= 0], minlength=steps + 1)
    return np.cumsum(counts) / exercise_step.size


def perfect_foresight_bound(npv0: np.ndarray) -> float:
    """Mean over paths of the best payoff in hindsight; an upper bound on any stopping rule."""
    return float(np.maximum(np.asarray(npv0), 0.0).max(axis=1).mean())


def value_two_factor(
    spec: TwoFactor,
    rates: RatePair,
    horizon: Horizon,
    n_paths: int,
    seed: int,
    workers: int = 1,
    filter_rule: FilterRule = "paper",
) -> LsmResult:
    paths = simulate_paths(spec, horizon, n_paths, seed, workers)
    return lsm_value(npv_paths(paths, rates, spec.mu1, spec.mu2), paths.times, filter_rule)
