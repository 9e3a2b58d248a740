"""Recombining lattices for the annual-step worked example.

The subjective (SDCF) route builds a lattice of profits and discounts the
expected cash flows from every node at both the investor rate and the
market-implied rate. The marketed-asset-disclaimer (MAD) benchmark calibrates
a zero-drift lattice of project values from simulated profit paths and
compares it with a fixed market price.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import _random
from .discounting import Compounding, Horizon, RatePair, SingleStream, present_value, solve_irr
from .errors import ConsistencyError, DomainError

# ties between exercising and continuing go to exercising
CONSISTENCY_TOL = 1e-9


@dataclass
class Lattice:
    """Values at nodes ``(t, j)``; ``j`` counts up-moves, so level ``t`` has ``t+1`` nodes.

    Node ``(t, j)`` has children ``(t+1, j+1)`` (up) and ``(t+1, j)`` (down).
    """

    levels: list[np.ndarray]

    def __post_init__(self):
        self.levels = [np.asarray(level, dtype=float) for level in self.levels]
        for t, level in enumerate(self.levels):
            if level.shape != (t + 1,):
                raise DomainError(f"lattice level {t} must hold {t + 1} nodes, got shape {level.shape}")

    @property
    def steps(self) -> int:
        return len(self.levels) - 1

    @property
    def root(self) -> float:
        return float(self.levels[0][0])

    def __getitem__(self, node: tuple[int, int]) -> float:
        t, j = node
        return float(self.levels[t][j])

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Lattice":
        return Lattice([fn(level) for level in self.levels])

    def nodes(self) -> Iterator[tuple[int, int, float]]:
        for t, level in enumerate(self.levels):
            for j, value in enumerate(level):
                yield t, j, float(value)

    def allclose(self, other: "Lattice", atol: float = 0.0) -> bool:
        return self.steps == other.steps and all(
            np.allclose(a, b, rtol=0.0, atol=atol) for a, b in zip(self.levels, other.levels)
        )


def jarrow_rudd_factors(mu: float, sigma: float) -> tuple[float, float]:
    """Up/down multipliers for a unit step with equal branch probabilities."""
    drift = mu - 0.5 * sigma**2
    return math.exp(drift + sigma), math.exp(drift - sigma)


def build_profit_lattice(x0: float, mu: float, sigma: float, T: int) -> Lattice:
    if sigma < 0:
        raise DomainError("sigma must be >= 0")
    if int(T) != T or T < 1:
        raise DomainError("T must be a positive integer number of years")
    u, d = jarrow_rudd_factors(mu, sigma)
    levels = []
    for t in range(int(T) + 1):
        j = np.arange(t + 1)
        levels.append(x0 * u**j * d ** (t - j))
    return Lattice(levels)


@dataclass
class SdcfLattices:
    p: Lattice
    q: Lattice
    npv0: Lattice


def sdcf_value_lattices(profit: Lattice, mu: float, rates: RatePair) -> SdcfLattices:
    """Investor value, market value and time-0 NPV at every node of a profit lattice.

    Each node's value discounts the expected profits from that node to the
    final date; NPV is pulled back to time 0 at the investor rate.
    """
    if rates.mode is not Compounding.DISCRETE:
        raise DomainError("the annual-step lattice uses discrete-annual compounding")
    T = profit.steps
    horizon = Horizon(T, T)
    unit = SingleStream(1.0, mu)
    p_levels, q_levels, npv_levels = [], [], []
    for t, x in enumerate(profit.levels):
        # present value is linear in the starting level
        p_t = x * present_value(unit, rates.r_p, Compounding.DISCRETE, t, horizon)
        q_t = x * present_value(unit, rates.r_q, Compounding.DISCRETE, t, horizon)
        p_levels.append(p_t)
        q_levels.append(q_t)
        npv_levels.append((p_t - q_t) * (1.0 + rates.r_p) ** (-t))
    return SdcfLattices(Lattice(p_levels), Lattice(q_levels), Lattice(npv_levels))


@dataclass
class MadCalibration:
    """Per-step volatility ``s`` and dividend yield ``delta`` of simulated project values.

    ``s[t-1]`` and ``delta[t-1]`` drive the step from year ``t-1`` to ``t``.
    """

    s: np.ndarray
    delta: np.ndarray
    n_paths: int
    seed: int
    mode: Compounding = Compounding.CONTINUOUS
    p_bar: np.ndarray = field(default=None, repr=False)
    x_bar: np.ndarray = field(default=None, repr=False)


def simulate_profit_paths(x0: float, mu: float, sigma: float, T: int, n_paths: int, seed: int, workers: int = 1) -> np.ndarray:
    """Annual GBM profit paths, shape ``(n_paths, T+1)``, first column ``x0``."""
    z = _random.standard_normals(seed, n_paths, (T,), workers)
    log_steps = (mu - 0.5 * sigma**2) + sigma * z
    x = np.empty((n_paths, T + 1))
    x[:, 0] = x0
    x[:, 1:] = x0 * np.exp(np.cumsum(log_steps, axis=1))
    return x


def path_present_values(x: np.ndarray, r_p: float, mode: Compounding | str = Compounding.CONTINUOUS) -> np.ndarray:
    """Value at each year of the realised profits from that year on, discounted at ``r_p``."""
    mode = Compounding(mode)
    T = x.shape[1] - 1
    k = np.arange(T + 1)
    discount = np.exp(-r_p * k) if mode is Compounding.CONTINUOUS else (1.0 + r_p) ** (-k)
    p = np.empty_like(x)
    for t in range(T + 1):
        p[:, t] = x[:, t:] @ discount[: T + 1 - t]
    return p


def mad_calibrate(
    x0: float,
    mu: float,
    sigma: float,
    r_p: float,
    T: int,
    n_paths: int,
    seed: int,
    mode: Compounding | str = Compounding.CONTINUOUS,
    workers: int = 1,
) -> MadCalibration:
    """Estimate project-value volatilities and dividend yields from simulated profit paths.

    The log change in year ``t`` compares path value plus that year's profit
    with the cross-sectional mean value one year earlier; ``s_t`` is its
    cross-sectional standard deviation. The dividend yield is mean profit over
    mean value in the previous year.
    """
    mode = Compounding(mode)
    if x0 <= 0:
        raise DomainError("x0 must be > 0 for log returns")
    if n_paths < 2:
        raise DomainError("need at least 2 paths")
    if n_paths < 1000:
        warnings.warn(f"calibration undersized: {n_paths} paths (< 1000)", stacklevel=2)
    x = simulate_profit_paths(x0, mu, sigma, T, n_paths, seed, workers)
    p = path_present_values(x, r_p, mode)
    p_bar = p.mean(axis=0)
    x_bar = x.mean(axis=0)
    log_changes = np.log((p[:, 1:] + x[:, 1:]) / p_bar[:-1])
    s = log_changes.std(axis=0, ddof=1)
    delta = x_bar[:-1] / p_bar[:-1]
    return MadCalibration(s=s, delta=delta, n_paths=n_paths, seed=seed, mode=mode, p_bar=p_bar, x_bar=x_bar)


def mad_value_lattice(p0: float, cal: MadCalibration) -> Lattice:
    """Zero-drift lattice of ex-dividend project values.

    With step-dependent volatilities an up-then-down path and a down-then-up
    path end at different values; node ``(t, j)`` takes the value reached by
    ``t - j`` down-moves followed by ``j`` up-moves, i.e. every up-child is
    grown from the node directly below-left, and only the lowest node grows
    from a down-move.
    """
    if not p0 > 0:
        raise DomainError("p0 must be > 0")
    levels = [np.array([p0])]
    for s, delta in zip(cal.s, cal.delta):
        u, d = jarrow_rudd_factors(0.0, s)
        prev = levels[-1] * (1.0 - delta)
        nxt = np.empty(prev.size + 1)
        nxt[1:] = prev * u
        nxt[0] = prev[0] * d
        levels.append(nxt)
    return Lattice(levels)


def backward_induct(payoff: Lattice, pi: float = 0.5) -> tuple[Lattice, float]:
    """Value of the right to take ``payoff`` at any node, by dynamic programming.

    Payoffs are already in time-0 terms, so no discounting enters the
    recursion.
    """
    if not 0 <= pi <= 1:
        raise DomainError("pi must lie in [0, 1]")
    values = [None] * (payoff.steps + 1)
    values[-1] = payoff.levels[-1].copy()
    for t in range(payoff.steps - 1, -1, -1):
        nxt = values[t + 1]
        cont = pi * nxt[1:] + (1.0 - pi) * nxt[:-1]
        values[t] = np.maximum(payoff.levels[t], cont)
    value = Lattice(values)
    return value, value.root


def value_of_delay(V0: float, P0: float) -> float:
    if V0 < P0 - CONSISTENCY_TOL:
        raise ConsistencyError(f"option value {V0} below immediate payoff {P0}")
    return V0 - P0


@dataclass
class BinomialValuation:
    engine: str
    V0: float
    v0: float
    P0: float
    NPV0: float
    r_p: float
    r_q: float | None
    lattices: dict[str, Lattice]
    calibration: MadCalibration | None = None


def value_sdcf(x0: float, mu: float, sigma: float, r_p: float, T: int, q0: float | None = None, r_q: float | None = None) -> BinomialValuation:
    """Run the SDCF lattice end to end. Give ``q0`` to back out ``r_q``, or ``r_q`` directly."""
    if (q0 is None) == (r_q is None):
        raise DomainError("give exactly one of q0 or r_q")
    if r_q is None:
        r_q = solve_irr(SingleStream(x0, mu, sigma), q0, Compounding.DISCRETE, Horizon(T, T))
    rates = RatePair(r_p, r_q, Compounding.DISCRETE)
    profit = build_profit_lattice(x0, mu, sigma, T)
    sd = sdcf_value_lattices(profit, mu, rates)
    payoff = sd.npv0.map(lambda v: np.maximum(v, 0.0))
    value, V0 = backward_induct(payoff)
    P0 = payoff.root
    return BinomialValuation(
        engine="binomial-sdcf",
        V0=V0,
        v0=value_of_delay(V0, P0),
        P0=P0,
        NPV0=sd.npv0.root,
        r_p=r_p,
        r_q=r_q,
        lattices={"profit": profit, "p": sd.p, "q": sd.q, "npv0": sd.npv0, "payoff": payoff, "value": value},
    )


def value_mad(
    x0: float,
    mu: float,
    sigma: float,
    r_p: float,
    T: int,
    q0: float,
    n_paths: int = 10_000,
    seed: int = 0,
    mode: Compounding | str = Compounding.CONTINUOUS,
    workers: int = 1,
    p0: float | None = None,
) -> BinomialValuation:
    """Run the MAD benchmark end to end against a fixed market price ``q0``.

    The lattice starts from the annual DCF value of expected profits at
    ``r_p`` unless ``p0`` is given.
    """
    if p0 is None:
        p0 = present_value(SingleStream(x0, mu), r_p, Compounding.DISCRETE, 0, Horizon(T, T))
    cal = mad_calibrate(x0, mu, sigma, r_p, T, n_paths, seed, mode, workers)
    project = mad_value_lattice(p0, cal)
    npv0 = project.map(lambda v: v - q0)
    payoff = npv0.map(lambda v: np.maximum(v, 0.0))
    value, V0 = backward_induct(payoff)
    P0 = payoff.root
    return BinomialValuation(
        engine="binomial-mad",
        V0=V0,
        v0=value_of_delay(V0, P0),
        P0=P0,
        NPV0=npv0.root,
        r_p=r_p,
        r_q=None,
        lattices={"project": project, "npv0": npv0, "payoff": payoff, "value": value},
        calibration=cal,
    )


def sample_lattice_paths(steps: int, n_paths: int, seed: int, workers: int = 1) -> np.ndarray:
    """Up-counts ``j`` along random walks on a lattice, shape ``(n_paths, steps+1)``."""
    ups = _random.coin_flips(seed, n_paths, steps, workers)
    j = np.zeros((n_paths, steps + 1), dtype=np.int64)
    j[:, 1:] = np.cumsum(ups, axis=1)
    return j
