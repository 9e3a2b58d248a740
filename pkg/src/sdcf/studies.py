"""Parameter sweeps over the two-factor LSM engine, with property verdicts.

Each study expands a :class:`SweepSpec` into panels of cells, values every
cell, and checks the qualitative claims for that study. Comparisons between
cells are paired: by default every cell reuses the master seed (common random
numbers), so differences are estimated path by path and tested at three
standard errors of the paired difference.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from . import _random
from .discounting import Horizon, RatePair, TwoFactor
from .errors import DomainError
from .lsm import LsmResult, lsm_value, npv_paths, simulate_paths
from .output import csv_text, json_text
from .risk import FactorStructure, RiskPremia, calibrate_premia, hedged_scenario, loadings_for_correlation

SE_MULTIPLE = 3.0

STUDIES = ("disagreement", "npv-mitigation", "boundary", "volatility", "hedging", "idiosyncratic")

BASE = {
    "T": 5.0,
    "x10": 5.0,
    "x20": 5.0,
    "mu1": 0.3,
    "mu2": 0.3,
    "sigma1": 0.3,
    "sigma2": 0.3,
    "rho": 0.3,
    "r_p": 0.3,
    "r_q": 0.3,
}


def _lin(lo, hi, n):
    return tuple(float(v) for v in np.linspace(lo, hi, n))


DEFAULT_AXES: dict[str, dict[str, tuple[float, ...]]] = {
    "disagreement": {"r_p": _lin(0.01, 0.99, 9), "r_q": _lin(0.01, 0.99, 9), "x20": (5.0, 4.5, 4.8, 5.2, 5.5)},
    "npv-mitigation": {"r_p": _lin(0.01, 0.99, 9), "r_q": _lin(0.01, 0.99, 9), "x20": (4.5, 4.8, 5.2, 5.5)},
    "boundary": {"r_p": (0.25, 0.27, 0.28, 0.30, 0.32, 0.33, 0.35)},
    "volatility": {
        "sigma1_a": _lin(0.05, 0.5, 6),
        "r_p_a": _lin(0.2, 0.9, 8),
        "sigma1": _lin(0.10, 0.35, 6),
        "sigma2": _lin(0.10, 0.35, 6),
        "rho": (-1.0, 0.0, 1.0),
    },
    "hedging": {"h": (0.0, 0.25, 0.5, 0.75, 1.0), "mu_star": (0.1, 0.3, 0.5)},
    "idiosyncratic": {"lambda_p": (0.0, 1.0, 3.0, 5.0), "sigma_ids": _lin(0.05, 1.0, 12), "seed_offset": (0.0, 1.0, 2.0)},
}

# fixed parameters each study accepts besides the base case
DEFAULT_FIXED: dict[str, dict[str, Any]] = {
    "disagreement": {},
    "npv-mitigation": {},
    "boundary": {"r_q": 0.30},
    "volatility": {"r_q_a": 0.30, "rates_b": (0.20, 0.30), "rates_c": (0.30, 0.20)},
    "hedging": {
        "surfaces": ((0.3, 0.5), (0.3, 0.3), (0.6, 0.3)),
        "r_p0": 0.28,
        "r_q0": 0.30,
        "lambda0": 0.3,
        "drift": "hedged",
    },
    "idiosyncratic": {"lambda0": 0.3, "lambda_q": 0.0, "rho_star": math.sqrt(0.3), "mu_star": 0.3, "peak_below": 0.7},
}


@dataclass(frozen=True)
class Scenario:
    spec: TwoFactor
    rates: RatePair
    horizon: Horizon


def base_case(steps: int | None = None) -> Scenario:
    """Equal revenue and cost (both 5), every rate and growth parameter 30%, five years."""
    p = BASE
    l1, l2 = loadings_for_correlation(p["rho"])
    spec = TwoFactor(p["x10"], p["x20"], p["mu1"], p["mu2"], p["sigma1"], p["sigma2"], l1, l2)
    T = p["T"]
    return Scenario(spec, RatePair(p["r_p"], p["r_q"]), Horizon(T, int(T) if steps is None else steps))


@dataclass
class SweepSpec:
    """What to sweep. Unset axes and fixed parameters take the study defaults."""

    study: str
    axes: dict[str, tuple[float, ...]] = field(default_factory=dict)
    fixed: dict[str, Any] = field(default_factory=dict)
    n_paths: int = 10_000
    steps: int = 5
    seed: int = 0
    workers: int = 1
    crn: bool = True

    def __post_init__(self):
        if self.study not in STUDIES:
            raise DomainError(f"unknown study {self.study!r}; expected one of {', '.join(STUDIES)}")
        known_axes = DEFAULT_AXES[self.study]
        for name, values in self.axes.items():
            if name not in known_axes:
                raise DomainError(f"study {self.study!r} has no axis {name!r}")
            if len(values) < 2:
                raise DomainError(f"axis {name!r} needs at least 2 values")
        self.axes = {name: tuple(float(v) for v in self.axes.get(name, default)) for name, default in known_axes.items()}
        unknown = set(self.fixed) - set(DEFAULT_FIXED[self.study])
        if unknown:
            raise DomainError(f"study {self.study!r} has no fixed parameter(s) {sorted(unknown)}")
        self.fixed = {**DEFAULT_FIXED[self.study], **self.fixed}
        if self.n_paths < 2 or self.steps < 1:
            raise DomainError("need n_paths >= 2 and steps >= 1")

    @property
    def horizon(self) -> Horizon:
        return Horizon(BASE["T"], self.steps)


@dataclass
class Cell:
    panel: str
    params: dict[str, float]
    V0: float
    v0: float
    NPV0: float
    P0: float
    se: float
    phi_T: float
    seed: int
    extras: dict[str, float] = field(default_factory=dict)
    result: LsmResult | None = field(default=None, repr=False, compare=False)


@dataclass
class Panel:
    name: str
    axes: dict[str, tuple[float, ...]]
    cells: list[Cell]

    def __post_init__(self):
        expected = math.prod(len(v) for v in self.axes.values())
        if len(self.cells) != expected:
            raise DomainError(f"panel {self.name!r}: {len(self.cells)} cells for {expected} axis combinations")

    def cell(self, **params) -> Cell:
        for c in self.cells:
            if all(math.isclose(c.params[k], v, abs_tol=1e-12) for k, v in params.items()):
                return c
        raise KeyError(params)


@dataclass
class Verdict:
    """Outcome of one property check.

    ``margin`` is the worst slack over all comparisons (``>= 0`` passes);
    ``se`` is the standard error used at that worst comparison.
    """

    name: str
    rule: str
    passed: bool
    margin: float
    se: float
    n_checks: int
    worst: str


@dataclass
class GridReport:
    study: str
    spec: SweepSpec
    panels: list[Panel]
    verdicts: list[Verdict]

    @property
    def cells(self) -> list[Cell]:
        return [c for p in self.panels for c in p.cells]

    def panel(self, name: str) -> Panel:
        for p in self.panels:
            if p.name == name:
                return p
        raise KeyError(name)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


class _Tally:
    """Keeps the worst slack seen for one property."""

    def __init__(self, name: str, rule: str):
        self.name, self.rule = name, rule
        self.margin, self.se, self.n, self.worst = math.inf, 0.0, 0, ""

    def add(self, slack: float, se: float, where: str):
        self.n += 1
        if slack < self.margin:
            self.margin, self.se, self.worst = float(slack), float(se), where

    def at_least(self, lhs: tuple[float, float], rhs_label: str, where: str):
        """Record ``diff + 3 SE >= 0`` for a paired difference ``(diff, se)``."""
        diff, se = lhs
        self.add(diff + SE_MULTIPLE * se, se, f"{where}: {rhs_label} diff={diff:.6g}")

    def exact_zero(self, value: float, where: str):
        self.add(0.0 - abs(value), 0.0, f"{where}: value={value!r}")

    def verdict(self) -> Verdict:
        margin = self.margin if self.n else 0.0
        return Verdict(self.name, self.rule, bool(self.n) and margin >= 0, margin, self.se, self.n, self.worst)


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class _Job:
    panel: str
    params: tuple[tuple[str, float], ...]
    spec: TwoFactor
    rates: RatePair
    seed: int
    mu: tuple[float, float] | None = None


def _cell_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=(index,)).generate_state(1)[0])


def _evaluate(jobs: list[_Job], sweep: SweepSpec, keep_results: bool = True) -> list[Cell]:
    """Value every job; jobs sharing a cash-flow spec and seed share one path set."""
    groups: dict[tuple, list[int]] = {}
    for i, job in enumerate(jobs):
        groups.setdefault((job.spec, job.seed), []).append(i)
    horizon = sweep.horizon

    def run(key):
        spec, seed = key
        paths = simulate_paths(spec, horizon, sweep.n_paths, seed)
        out = []
        for i in groups[key]:
            job = jobs[i]
            res = lsm_value(npv_paths(paths, job.rates, spec.mu1, spec.mu2), paths.times)
            out.append((i, res))
        return out

    cells: list[Cell | None] = [None] * len(jobs)
    for chunk in _random.pmap(run, list(groups), sweep.workers):
        for i, res in chunk:
            job = jobs[i]
            cells[i] = Cell(
                panel=job.panel,
                params=dict(job.params),
                V0=res.V0,
                v0=res.v0,
                NPV0=res.NPV0,
                P0=res.P0,
                se=res.se,
                phi_T=float(res.phi[-1]),
                seed=job.seed,
                result=res if keep_results else None,
            )
    return cells


def _jobs_for(sweep: SweepSpec, panel: str, axes: dict[str, tuple[float, ...]], build: Callable[..., tuple[TwoFactor, RatePair]], offset: int = 0) -> list[_Job]:
    jobs = []
    names = list(axes)
    for k, combo in enumerate(itertools.product(*axes.values())):
        params = dict(zip(names, combo))
        spec, rates = build(**params)
        seed = sweep.seed if sweep.crn else _cell_seed(sweep.seed, offset + k)
        jobs.append(_Job(panel, tuple(params.items()), spec, rates, seed))
    return jobs


def _panels(sweep: SweepSpec, layout: list[tuple[str, dict[str, tuple[float, ...]], Callable]]) -> list[Panel]:
    jobs, sizes, offset = [], [], 0
    for name, axes, build in layout:
        panel_jobs = _jobs_for(sweep, name, axes, build, offset)
        offset += len(panel_jobs)
        jobs.extend(panel_jobs)
        sizes.append(len(panel_jobs))
    cells = _evaluate(jobs, sweep)
    panels, start = [], 0
    for (name, axes, _), n in zip(layout, sizes):
        panels.append(Panel(name, axes, cells[start : start + n]))
        start += n
    return panels


def paired_v0(a: Cell, b: Cell) -> tuple[float, float]:
    """``v0(a) - v0(b)`` and its standard error, paired when both cells share paths."""
    ra, rb = a.result, b.result
    if a.seed == b.seed and ra is not None and rb is not None and ra.payoffs.size == rb.payoffs.size:
        d = ra.payoffs - rb.payoffs
        return float(d.mean() - (a.P0 - b.P0)), float(d.std(ddof=1) / math.sqrt(d.size))
    return a.v0 - b.v0, math.hypot(a.se, b.se)


def paired_phi(a: Cell, b: Cell) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise ``phi(a) - phi(b)`` and standard errors of the differences."""
    ra, rb = a.result, b.result
    steps = ra.phi.size - 1
    t = np.arange(steps + 1)

    def indicators(r):
        s = r.exercise_step[:, None]
        return ((s >= 0) & (s <= t)).astype(float)

    if a.seed == b.seed:
        d = indicators(ra) - indicators(rb)
        return d.mean(axis=0), d.std(axis=0, ddof=1) / math.sqrt(d.shape[0])
    ia, ib = indicators(ra), indicators(rb)
    se = np.hypot(ia.std(axis=0, ddof=1) / math.sqrt(ia.shape[0]), ib.std(axis=0, ddof=1) / math.sqrt(ib.shape[0]))
    return ia.mean(axis=0) - ib.mean(axis=0), se


def _two_factor(x20=None, sigma1=None, sigma2=None, rho=None) -> TwoFactor:
    p = BASE
    l1, l2 = loadings_for_correlation(p["rho"] if rho is None else rho)
    return TwoFactor(
        p["x10"],
        p["x20"] if x20 is None else x20,
        p["mu1"],
        p["mu2"],
        p["sigma1"] if sigma1 is None else sigma1,
        p["sigma2"] if sigma2 is None else sigma2,
        l1,
        l2,
    )


# ------------------------------------------------------------------- studies


def run_disagreement_grid(sweep: SweepSpec) -> GridReport:
    """v0 over investor and market rates, one panel per initial cost level."""
    ax = sweep.axes
    layout = []
    for x20 in ax["x20"]:

        def build(r_p, r_q, x20=x20):
            return _two_factor(x20=x20), RatePair(r_p, r_q)

        layout.append((f"x20={x20:g}", {"r_p": ax["r_p"], "r_q": ax["r_q"]}, build))
    panels = _panels(sweep, layout)
    verdicts = []

    diag = _Tally("a_diagonal_zero", "r_p == r_q implies v0 == 0 exactly")
    for panel in panels:
        for c in panel.cells:
            if c.params["r_p"] == c.params["r_q"]:
                diag.exact_zero(c.v0, f"{panel.name} r_p=r_q={c.params['r_p']:g}")
    verdicts.append(diag.verdict())

    base_panel = next((p for p in panels if math.isclose(float(p.name.split("=")[1]), BASE["x20"])), None)
    if base_panel is not None:
        for name, fixed, moving in (("b_abs_difference_fixed_r_p", "r_p", "r_q"), ("b_abs_difference_fixed_r_q", "r_q", "r_p")):
            tally = _Tally(name, f"at fixed {fixed}, v0 nondecreasing as |r_p - r_q| grows along {moving} (3 SE)")
            for f in ax[fixed]:
                line = sorted((c for c in base_panel.cells if c.params[fixed] == f), key=lambda c: c.params[moving])
                for near, far in zip(line, line[1:]):
                    # walk away from the diagonal on each side
                    if near.params[moving] >= f:
                        tally.at_least(paired_v0(far, near), f"v0({moving}={far.params[moving]:g}) - v0({near.params[moving]:g})", f"{fixed}={f:g}")
                for near, far in zip(line[::-1], line[::-1][1:]):
                    if near.params[moving] <= f:
                        tally.at_least(paired_v0(far, near), f"v0({moving}={far.params[moving]:g}) - v0({near.params[moving]:g})", f"{fixed}={f:g}")
            verdicts.append(tally.verdict())

    by_x20 = {float(p.name.split("=")[1]): p for p in panels}
    pairs = [(hi, lo) for hi, lo in ((4.5, 4.8), (5.5, 5.2)) if hi in by_x20 and lo in by_x20]
    if pairs:
        tally = _Tally("c_npv_mitigation", "v0 at |x10 - x20| = 0.5 <= v0 at |x10 - x20| = 0.2, cellwise (3 SE)")
        for far_x, near_x in pairs:
            for c_far, c_near in zip(by_x20[far_x].cells, by_x20[near_x].cells):
                tally.at_least(paired_v0(c_near, c_far), f"v0(x20={near_x:g}) - v0(x20={far_x:g})", f"r_p={c_far.params['r_p']:g} r_q={c_far.params['r_q']:g}")
        verdicts.append(tally.verdict())
    return GridReport(sweep.study, sweep, panels, verdicts)


def run_boundary_study(sweep: SweepSpec) -> GridReport:
    """Exercise boundaries and cumulative exercise probabilities against a fixed market rate."""
    r_q = sweep.fixed["r_q"]

    def build(r_p):
        return _two_factor(), RatePair(r_p, r_q)

    panels = _panels(sweep, [("phi", {"r_p": sweep.axes["r_p"]}, build)])
    cells = panels[0].cells
    for c in cells:
        res = c.result
        for t, prob in enumerate(res.phi):
            c.extras[f"phi_{t}"] = float(prob)
        for t, (lo, hi) in enumerate(zip(res.boundary.lower, res.boundary.upper)):
            c.extras[f"lower_{t}"] = float(lo)
            c.extras[f"upper_{t}"] = float(hi)

    verdicts = []
    zero = _Tally("phi_zero_at_agreement", "r_p == r_q implies no exercise at any date")
    for c in cells:
        if c.params["r_p"] == r_q:
            zero.exact_zero(float(np.max(c.result.phi)), f"r_p={c.params['r_p']:g}")
    verdicts.append(zero.verdict())

    for name, side in (("phi_ordered_below", -1), ("phi_ordered_above", 1)):
        line = sorted((c for c in cells if np.sign(c.params["r_p"] - r_q) == side), key=lambda c: abs(c.params["r_p"] - r_q))
        tally = _Tally(name, "phi(t) nondecreasing in |r_p - r_q| at every date (3 SE)")
        for near, far in zip(line, line[1:]):
            diff, se = paired_phi(far, near)
            for t in range(diff.size):
                tally.at_least((diff[t], se[t]), f"phi(r_p={far.params['r_p']:g}) - phi(r_p={near.params['r_p']:g})", f"t={t}")
        verdicts.append(tally.verdict())
    return GridReport(sweep.study, sweep, panels, verdicts)


def run_volatility_grid(sweep: SweepSpec) -> GridReport:
    """Revenue and cost volatility sweeps: deterministic costs, then three correlations."""
    ax, fx = sweep.axes, sweep.fixed

    def build_a(sigma1, r_p):
        return _two_factor(sigma1=sigma1, sigma2=0.0), RatePair(r_p, fx["r_q_a"])

    layout = [("a:sigma2=0", {"sigma1": ax["sigma1_a"], "r_p": ax["r_p_a"]}, build_a)]
    for label in ("b", "c"):
        r_p, r_q = fx[f"rates_{label}"]
        for rho in ax["rho"]:

            def build(sigma1, sigma2, rho=rho, r_p=r_p, r_q=r_q):
                return _two_factor(sigma1=sigma1, sigma2=sigma2, rho=rho), RatePair(r_p, r_q)

            layout.append((f"{label}:rho={rho:g}", {"sigma1": ax["sigma1"], "sigma2": ax["sigma2"]}, build))
    panels = _panels(sweep, layout)
    verdicts = []

    a = panels[0]
    tally = _Tally("a_increasing_in_sigma1", "sigma2 = 0: v0 nondecreasing in sigma1 for every r_p != r_q (3 SE)")
    for r_p in ax["r_p_a"]:
        if r_p == fx["r_q_a"]:
            continue
        line = sorted((c for c in a.cells if c.params["r_p"] == r_p), key=lambda c: c.params["sigma1"])
        for lo, hi in zip(line, line[1:]):
            tally.at_least(paired_v0(hi, lo), f"v0(sigma1={hi.params['sigma1']:g}) - v0({lo.params['sigma1']:g})", f"r_p={r_p:g}")
    verdicts.append(tally.verdict())

    certain = _Tally("b_certain_when_perfectly_correlated", "rho = 1 and sigma1 == sigma2 imply v0 == 0 exactly")
    order = _Tally("c_ordered_by_rho", "v0(rho=-1) >= v0(rho=0) >= v0(rho=1) cellwise (3 SE)")
    for label in ("b", "c"):
        mine = {float(p.name.split("=")[1]): p for p in panels if p.name.startswith(label + ":")}
        if 1.0 in mine:
            for c in mine[1.0].cells:
                if c.params["sigma1"] == c.params["sigma2"]:
                    certain.exact_zero(c.v0, f"{label} sigma={c.params['sigma1']:g}")
        rhos = sorted(mine)
        for lo_rho, hi_rho in zip(rhos, rhos[1:]):
            for c_lo, c_hi in zip(mine[lo_rho].cells, mine[hi_rho].cells):
                tally_where = f"{label} sigma1={c_lo.params['sigma1']:g} sigma2={c_lo.params['sigma2']:g}"
                order.at_least(paired_v0(c_lo, c_hi), f"v0(rho={lo_rho:g}) - v0(rho={hi_rho:g})", tally_where)
    verdicts += [certain.verdict(), order.verdict()]
    return GridReport(sweep.study, sweep, panels, verdicts)


def run_hedging_study(sweep: SweepSpec) -> GridReport:
    """v0 over hedge ratio and growth rate, for agreed (a) and disputed (b) systematic premia."""
    ax, fx = sweep.axes, sweep.fixed
    layout = []
    for case in ("a", "b"):
        for rho, sigma in fx["surfaces"]:
            rho_star = math.sqrt(rho)
            premia = calibrate_premia(case, rho_star, sigma, fx["r_p0"], fx["r_q0"], fx["lambda0"])

            def build(h, mu_star, rho_star=rho_star, sigma=sigma, premia=premia):
                fs = FactorStructure(rho_star, sigma, mu_star, h)
                return hedged_scenario(fs, premia, BASE["x10"], BASE["x20"], fx["drift"])

            layout.append((f"{case}:rho={rho:g},sigma={sigma:g}", {"h": ax["h"], "mu_star": ax["mu_star"]}, build))
    panels = _panels(sweep, layout)

    flat = _Tally("a_flat_in_h", "agreed systematic premium: |v0(h) - v0(h=0)| within 3 SE")
    falling = _Tally("b_nonincreasing_in_h", "disputed systematic premium: v0 nonincreasing in h (3 SE)")
    zero = _Tally("b_zero_at_full_hedge", "disputed systematic premium: v0(h=1) == 0 exactly")
    h1 = max(ax["h"])
    for panel in panels:
        case = panel.name[0]
        for mu in ax["mu_star"]:
            line = sorted((c for c in panel.cells if c.params["mu_star"] == mu), key=lambda c: c.params["h"])
            where = f"{panel.name} mu*={mu:g}"
            if case == "a":
                ref = line[0]
                for c in line[1:]:
                    diff, se = paired_v0(c, ref)
                    flat.add(SE_MULTIPLE * se - abs(diff), se, f"{where} h={c.params['h']:g}: diff={diff:.6g}")
            else:
                for lo, hi in zip(line, line[1:]):
                    falling.at_least(paired_v0(lo, hi), f"v0(h={lo.params['h']:g}) - v0(h={hi.params['h']:g})", where)
                if h1 == 1.0:
                    zero.exact_zero(line[-1].v0, where)
    verdicts = [flat.verdict(), falling.verdict()]
    if h1 == 1.0:
        verdicts.append(zero.verdict())
    return GridReport(sweep.study, sweep, panels, verdicts)


def run_idiosyncratic_study(sweep: SweepSpec) -> GridReport:
    """v0 over idiosyncratic volatility and the investor's idiosyncratic premium, market premium zero."""
    ax, fx = sweep.axes, sweep.fixed
    rho_star = fx["rho_star"]
    scale = math.sqrt(1.0 - rho_star**2)
    if scale == 0:
        raise DomainError("rho_star = +-1 leaves no idiosyncratic risk")
    lambda_ps = ax["lambda_p"]
    sigmas = ax["sigma_ids"]
    jobs = []
    for offset in ax["seed_offset"]:
        seed = sweep.seed + int(offset)
        for lp in lambda_ps:
            premia = RiskPremia(fx["lambda0"], fx["lambda0"], lp, fx["lambda_q"])
            for s in sigmas:
                fs = FactorStructure(rho_star, s / scale, fx["mu_star"], 0.0)
                spec, rates = hedged_scenario(fs, premia, BASE["x10"], BASE["x20"], "fixed")
                jobs.append(_Job("idiosyncratic", (("seed_offset", offset), ("lambda_p", lp), ("sigma_ids", s)), spec, rates, seed))
    if not sweep.crn:
        jobs = [
            _Job(j.panel, j.params, j.spec, j.rates, _cell_seed(sweep.seed, k)) for k, j in enumerate(jobs)
        ]
    cells = _evaluate(jobs, sweep)
    panel = Panel("idiosyncratic", {"seed_offset": ax["seed_offset"], "lambda_p": lambda_ps, "sigma_ids": sigmas}, cells)

    agree = _Tally("zero_when_premia_agree", "lambda_p == lambda_q implies v0 == 0 exactly")
    positive = _Tally("positive_when_premia_differ", "lambda_p != lambda_q implies v0 > 3 SE")
    for c in cells:
        where = f"seed+{c.params['seed_offset']:g} lambda_p={c.params['lambda_p']:g} sigma_ids={c.params['sigma_ids']:.4g}"
        if c.params["lambda_p"] == fx["lambda_q"]:
            agree.exact_zero(c.v0, where)
        else:
            positive.add(c.v0 - SE_MULTIPLE * c.se, c.se, where)
    verdicts = [agree.verdict(), positive.verdict()]

    top = max(lambda_ps)
    peak = _Tally(
        "interior_maximum",
        f"lambda_p={top:g}: v0 rises then falls in sigma_ids, peak below {fx['peak_below']:g}, stable across seeds within one grid cell",
    )
    argmaxes = []
    for offset in ax["seed_offset"]:
        line = sorted((c for c in cells if c.params["seed_offset"] == offset and c.params["lambda_p"] == top), key=lambda c: c.params["sigma_ids"])
        v = np.array([c.v0 for c in line])
        k = int(np.argmax(v))
        argmaxes.append(k)
        where = f"seed+{offset:g} peak at sigma_ids={line[k].params['sigma_ids']:.4g}"
        if 0 < k < len(line) - 1:
            rise = paired_v0(line[k], line[0])
            fall = paired_v0(line[k], line[-1])
            peak.at_least(rise, "v0(peak) - v0(first)", where)
            peak.at_least(fall, "v0(peak) - v0(last)", where)
            peak.add(fx["peak_below"] - line[k].params["sigma_ids"], 0.0, where + " vs cap")
        else:
            peak.add(-1.0, 0.0, where + " (edge)")
    peak.add(1.0 - (max(argmaxes) - min(argmaxes)), 0.0, f"peak grid indices {argmaxes}")
    verdicts.append(peak.verdict())
    return GridReport(sweep.study, sweep, [panel], verdicts)


RUNNERS: dict[str, Callable[[SweepSpec], GridReport]] = {
    "disagreement": run_disagreement_grid,
    "npv-mitigation": run_disagreement_grid,
    "boundary": run_boundary_study,
    "volatility": run_volatility_grid,
    "hedging": run_hedging_study,
    "idiosyncratic": run_idiosyncratic_study,
}


def run_study(sweep: SweepSpec) -> GridReport:
    return RUNNERS[sweep.study](sweep)


# ------------------------------------------------------------------- output


OUTPUT_COLUMNS = ("V0", "v0", "NPV0", "P0", "se", "phi_T")


def report_csv(report: GridReport) -> str:
    """One row per cell: panel, axis values, outputs, then study-specific extras."""
    axis_names = list(dict.fromkeys(k for c in report.cells for k in c.params))
    extra_names = list(dict.fromkeys(k for c in report.cells for k in c.extras))
    header = ["panel", *axis_names, *OUTPUT_COLUMNS, "seed", *extra_names]
    rows = []
    for c in report.cells:
        row = [c.panel]
        row += [float(c.params[k]) if k in c.params else "" for k in axis_names]
        row += [float(getattr(c, k)) for k in OUTPUT_COLUMNS]
        row += [c.seed]
        row += [float(c.extras[k]) if k in c.extras else "" for k in extra_names]
        rows.append(row)
    return csv_text(header, rows)


def verdict_document(report: GridReport) -> dict:
    spec = report.spec
    return {
        "study": report.study,
        "n_paths": spec.n_paths,
        "steps": spec.steps,
        "seed": spec.seed,
        "crn": spec.crn,
        "se_multiple": SE_MULTIPLE,
        "passed": report.passed,
        "verdicts": [asdict(v) for v in report.verdicts],
    }


def render_report(report: GridReport) -> dict[str, str]:
    """File name to contents for a study's CSV grid and JSON verdicts."""
    return {
        f"{report.study}_grid.csv": report_csv(report),
        f"{report.study}_verdicts.json": json_text(verdict_document(report)),
    }
