"""Scenario and sweep configuration documents, validated with pydantic.

A scenario names an engine, a cash-flow block, exactly one of a ``rates`` or
``premia`` block, a horizon and run settings. Everything is checked here so
that the engines never see an inconsistent scenario.
"""

from __future__ import annotations

from typing import Annotated, Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .discounting import Compounding, Horizon, SingleStream, TwoFactor
from .errors import DomainError
from .risk import FactorStructure, RiskPremia, loadings_for_correlation
from .studies import DEFAULT_AXES, DEFAULT_FIXED, STUDIES, SweepSpec

Engine = Literal["binomial-sdcf", "binomial-mad", "lsm"]
Mode = Literal["continuous", "discrete-annual"]

DEFAULT_MODE = {"binomial-sdcf": "discrete-annual", "binomial-mad": "continuous", "lsm": "continuous"}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _domain(build):
    try:
        return build()
    except DomainError as exc:
        raise ValueError(str(exc)) from None


class SingleCashflow(_Strict):
    kind: Literal["single"]
    x0: float
    mu: float
    sigma: float = 0.0

    def build(self) -> SingleStream:
        return SingleStream(self.x0, self.mu, self.sigma)

    @model_validator(mode="after")
    def _check(self):
        _domain(self.build)
        return self


class TwoFactorCashflow(_Strict):
    """Revenue ``x1`` and cost ``x2``. Give loadings ``rho1``/``rho2`` or a correlation ``rho``."""

    kind: Literal["two-factor"]
    x10: float
    x20: float
    mu1: float
    mu2: float
    sigma1: float = 0.0
    sigma2: float = 0.0
    rho1: Optional[float] = None
    rho2: Optional[float] = None
    rho: Optional[float] = None

    @model_validator(mode="after")
    def _check(self):
        loadings = (self.rho1 is not None) or (self.rho2 is not None)
        if loadings and self.rho is not None:
            raise ValueError("give either rho or rho1/rho2, not both")
        _domain(self.build)
        return self

    def build(self) -> TwoFactor:
        if self.rho is not None:
            r1, r2 = loadings_for_correlation(self.rho)
        else:
            r1, r2 = self.rho1 or 0.0, self.rho2 or 0.0
        return TwoFactor(self.x10, self.x20, self.mu1, self.mu2, self.sigma1, self.sigma2, r1, r2)


Cashflow = Annotated[Union[SingleCashflow, TwoFactorCashflow], Field(discriminator="kind")]


class Rates(_Strict):
    """Investor rate plus either the market rate ``r_q`` or a market price ``q0`` to back it out from."""

    r_p: float
    r_q: Optional[float] = None
    q0: Optional[float] = Field(default=None, gt=0)


class Premia(_Strict):
    """Prices of risk for the two-factor model; rates follow from the hedge ratio ``h``."""

    lambda0_p: float
    lambda0_q: float
    lambda_p: float
    lambda_q: float
    h: float = Field(default=0.0, ge=0.0, le=1.0)
    drift: Literal["hedged", "fixed"] = "hedged"


class HorizonBlock(_Strict):
    T: float = Field(gt=0)
    steps: Optional[int] = Field(default=None, ge=1)

    def build(self) -> Horizon:
        steps = self.steps if self.steps is not None else max(1, round(self.T))
        return Horizon(self.T, steps)


class Output(_Strict):
    dir: str = "out"
    lattices: bool = False
    exercise_times: bool = False


class ScenarioConfig(_Strict):
    engine: Engine
    cashflow: Cashflow
    rates: Optional[Rates] = None
    premia: Optional[Premia] = None
    horizon: HorizonBlock
    mode: Optional[Mode] = None
    paths: int = Field(default=10_000, ge=2)
    seed: int = Field(default=0, ge=0)
    workers: int = Field(default=1, ge=1)
    filter: Literal["paper", "itm"] = "paper"
    p0: Optional[float] = Field(default=None, gt=0, description="binomial-mad lattice root; defaults to the annual DCF value")
    output: Output = Output()

    @model_validator(mode="after")
    def _check(self):
        if (self.rates is None) == (self.premia is None):
            raise ValueError("give exactly one of 'rates' or 'premia'")
        mode = self.resolved_mode
        if self.engine == "binomial-sdcf" and mode is not Compounding.DISCRETE:
            raise ValueError("binomial-sdcf uses discrete-annual compounding")
        if self.engine == "lsm" and mode is not Compounding.CONTINUOUS:
            raise ValueError("lsm uses continuous compounding")
        if self.engine.startswith("binomial"):
            if not isinstance(self.cashflow, SingleCashflow):
                raise ValueError(f"{self.engine} needs a single cash-flow stream")
            if self.premia is not None:
                raise ValueError(f"{self.engine} takes 'rates', not 'premia'")
            if self.horizon.T != int(self.horizon.T):
                raise ValueError("binomial engines need an integer horizon T")
            if self.horizon.steps not in (None, int(self.horizon.T)):
                raise ValueError("binomial engines take one step per year")
        if self.engine == "binomial-mad" and (self.rates.q0 is None or self.rates.r_q is not None):
            raise ValueError("binomial-mad needs rates.q0 (a fixed market price) and no rates.r_q")
        if self.engine == "binomial-sdcf" and (self.rates.q0 is None) == (self.rates.r_q is None):
            raise ValueError("give exactly one of rates.r_q or rates.q0")
        if self.engine == "lsm":
            if not isinstance(self.cashflow, TwoFactorCashflow):
                raise ValueError("lsm needs a two-factor cash-flow block")
            if self.rates is not None and (self.rates.q0 is None) == (self.rates.r_q is None):
                raise ValueError("give exactly one of rates.r_q or rates.q0")
            if self.premia is not None:
                _domain(self.factor_structure)
        if self.p0 is not None and self.engine != "binomial-mad":
            raise ValueError("p0 applies only to binomial-mad")
        _domain(self.horizon.build)
        return self

    @property
    def resolved_mode(self) -> Compounding:
        return Compounding(self.mode or DEFAULT_MODE[self.engine])

    def factor_structure(self) -> FactorStructure:
        """Common parameters of a two-factor block whose streams are identical but for idiosyncratic noise."""
        spec = self.cashflow.build()
        if not (spec.mu1 == spec.mu2 and spec.sigma1 == spec.sigma2 and spec.rho1 == spec.rho2):
            raise DomainError("premia need identical revenue and cost parameters (mu, sigma, loading)")
        return FactorStructure(spec.rho1, spec.sigma1, spec.mu1, self.premia.h)

    def risk_premia(self) -> RiskPremia:
        p = self.premia
        return RiskPremia(p.lambda0_p, p.lambda0_q, p.lambda_p, p.lambda_q)


class SweepConfig(_Strict):
    """Overrides for a study; anything left out takes the study default."""

    axes: dict[str, list[float]] = Field(default_factory=dict)
    fixed: dict[str, Any] = Field(default_factory=dict)
    n_paths: int = Field(default=10_000, ge=2)
    steps: int = Field(default=5, ge=1)
    seed: int = Field(default=0, ge=0)
    workers: int = Field(default=1, ge=1)
    crn: bool = True
    out_dir: str = "out"

    def build(self, study: str) -> SweepSpec:
        if study not in STUDIES:
            raise DomainError(f"unknown study {study!r}")
        return SweepSpec(
            study=study,
            axes={k: tuple(v) for k, v in self.axes.items()},
            fixed=dict(self.fixed),
            n_paths=self.n_paths,
            steps=self.steps,
            seed=self.seed,
            workers=self.workers,
            crn=self.crn,
        )


def json_schema() -> dict:
    """Published schema: the scenario document plus the sweep overrides and study defaults."""
    return {
        "scenario": ScenarioConfig.model_json_schema(),
        "sweep": SweepConfig.model_json_schema(),
        "studies": {
            name: {"axes": {k: list(v) for k, v in DEFAULT_AXES[name].items()}, "fixed": _jsonable(DEFAULT_FIXED[name])}
            for name in STUDIES
        },
        "defaults": {"mode_by_engine": DEFAULT_MODE},
    }


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    return value
