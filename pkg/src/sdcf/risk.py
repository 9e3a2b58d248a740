"""Factor premia, partial hedging of the systematic factor, idiosyncratic volatility.

Revenue and cost load equally (``rho_star``) on one hedgeable systematic
factor and each carry an independent idiosyncratic factor. Discount rates are
premium-weighted volatilities; the risk-free rate defaults to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .discounting import Compounding, RatePair, TwoFactor
from .errors import DomainError


@dataclass(frozen=True)
class RiskPremia:
    """Prices of risk: systematic ``lambda0_*`` and idiosyncratic ``lambda_*``, investor ``p`` and market ``q``."""

    lambda0_p: float
    lambda0_q: float
    lambda_p: float
    lambda_q: float

    def __post_init__(self):
        for name in ("lambda0_p", "lambda0_q", "lambda_p", "lambda_q"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")


@dataclass(frozen=True)
class FactorStructure:
    rho_star: float
    sigma_star: float
    mu_star: float
    h: float = 0.0

    def __post_init__(self):
        if not abs(self.rho_star) <= 1:
            raise DomainError(f"|rho_star| must be <= 1, got {self.rho_star}")
        if not self.sigma_star >= 0:
            raise DomainError(f"sigma_star must be >= 0, got {self.sigma_star}")
        if not 0 <= self.h <= 1:
            raise DomainError(f"h must lie in [0, 1], got {self.h}")
        if not math.isfinite(self.mu_star):
            raise DomainError("mu_star must be finite")

    @property
    def rho(self) -> float:
        """Revenue-cost correlation implied by the common loading."""
        return self.rho_star**2


@dataclass(frozen=True)
class HedgedParams:
    """Volatility, rates and systematic loading after hedging a fraction ``h``.

    ``rho_h`` is the loading that keeps each stream's idiosyncratic variance
    at ``sigma_star^2 (1 - rho_star^2)`` while total variance is ``sigma_h^2``.
    """

    sigma_h: float
    r_ph: float
    r_qh: float
    rho_h: float


def idiosyncratic_vol(sigma: float, rho_star: float) -> float:
    if not abs(rho_star) <= 1 or not sigma >= 0:
        raise DomainError("need |rho_star| <= 1 and sigma >= 0")
    return sigma * math.sqrt(1.0 - rho_star * rho_star)


def _rate(lambda0: float, lam: float, fs: FactorStructure, risk_free: float) -> float:
    return risk_free + (lambda0 * (1.0 - fs.h) * fs.rho_star + lam * math.sqrt(1.0 - fs.rho_star**2)) * fs.sigma_star


def hedge_transform(fs: FactorStructure, premia: RiskPremia, risk_free: float = 0.0) -> HedgedParams:
    hr = fs.h * fs.rho_star
    sigma_h = fs.sigma_star * math.sqrt(1.0 - hr * hr)
    denom = math.sqrt(1.0 - hr * hr)
    # at |rho_star| = h = 1 everything is hedged away and the loading is moot
    rho_h = fs.rho_star * math.sqrt(1.0 - fs.h**2) / denom if denom > 0 else 0.0
    return HedgedParams(
        sigma_h=sigma_h,
        r_ph=_rate(premia.lambda0_p, premia.lambda_p, fs, risk_free),
        r_qh=_rate(premia.lambda0_q, premia.lambda_q, fs, risk_free),
        rho_h=rho_h,
    )


def premia_to_rates(fs: FactorStructure, premia: RiskPremia, risk_free: float = 0.0) -> RatePair:
    hp = hedge_transform(fs, premia, risk_free)
    return RatePair(hp.r_ph, hp.r_qh, Compounding.CONTINUOUS)


def calibrate_premia(case: str, rho_star: float, sigma_star: float, r_p0: float, r_q0: float, lambda0: float) -> RiskPremia:
    """Premia that reproduce ``(r_p0, r_q0)`` with no hedging.

    Case ``"a"`` shares the systematic premium ``lambda0`` and splits the
    idiosyncratic premia; case ``"b"`` shares the idiosyncratic premium and
    gives the market ``lambda0`` on the systematic factor.
    """
    sys_load = rho_star * sigma_star
    idio_load = idiosyncratic_vol(sigma_star, rho_star)
    if case == "a":
        if idio_load == 0:
            raise DomainError("case a needs idiosyncratic risk")
        return RiskPremia(lambda0, lambda0, (r_p0 - lambda0 * sys_load) / idio_load, (r_q0 - lambda0 * sys_load) / idio_load)
    if case == "b":
        if sys_load == 0 or idio_load == 0:
            raise DomainError("case b needs both systematic and idiosyncratic risk")
        lam = (r_q0 - lambda0 * sys_load) / idio_load
        return RiskPremia((r_p0 - lam * idio_load) / sys_load, lambda0, lam, lam)
    raise DomainError(f"unknown hedging case {case!r}")


def hedged_scenario(fs: FactorStructure, premia: RiskPremia, x10: float, x20: float, drift: str = "hedged") -> tuple[TwoFactor, RatePair]:
    """Engine inputs at hedge ratio ``fs.h``.

    With ``drift="hedged"`` the growth rate gives up the market premium on the
    hedged systematic exposure, ``mu_star - h * lambda0_q * rho_star * sigma_star``,
    which moves in step with the discount rates. ``"fixed"`` keeps ``mu_star``.
    """
    hp = hedge_transform(fs, premia)
    if drift == "hedged":
        mu = fs.mu_star - fs.h * premia.lambda0_q * fs.rho_star * fs.sigma_star
    elif drift == "fixed":
        mu = fs.mu_star
    else:
        raise DomainError(f"drift must be 'hedged' or 'fixed', got {drift!r}")
    spec = TwoFactor(x10, x20, mu, mu, hp.sigma_h, hp.sigma_h, hp.rho_h, hp.rho_h)
    return spec, RatePair(hp.r_ph, hp.r_qh, Compounding.CONTINUOUS)


def loadings_for_correlation(rho: float) -> tuple[float, float]:
    """Factor loadings ``(rho1, rho2)`` whose product is the target correlation ``rho``."""
    if not abs(rho) <= 1:
        raise DomainError(f"|rho| must be <= 1, got {rho}")
    root = math.sqrt(abs(rho))
    return root, math.copysign(root, rho)
