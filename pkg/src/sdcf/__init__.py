"""Real-option valuation when an investor and the market discount the same cash flows at different rates."""

from .binomial import BinomialValuation, Lattice, backward_induct, value_mad, value_sdcf
from .discounting import (
    Compounding,
    Horizon,
    RatePair,
    SingleStream,
    TwoFactor,
    npv0_coefficients,
    present_value,
    solve_irr,
)
from .errors import ConsistencyError, DomainError, IrrAmbiguousError, IrrNotBracketedError, NumericError, SdcfError
from .lsm import LsmResult, lsm_value, npv_paths, simulate_paths, value_two_factor
from .risk import FactorStructure, RiskPremia, hedge_transform, idiosyncratic_vol, premia_to_rates
from .studies import GridReport, SweepSpec, base_case, run_study

__version__ = "0.1.0"
