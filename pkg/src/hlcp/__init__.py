"""Simulation and analysis toolkit for a hybrid liquidity-collateral AMM pool."""

__version__ = "0.1.0"

from .core_amm import (
    PoolState,
    TradeQuote,
    marginal_price,
    price_deviation_of_slippage,
    quote_swap,
    saturation_depth,
    slippage_of_depth,
)
from .engine import (
    HlcpState,
    InjectionResult,
    TriggerParams,
    activation,
    effective_depth,
    homothety_inject,
    injection_scalar,
    min_depth_for_tolerance,
    router_gap,
    step,
)
from .errors import (
    DomainError,
    InsufficientBufferError,
    ParseError,
    SimulationError,
    ValidationError,
)
from .lvr import LvrAccumulator, lvr_horizon, lvr_increment
