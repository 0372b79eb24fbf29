"""Constant-product pool geometry.

Prices are quoted as units of Y per unit of X.  Only the X-in / Y-out
direction is modelled; swap the roles of ``x`` and ``y`` at the call site
for the other direction.  All functions are fee-free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError


@dataclass(frozen=True)
class PoolState:
    """Reserves of a two-asset constant-product pool (x * y = L**2)."""

    x: float
    y: float
    L: float = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.x > 0 and self.y > 0):
            raise DomainError(f"reserves must be positive, got x={self.x}, y={self.y}")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError("reserves must be finite")
        object.__setattr__(self, "L", math.sqrt(self.x * self.y))

    @classmethod
    def from_depth(cls, depth: float, price: float) -> PoolState:
        """Pool with liquidity ``depth`` sitting at marginal ``price``."""
        if depth <= 0 or price <= 0:
            raise DomainError("depth and price must be positive")
        root = math.sqrt(price)
        return cls(depth / root, depth * root)

    @property
    def k(self) -> float:
        return self.x * self.y

    @property
    def price(self) -> float:
        return self.y / self.x

    def scaled(self, factor: float) -> PoolState:
        """Proportionally scaled reserves; depth changes, price does not."""
        return PoolState(self.x * factor, self.y * factor)


@dataclass(frozen=True)
class TradeQuote:
    delta_x: float
    delta_y: float
    p_marginal: float
    p_effective: float
    p_new: float
    slippage: float
    price_deviation: float
    pool_after: PoolState

    @property
    def trade_constant(self) -> float:
        """K = delta_x * sqrt(P) in the pre-trade price."""
        return self.delta_x * math.sqrt(self.p_marginal)


def marginal_price(pool: PoolState) -> float:
    """Tangent price y/x of the pool."""
    return pool.y / pool.x


def quote_swap(pool: PoolState, delta_x: float) -> TradeQuote:
    """Quote an X-in trade of size ``delta_x`` against ``pool``.

    Slippage is the normalised secant gap ``(P - P_eff) / P = dx / (x + dx)``.
    The marginal-price deviation is evaluated through the depth form
    ``K (2L + K) / (L + K)**2`` so it does not share rounding with the
    slippage expression.
    """
    if not delta_x > 0 or not math.isfinite(delta_x):
        raise DomainError(f"trade size must be positive and finite, got {delta_x}")
    x, y = pool.x, pool.y
    x_new = x + delta_x
    y_new = pool.k / x_new
    # same as y - k / x_new without the cancellation for small trades
    delta_y = y * delta_x / x_new
    p0 = y / x
    depth = pool.L
    kc = delta_x * math.sqrt(p0)
    return TradeQuote(
        delta_x=delta_x,
        delta_y=delta_y,
        p_marginal=p0,
        p_effective=delta_y / delta_x,
        p_new=y_new / x_new,
        slippage=delta_x / x_new,
        price_deviation=kc * (2.0 * depth + kc) / (depth + kc) ** 2,
        pool_after=PoolState(x_new, y_new),
    )


def slippage_of_depth(K: float, L: float) -> float:
    """Slippage K / (L + K) of a trade with constant K at depth L."""
    if not (K > 0 and L > 0):
        raise DomainError(f"K and L must be positive, got K={K}, L={L}")
    return K / (L + K)


def slippage_sensitivity(K: float, L: float) -> float:
    """dS/dL = -K / (L + K)**2."""
    if not (K > 0 and L >= 0):
        raise DomainError(f"K must be positive and L non-negative, got K={K}, L={L}")
    return -K / (L + K) ** 2


def saturation_depth(K: float, epsilon: float) -> float:
    """Depth beyond which |dS/dL| drops below ``epsilon``.

    Returns ``max(0, sqrt(K / epsilon) - K)``; a negative analytic value
    means the pool is saturated at any depth.
    """
    if not (K > 0 and epsilon > 0):
        raise DomainError(f"K and epsilon must be positive, got K={K}, epsilon={epsilon}")
    return max(0.0, math.sqrt(K / epsilon) - K)


def price_deviation_of_slippage(S: float) -> float:
    """Marginal-price deviation S(2 - S) implied by slippage S in (0, 1)."""
    if not 0.0 < S < 1.0:
        raise DomainError(f"slippage must lie in (0, 1), got {S}")
    return S * (2.0 - S)


def slippage_for_deviation(dp: float) -> float:
    """Inverse of :func:`price_deviation_of_slippage` on (0, 1)."""
    if not 0.0 < dp < 1.0:
        raise DomainError(f"price deviation must lie in (0, 1), got {dp}")
    # 1 - sqrt(1 - dp), rationalised
    return dp / (1.0 + math.sqrt(1.0 - dp))


def trade_for_deviation(pool: PoolState, dp: float) -> float:
    """X-in trade size that moves the marginal price down by fraction ``dp``."""
    s = slippage_for_deviation(dp)
    return pool.x * s / (1.0 - s)
