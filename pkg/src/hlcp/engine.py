"""N-scaled hybrid pool: active curve, collateral buffer and kinetic trigger.

The active curve holds ``N * L_total`` of depth; the remaining
``(1 - N) * L_total`` sits in a buffer measured in liquidity-equivalent
units.  When a trade moves the marginal price by more than the tolerance
``tau``, part of the buffer is deployed along the current price ray.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .core_amm import PoolState, TradeQuote, quote_swap
from .errors import DomainError, InsufficientBufferError, ValidationError

DEFAULT_FEE = 0.003

# one-step deployment never reaches the full buffer
_MAX_DEPLOY_FRACTION = 1.0 - 1e-12


@dataclass(frozen=True)
class TriggerParams:
    alpha: float
    tau: float = DEFAULT_FEE
    fee: float = DEFAULT_FEE

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        if not self.tau >= self.fee >= 0:
            raise ValidationError(f"need tau >= fee >= 0, got tau={self.tau}, fee={self.fee}")


@dataclass(frozen=True)
class HlcpState:
    active: PoolState
    collateral: float
    n_ratio: float
    l_total: float

    def __post_init__(self):
        if not 0 < self.n_ratio <= 1:
            raise ValidationError(f"n_ratio must lie in (0, 1], got {self.n_ratio}")
        if self.collateral < 0:
            raise ValidationError(f"collateral must be non-negative, got {self.collateral}")
        if not self.l_total > 0:
            raise ValidationError(f"l_total must be positive, got {self.l_total}")

    @classmethod
    def initialize(cls, l_total: float, price: float, n_ratio: float) -> HlcpState:
        """Split benchmark depth ``l_total`` into active depth and buffer."""
        if not 0 < n_ratio <= 1:
            raise ValidationError(f"n_ratio must lie in (0, 1], got {n_ratio}")
        active = PoolState.from_depth(n_ratio * l_total, price)
        return cls(active, (1.0 - n_ratio) * l_total, n_ratio, l_total)

    @property
    def l_active(self) -> float:
        return self.active.L

    @property
    def price(self) -> float:
        return self.active.price

    @property
    def allocation(self) -> tuple[float, float]:
        """State allocation vector (L_active, C)."""
        return (self.active.L, self.collateral)


@dataclass(frozen=True)
class InjectionResult:
    delta_c: float
    delta_x: float
    delta_y: float
    l_new: float
    undeployed_share: float
    # accounting depths before / after deployment; never used for settlement
    l_eff: float = math.nan
    l_eff_post: float = math.nan


def activation(dp: float, params: TriggerParams) -> float:
    """Shock value max(0, |dp| - tau)."""
    return max(0.0, abs(dp) - params.tau)


def weight_vector(dp: float, n_ratio: float, params: TriggerParams) -> tuple[float, float]:
    return (1.0 / n_ratio, params.alpha * activation(dp, params))


def effective_depth(state: HlcpState, dp: float, params: TriggerParams) -> float:
    """Accounting depth L_active / N + alpha * phi(dp) * C."""
    w_active, w_buffer = weight_vector(dp, state.n_ratio, params)
    l_active, c = state.allocation
    return w_active * l_active + w_buffer * c


def injection_scalar(state: HlcpState, phi: float, params: TriggerParams) -> float:
    """Deployment N*alpha*phi*C / (1 + N*alpha*phi) for shock ``phi``."""
    if phi < 0 or math.isnan(phi):
        raise DomainError(f"shock value must be non-negative, got {phi}")
    c = state.collateral
    if phi == 0 or c == 0:
        return 0.0
    u = state.n_ratio * params.alpha * phi
    share = u / (1.0 + u) if math.isfinite(u) else 1.0
    return min(c * share, c * _MAX_DEPLOY_FRACTION)


def homothety_inject(
    state: HlcpState, delta_c: float
) -> tuple[HlcpState, InjectionResult]:
    """Deploy ``delta_c`` of buffer depth along the current price ray.

    Adds ``dx = dC / sqrt(P)`` and ``dy = dC * sqrt(P)`` to the active
    reserves, so the marginal price is unchanged and depth grows by dC.
    """
    if delta_c < 0 or math.isnan(delta_c):
        raise DomainError(f"deployment must be non-negative, got {delta_c}")
    c = state.collateral
    if delta_c > c:
        raise InsufficientBufferError(f"requested {delta_c} but buffer holds {c}")
    if delta_c == 0:
        share = 1.0
        return state, InjectionResult(0.0, 0.0, 0.0, state.l_active, share)
    root = math.sqrt(state.active.price)
    dx = delta_c / root
    dy = delta_c * root
    active = PoolState(state.active.x + dx, state.active.y + dy)
    new_state = replace(state, active=active, collateral=c - delta_c)
    return new_state, InjectionResult(delta_c, dx, dy, active.L, (c - delta_c) / c)


def router_gap(K: float, l_total: float, n_ratio: float) -> float:
    """Physical minus benchmark slippage, S(N*L_total) - S(L_total)."""
    if not (K > 0 and l_total > 0 and 0 < n_ratio <= 1):
        raise DomainError("need K > 0, l_total > 0 and 0 < n_ratio <= 1")
    return K * (1.0 - n_ratio) * l_total / ((n_ratio * l_total + K) * (l_total + K))


def min_depth_for_tolerance(K: float, n_ratio: float, eps_router: float) -> float:
    """Benchmark depth that guarantees ``router_gap <= eps_router``."""
    if not (K > 0 and 0 < n_ratio <= 1 and eps_router > 0):
        raise DomainError("need K > 0, 0 < n_ratio <= 1 and eps_router > 0")
    return K * (1.0 - n_ratio) / (n_ratio * eps_router)


def step(
    state: HlcpState, delta_x: float, params: TriggerParams
) -> tuple[HlcpState, TradeQuote, InjectionResult]:
    """Settle one X-in trade on the active curve, then run the trigger.

    The trigger sees the deviation of the post-trade marginal price from
    the pre-trade one.
    """
    quote = quote_swap(state.active, delta_x)
    traded = replace(state, active=quote.pool_after)
    dp = quote.price_deviation
    phi = activation(dp, params)
    delta_c = injection_scalar(traded, phi, params)
    new_state, result = homothety_inject(traded, delta_c)
    result = replace(
        result,
        l_eff=effective_depth(traded, dp, params),
        l_eff_post=effective_depth(new_state, dp, params),
    )
    return new_state, quote, result


def to_snapshot(state: HlcpState, params: TriggerParams) -> dict:
    return {
        "x_a": state.active.x,
        "y_a": state.active.y,
        "collateral": state.collateral,
        "n_ratio": state.n_ratio,
        "alpha": params.alpha,
        "tau": params.tau,
        "fee": params.fee,
    }


def from_snapshot(snapshot: dict) -> tuple[HlcpState, TriggerParams]:
    """Inverse of :func:`to_snapshot`.

    Swaps and deployments both conserve ``L_active + C``, so the benchmark
    depth is recovered as that sum.
    """
    expected = {"x_a", "y_a", "collateral", "n_ratio", "alpha", "tau", "fee"}
    keys = set(snapshot)
    if keys != expected:
        raise ValidationError(
            f"snapshot keys mismatch: missing {sorted(expected - keys)}, "
            f"unknown {sorted(keys - expected)}"
        )
    active = PoolState(float(snapshot["x_a"]), float(snapshot["y_a"]))
    c = float(snapshot["collateral"])
    state = HlcpState(active, c, float(snapshot["n_ratio"]), active.L + c)
    params = TriggerParams(float(snapshot["alpha"]), float(snapshot["tau"]), float(snapshot["fee"]))
    return state, params
