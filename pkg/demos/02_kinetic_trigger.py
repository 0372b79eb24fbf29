"""
Deploying idle collateral when the price is pushed
==================================================

Only a fraction N of the benchmark depth sits on the curve.  When a trade
moves the price by more than tau, the remaining buffer is injected along
the current price ray, so depth grows without moving the price.
"""

from hlcp.core_amm import trade_for_deviation
from hlcp.engine import HlcpState, TriggerParams, injection_scalar, router_gap, step

params = TriggerParams(alpha=100.0)
state = HlcpState.initialize(1_000_000.0, 1.0, 0.5)
print(f"active depth {state.l_active:,.0f}, buffer {state.collateral:,.0f}")

# a small trade stays below the threshold
state, q, inj = step(state, 500.0, params)
print(f"small trade: dp={q.price_deviation:.4%}, injected {inj.delta_c:,.0f}")

# a trade that moves the price by 5% wakes the buffer
dx = trade_for_deviation(state.active, 0.05)
before = state.collateral
state, q, inj = step(state, dx, params)
print(f"large trade: dp={q.price_deviation:.2%}, injected {inj.delta_c:,.0f} of {before:,.0f}")
print(f"price after trade {q.p_new:.6f}, after injection {state.price:.6f}")

# the share deployed by a 38.5% excess move, and what a router sees at rest
share = injection_scalar(HlcpState.initialize(1.0, 1.0, 0.5), 0.385, params) / 0.5
print(f"\ndeployed share at phi=0.385: {share:.2%}")
print(f"router gap for K=1, L=1e6, N=0.5: {router_gap(1.0, 1e6, 0.5):.2e}")
