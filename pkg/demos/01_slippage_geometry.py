"""
Slippage and price deviation on a constant-product curve
========================================================

A trade pays slippage S on execution but moves the marginal price by
S(2 - S), roughly twice as much.  Deep pools shrink both, with diminishing
returns past the saturation depth.
"""

import numpy as np

from hlcp.core_amm import PoolState, quote_swap, saturation_depth, slippage_of_depth, trade_for_deviation

# a symmetric pool at price 1
pool = PoolState(100.0, 100.0)
for dx in (1.0, 10.0, 100.0):
    q = quote_swap(pool, dx)
    print(f"dx={dx:6.1f}  S={q.slippage:.4f}  dp={q.price_deviation:.4f}  ratio={q.price_deviation / q.slippage:.3f}")

# moving the price by 2% on a deep pool costs only about 1% in slippage
deep = PoolState.from_depth(1e9, 2000.0)
q = quote_swap(deep, trade_for_deviation(deep, 0.02))
print(f"\n2% deviation needs S = {q.slippage:.4%}")

# slippage against depth for a fixed trade, and where extra depth stops paying
K = 1.0
depths = np.geomspace(1, 1e6, 7)
print("\nL        S")
for L in depths:
    print(f"{L:8.0f} {slippage_of_depth(K, L):.2e}")
print(f"\nsaturation depth for eps=1e-4: {saturation_depth(K, 1e-4):.0f}")
