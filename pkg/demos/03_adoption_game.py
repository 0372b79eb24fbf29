"""
When does holding back liquidity pay?
=====================================

Two LPs choose between a standard pool and the hybrid pool.  With thin
background liquidity the fee share lost by exposing only N*W dominates;
as background depth grows that loss fades and the LVR saving wins.
"""

import numpy as np

from hlcp.game import PayoffInputs, deviation_crossover, nash_check, sweep

base = PayoffInputs(w=1e6, x_bg=1e12, n_ratio=0.5, sigma=0.7456, r_c=0.0, f_max=1e8, t=1.0)

rep = nash_check(base)
print("equilibria:", rep.label())
print(f"deviation margins: {rep.margin_step1:,.0f} / {rep.margin_step2:,.0f}")

for row in sweep(base, "x_bg", np.geomspace(1e6, 1e12, 7)):
    print(f"X={row['X']:9.1e}  {row['nash_profile']}")

x_star = deviation_crossover(base, 1e6, 1e12)
print(f"\nunilateral switch pays once X exceeds {x_star:.4e}")
