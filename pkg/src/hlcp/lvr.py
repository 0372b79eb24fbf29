"""Loss-versus-rebalancing accounting.

Instantaneous LVR accrues at ``sigma**2 / 8 * V`` per year, with ``sigma``
annualised and ``V`` the value exposed on the curve.  Per-step quantities
are converted by the caller with ``sigma_step = sigma * sqrt(dt)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def lvr_rate(sigma: float) -> float:
    """Annual LVR drag per unit of exposure, sigma**2 / 8."""
    if sigma < 0:
        raise DomainError(f"sigma must be non-negative, got {sigma}")
    return sigma * sigma / 8.0


def lvr_increment(sigma: float, exposure: float, dt: float) -> float:
    if sigma < 0 or exposure < 0:
        raise DomainError(f"sigma and exposure must be non-negative, got {sigma}, {exposure}")
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    return sigma * sigma / 8.0 * exposure * dt


def lvr_horizon(sigma: float, w: float, t: float) -> float:
    """Cumulative LVR of constant capital ``w`` over ``t`` years."""
    if sigma < 0 or w < 0 or t < 0:
        raise DomainError("sigma, w and t must be non-negative")
    return sigma * sigma / 8.0 * w * t


def lvr_path(sigmas, exposures, dts) -> np.ndarray:
    """Cumulative LVR along a discretised path, starting at 0.

    ``sigmas``, ``exposures`` and ``dts`` broadcast against each other; the
    result has one more entry than the number of steps.
    """
    sigmas, exposures, dts = np.broadcast_arrays(
        np.asarray(sigmas, float), np.asarray(exposures, float), np.asarray(dts, float)
    )
    if (sigmas < 0).any() or (exposures < 0).any():
        raise DomainError("sigma and exposure must be non-negative")
    if not (dts > 0).all():
        raise DomainError("time steps must be positive")
    inc = sigmas**2 / 8.0 * exposures * dts
    return np.concatenate(([0.0], np.cumsum(inc)))


@dataclass(frozen=True)
class LvrAccumulator:
    """Running LVR total.  ``add`` returns a new accumulator."""

    cumulative: float = 0.0
    exposure: float = 1.0
    clock: float = 0.0

    def add(self, sigma: float, dt: float, exposure: float | None = None) -> LvrAccumulator:
        exp = self.exposure if exposure is None else exposure
        inc = lvr_increment(sigma, exp, dt)
        return LvrAccumulator(self.cumulative + inc, exp, self.clock + dt)
