"""Two-player adoption game between a standard pool and the hybrid pool.

Each player commits capital ``W`` either fully to a standard curve or to a
hybrid pool exposing ``N * W``.  Fees are routed in proportion to active
depth, including background liquidity ``X``; LVR scales with active
exposure and the idle buffer earns ``r_c``.  Payoffs are currency amounts
over a horizon of ``T`` years.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError
from .lvr import lvr_horizon

STD = "std"
HLCP = "hlcp"
STRATEGIES = (STD, HLCP)


@dataclass(frozen=True)
class PayoffInputs:
    w: float
    x_bg: float
    n_ratio: float
    sigma: float
    r_c: float
    f_max: float
    t: float

    def __post_init__(self):
        if not self.w > 0:
            raise ValidationError(f"w must be positive, got {self.w}")
        if self.x_bg < 0 or self.sigma < 0 or self.r_c < 0 or self.f_max < 0:
            raise ValidationError("x_bg, sigma, r_c and f_max must be non-negative")
        if not self.t > 0:
            raise ValidationError(f"t must be positive, got {self.t}")
        if not 0 < self.n_ratio <= 1:
            raise ValidationError(f"n_ratio must lie in (0, 1], got {self.n_ratio}")

    @property
    def lvr(self) -> float:
        """LVR of fully exposed capital over the horizon."""
        return lvr_horizon(self.sigma, self.w, self.t)

    @property
    def collateral_yield(self) -> float:
        """Y_C(T) = (1 - N) W r_c T."""
        return (1.0 - self.n_ratio) * self.w * self.r_c * self.t

    @property
    def defensive_rate(self) -> float:
        """(1 - N)(sigma**2 / 8 + r_c), the per-capital-year HLCP advantage."""
        return (1.0 - self.n_ratio) * (self.sigma**2 / 8.0 + self.r_c)


def fee_share(own, background, other, n_own=1):
    """Fraction of routed fees earned by depth ``n_own * own``.

    Plain arithmetic so exact types (``fractions.Fraction``) pass through.
    """
    return n_own * own / (background + n_own * own + other)


def yield_dilution(f_max: float, l_total: float) -> float:
    """Per-unit fee yield F / L_total; diagnostic only."""
    if not l_total > 0:
        raise ValidationError("l_total must be positive")
    return f_max / l_total


@dataclass(frozen=True)
class PayoffMatrix:
    """Payoff to the row strategy against the column strategy."""

    pi_std_std: float
    pi_hlcp_std: float
    pi_std_hlcp: float
    pi_hlcp_hlcp: float

    def payoff(self, own: str, other: str) -> float:
        return getattr(self, f"pi_{own}_{other}")

    def as_dict(self) -> dict:
        return asdict(self)


def payoff_matrix(inputs: PayoffInputs) -> PayoffMatrix:
    w, x, n, f = inputs.w, inputs.x_bg, inputs.n_ratio, inputs.f_max
    lvr = inputs.lvr
    yc = inputs.collateral_yield
    return PayoffMatrix(
        pi_std_std=w / (x + 2 * w) * f - lvr,
        pi_hlcp_std=n * w / (x + (1 + n) * w) * f - n * lvr + yc,
        pi_std_hlcp=w / (x + (1 + n) * w) * f - lvr,
        pi_hlcp_hlcp=n * w / (x + 2 * n * w) * f - n * lvr + yc,
    )


@dataclass(frozen=True)
class ProfileReport:
    profile: tuple[str, str]
    is_nash: bool
    weak: bool  # Nash only through a zero deviation margin
    # gain from deviating, per player; Nash iff both <= 0
    deviation_gains: tuple[float, float]


@dataclass(frozen=True)
class NashReport:
    matrix: PayoffMatrix
    profiles: dict
    # pi_hlcp_std - pi_std_std: gain from moving to HLCP against a standard opponent
    margin_step1: float
    # pi_hlcp_hlcp - pi_std_hlcp: loss from defecting out of (HLCP, HLCP)
    margin_step2: float

    @property
    def equilibria(self) -> list:
        return [p for p, r in self.profiles.items() if r.is_nash]

    @property
    def unique(self) -> tuple[str, str] | None:
        eq = self.equilibria
        return eq[0] if len(eq) == 1 else None

    def label(self) -> str:
        eq = self.equilibria
        if not eq:
            return "none"
        return ";".join(f"{a}/{b}" + ("(weak)" if self.profiles[(a, b)].weak else "") for a, b in eq)


def _other(s: str) -> str:
    return HLCP if s == STD else STD


def nash_from_matrix(matrix: PayoffMatrix) -> dict:
    """Classify all four profiles by pairwise comparison of the cells."""
    out = {}
    for a in STRATEGIES:
        for b in STRATEGIES:
            gain_a = matrix.payoff(_other(a), b) - matrix.payoff(a, b)
            gain_b = matrix.payoff(_other(b), a) - matrix.payoff(b, a)
            nash = gain_a <= 0 and gain_b <= 0
            weak = nash and (gain_a == 0 or gain_b == 0)
            out[(a, b)] = ProfileReport((a, b), nash, weak, (gain_a, gain_b))
    return out


def nash_check(inputs: PayoffInputs) -> NashReport:
    m = payoff_matrix(inputs)
    return NashReport(
        matrix=m,
        profiles=nash_from_matrix(m),
        margin_step1=m.pi_hlcp_std - m.pi_std_std,
        margin_step2=m.pi_hlcp_hlcp - m.pi_std_hlcp,
    )


def fee_loss(inputs: PayoffInputs) -> float:
    """Fee given up by a unilateral move to HLCP against a standard opponent."""
    w, x, n = inputs.w, inputs.x_bg, inputs.n_ratio
    return inputs.f_max * w * (1.0 / (x + 2 * w) - n / (x + (1 + n) * w))


def limit_condition(inputs: PayoffInputs) -> tuple[float, float]:
    """Both sides of the unilateral-deviation inequality, per unit of W*T.

    Returns ``(defensive_rate, fee_loss_rate)``; deviating to HLCP pays iff
    the first exceeds the second.
    """
    return inputs.defensive_rate, fee_loss(inputs) / (inputs.w * inputs.t)


@dataclass(frozen=True)
class ParetoReport:
    improves: bool
    strict: bool
    hlcp_payoff: float
    std_payoff: float
    improvement: float
    fee_share_gap: float


def pareto_check(inputs: PayoffInputs) -> ParetoReport:
    """Compare (HLCP, HLCP) with (Std, Std) when background depth also scales by N."""
    w, x, n, f = inputs.w, inputs.x_bg, inputs.n_ratio, inputs.f_max
    share_std = fee_share(w, x, w)
    share_hlcp = fee_share(w, n * x, n * w, n_own=n)
    std = share_std * f - inputs.lvr
    hlcp = share_hlcp * f - n * inputs.lvr + inputs.collateral_yield
    diff = hlcp - std
    strict = inputs.defensive_rate > 0
    return ParetoReport(
        improves=diff >= 0 or math.isclose(diff, 0.0, abs_tol=1e-9 * max(abs(std), 1.0)),
        strict=strict and diff > 0,
        hlcp_payoff=hlcp,
        std_payoff=std,
        improvement=diff,
        fee_share_gap=share_hlcp - share_std,
    )


def deviation_crossover(inputs: PayoffInputs, x_lo: float, x_hi: float, tol: float = 1e-10) -> float:
    """Background depth at which the unilateral-deviation margin changes sign.

    Bisects in log(X) over ``[x_lo, x_hi]``; the margin must have opposite
    signs at the two ends.
    """
    def margin(x):
        return nash_check(_with(inputs, x_bg=x)).margin_step1

    lo, hi = math.log(x_lo), math.log(x_hi)
    m_lo = margin(x_lo)
    if m_lo * margin(x_hi) > 0:
        raise ValidationError("deviation margin does not change sign on the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        m_mid = margin(math.exp(mid))
        if (m_mid > 0) == (m_lo > 0):
            lo, m_lo = mid, m_mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def _with(inputs: PayoffInputs, **changes) -> PayoffInputs:
    d = asdict(inputs)
    d.update(changes)
    return PayoffInputs(**d)


def sweep(inputs: PayoffInputs, param: str, values) -> list[dict]:
    """Evaluate the game over ``values`` of one input field.

    Each row carries the inputs, the four cells and the Nash label.
    """
    if param not in PayoffInputs.__dataclass_fields__:
        raise ValidationError(f"unknown sweep parameter {param!r}")
    rows = []
    for v in np.asarray(values, float):
        inp = _with(inputs, **{param: float(v)})
        rep = nash_check(inp)
        row = {
            "W": inp.w, "X": inp.x_bg, "N": inp.n_ratio, "sigma": inp.sigma,
            "r_c": inp.r_c, "F_max": inp.f_max, "T": inp.t,
        }
        row.update(rep.matrix.as_dict())
        row["nash_profile"] = rep.label()
        rows.append(row)
    return rows
