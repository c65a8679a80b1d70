"""Contract payouts: equity participation with a compounding floor.

The account value at time t is the larger of the asset price and a
guarantee growing at rate ``r_G`` from the initial level ``K``:

    V_t = max(S_t, K * (1 + r_G)**t).

A survivor collects V_T at maturity.  Surrendering at an interior date
t in {1, .., T-1} collects V_t shaved by a penalty factor (1 - l);
surrender exactly at maturity or never pays the surrender leg nothing,
and death before the relevant date voids both legs.  All payouts are
reported discounted to time 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rifa.errors import ConfigurationError
from rifa.lattice import MarketParams, Path


@dataclass(frozen=True, slots=True)
class BenefitSpec:
    """Contract terms.

    K:         initial guarantee level, >= 0
    r_G:       guaranteed growth rate, > -1
    l:         surrender penalty fraction, in [0, 1]
    surrender: whether the contract carries a surrender option
    """

    K: float
    r_G: float
    l: float
    surrender: bool = True

    def __post_init__(self):
        if self.K < 0.0 or not math.isfinite(self.K):
            raise ConfigurationError(f"K must be finite and nonnegative, got {self.K}")
        if self.r_G <= -1.0 or not math.isfinite(self.r_G):
            raise ConfigurationError(f"r_G must exceed -1, got {self.r_G}")
        if not (0.0 <= self.l <= 1.0):
            raise ConfigurationError(f"l must lie in [0, 1], got {self.l}")


def guarantee_value(spec: BenefitSpec, market: MarketParams, path: Path, t: int) -> float:
    """Account value V_t = max(S_t, K*(1+r_G)**t), undiscounted."""
    if not (0 <= t <= market.T):
        raise ConfigurationError(f"t must lie in [0, {market.T}], got {t}")
    return max(path.prices[t], spec.K * (1.0 + spec.r_G) ** t)


def discounted_payoffs(
    spec: BenefitSpec, market: MarketParams, path: Path
) -> tuple[float, np.ndarray]:
    """Discounted payout coefficients of both contract legs along a path.

    Returns ``(survival_pay, surrender_pays)``: the discounted maturity
    payout V_T/(1+r)**T, and an array indexed by t = 0..T whose entry t
    is the discounted surrender payout (1-l) * V_t / (1+r)**t for
    interior dates 1 <= t <= T-1 and zero elsewhere.  A contract without
    the surrender option has an all-zero surrender leg.
    """
    T = market.T
    disc = market.discount
    survival_pay = guarantee_value(spec, market, path, T) * disc**T
    surrender_pays = np.zeros(T + 1)
    if spec.surrender:
        for t in range(1, T):
            surrender_pays[t] = (
                (1.0 - spec.l) * guarantee_value(spec, market, path, t) * disc**t
            )
    return survival_pay, surrender_pays
