"""Arbitrage verdicts, explicit constructions, and portfolio simulation.

A premium p for the insurance benefit admits no robust asymptotic
arbitrage exactly when it does not exceed the robust price, with a
second sufficient route through the single-model infimum:

* condition (i):  p is at most the smallest classical price over the
  parameter box, so no seller-side construction can profit;
* condition (ii): p is strictly below the robust price, so the combined
  position cannot be made quasi-surely nonnegative with positive mean.

When both fail the premium is too high and an explicit arbitrage
exists: hedge the pathwise worst-case claim in the complete market and
average the premium-minus-benefit balance over an ever larger pool of
conditionally independent clients.  The Monte-Carlo half of the module
simulates such pools and verifies the constructed pair within an
explicit law-of-large-numbers error budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .benefits import BenefitSpec, discounted_payoffs
from .copulas import CopulaSpec, sample_pairs
from .errors import ConfigurationError, ContractError, VerificationError
from .hazards import ParamBox, Theta, gompertz_cdf, surrender_cdf
from .lattice import (
    Claim,
    MarketParams,
    enumerate_paths,
    strategy_gain,
    superhedge,
)
from .robust_eval import (
    EvaluationReport,
    OptimizerConfig,
    conditional_value,
    inf_classical,
)

__all__ = [
    "COMPARISON_BAND",
    "Verdict",
    "InsuranceStrategy",
    "ArbitragePair",
    "PortfolioSample",
    "VerificationReport",
    "nrifa_check",
    "construct_arbitrage",
    "simulate_portfolio",
    "lln_rms",
    "verify_arbitrage",
]

# numerical slack applied to the strict/non-strict premium comparisons
COMPARISON_BAND = 1e-9

VERDICT_STATUSES = ("NRIFA_by_i", "NRIFA_by_ii", "RIFA_exists")


@dataclass(frozen=True, slots=True)
class Verdict:
    """Outcome of the no-arbitrage characterization for one premium.

    margin_i  = inf_classical - premium; condition (i) holds when this
                is >= -COMPARISON_BAND
    margin_ii = robust_price - premium; condition (ii) holds when this
                is > COMPARISON_BAND
    theta_prime witnesses the failure of (i): a model whose classical
    price lies below the premium.  boundary_case flags premiums within
    the comparison band of the robust price, where the verdict falls to
    the non-strict side without asserting strict profitability.
    """

    status: str
    premium: float
    robust_price: float
    inf_classical: float
    margin_i: float
    margin_ii: float
    theta_prime: Theta | None
    boundary_case: bool

    def __post_init__(self):
        if self.status not in VERDICT_STATUSES:
            raise ContractError(f"unknown verdict status {self.status!r}")
        cond_i = self.margin_i >= -COMPARISON_BAND
        cond_ii = self.margin_ii > COMPARISON_BAND
        expected = (
            "NRIFA_by_i" if cond_i else "NRIFA_by_ii" if cond_ii else "RIFA_exists"
        )
        if self.status != expected:
            raise ContractError(
                f"status {self.status} inconsistent with margins "
                f"({self.margin_i}, {self.margin_ii})"
            )
        if (self.theta_prime is None) == (not cond_i):
            raise ContractError("theta_prime must witness exactly the failure of (i)")

    @property
    def is_nrifa(self) -> bool:
        return self.status != "RIFA_exists"


@dataclass(frozen=True, slots=True)
class InsuranceStrategy:
    """Descriptor of the limiting insurance allocation.

    Equal-weight averaging over the first n clients with total mass
    gamma; the schedule lists the pool sizes used when the pair is
    simulated.
    """

    kind: str = "equal_weight"
    gamma: float = 1.0
    n_schedule: tuple[int, ...] = (100, 1000, 10000, 100000)

    def __post_init__(self):
        if self.kind != "equal_weight":
            raise ContractError(f"unsupported insurance strategy {self.kind!r}")
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ContractError("allocation mass must be positive")
        _check_schedule(self.n_schedule)


@dataclass(frozen=True, slots=True)
class ArbitragePair:
    """Explicit arbitrage: a hedge plus equal-weight client averaging.

    holdings[t] lists the asset position held over step t+1 for each of
    the 2**t time-t prefix nodes, so the trading strategy is predictable
    by construction.  claim_values is the hedged pathwise worst-case
    claim in ascending path-index order, cost its replication price, and
    shortfall = premium - cost the guaranteed terminal cushion.
    """

    premium: float
    claim_values: tuple[float, ...]
    holdings: tuple[np.ndarray, ...]
    cost: float
    shortfall: float
    strict_case: bool
    insurance: InsuranceStrategy

    def __post_init__(self):
        n = len(self.claim_values)
        if n < 1 or n & (n - 1):
            raise ContractError("claim must cover a full binary path space")
        levels = n.bit_length() - 1
        if len(self.holdings) != levels:
            raise ContractError(
                f"need {levels} holding levels, got {len(self.holdings)}"
            )
        for t, h in enumerate(self.holdings):
            if len(h) != 1 << t:
                raise ContractError(f"holding level {t} must have {1 << t} nodes")
        if not math.isclose(
            self.shortfall, self.premium - self.cost, abs_tol=1e-12
        ):
            raise ContractError("shortfall must equal premium - cost")
        if self.shortfall < -COMPARISON_BAND:
            raise ContractError("hedge cost exceeds the premium")


@dataclass(frozen=True, slots=True)
class PortfolioSample:
    """One simulated client pool on one drawn market path.

    tau_death / tau_surrender hold per-client exit times with T+1
    standing for survival beyond the horizon.  portfolio_values[i] is
    the average of (premium - benefit) over the first n_schedule[i]
    clients; payout_std is the per-client benefit standard deviation
    over the full pool, feeding the verification error budget.
    """

    trial: int
    path_index: int
    tau_death: np.ndarray
    tau_surrender: np.ndarray
    n_schedule: tuple[int, ...]
    portfolio_values: tuple[float, ...]
    premium: float
    conditional_value: float
    payout_std: float

    def __post_init__(self):
        if len(self.portfolio_values) != len(self.n_schedule):
            raise ContractError("one portfolio value per schedule entry required")
        n_max = self.n_schedule[-1]
        if len(self.tau_death) != n_max or len(self.tau_surrender) != n_max:
            raise ContractError("client draws must cover the largest pool size")


@dataclass(frozen=True, slots=True)
class VerificationReport:
    """Summary of a Monte-Carlo check of one arbitrage pair."""

    n_clients: int
    trials: int
    thetas: tuple[Theta, ...]
    mean_payoffs: tuple[float, ...]
    min_payoff: float
    worst_violation: float
    strict_required: bool
    strict_ok: bool
    passed: bool


def _check_schedule(n_schedule: Sequence[int]) -> tuple[int, ...]:
    sched = tuple(n_schedule)
    if not sched:
        raise ContractError("client count schedule must be nonempty")
    prev = 0
    for n in sched:
        if not (isinstance(n, (int, np.integer)) and n > prev):
            raise ContractError(
                f"schedule must be strictly increasing positive integers, got {sched}"
            )
        prev = int(n)
    return tuple(int(n) for n in sched)


def nrifa_check(
    premium: float,
    report: EvaluationReport,
    box: ParamBox,
    spec: CopulaSpec,
    benefit: BenefitSpec,
    market: MarketParams,
    cfg: OptimizerConfig,
) -> Verdict:
    """Decide absence of robust asymptotic arbitrage for a premium.

    Condition (i) is checked first against the box infimum of the
    classical price (non-strict, within COMPARISON_BAND); condition (ii)
    against the robust price (strict).  Either one yields NRIFA; when
    both fail the premium admits an explicit arbitrage.
    """
    if not (math.isfinite(premium) and premium >= 0.0):
        raise ContractError(f"premium must be finite and >= 0, got {premium}")
    for opt in report.per_path:
        if not box.contains(opt.theta):
            raise ContractError("report was computed for a different parameter box")
    inf_val, theta_min = inf_classical(box, spec, benefit, market, cfg)
    margin_i = inf_val - premium
    margin_ii = report.robust_price - premium
    cond_i = margin_i >= -COMPARISON_BAND
    cond_ii = margin_ii > COMPARISON_BAND
    status = "NRIFA_by_i" if cond_i else "NRIFA_by_ii" if cond_ii else "RIFA_exists"
    return Verdict(
        status=status,
        premium=premium,
        robust_price=report.robust_price,
        inf_classical=inf_val,
        margin_i=margin_i,
        margin_ii=margin_ii,
        theta_prime=None if cond_i else theta_min,
        boundary_case=(status == "RIFA_exists" and abs(margin_ii) <= COMPARISON_BAND),
    )


def construct_arbitrage(
    premium: float,
    report: EvaluationReport,
    box: ParamBox,
    spec: CopulaSpec,
    benefit: BenefitSpec,
    market: MarketParams,
) -> ArbitragePair:
    """Build the explicit arbitrage for a premium at or above the robust price.

    The hedge replicates the pathwise worst-case claim, whose cost is
    the robust price; selling insurance at the premium and averaging
    over a growing client pool then leaves the constant cushion
    premium - cost plus a vanishing sampling error.
    """
    if not (math.isfinite(premium) and premium >= 0.0):
        raise ContractError(f"premium must be finite and >= 0, got {premium}")
    for opt in report.per_path:
        if not box.contains(opt.theta):
            raise ContractError("report was computed for a different parameter box")
    if premium < report.robust_price - COMPARISON_BAND:
        raise ContractError(
            f"premium {premium} is below the robust price "
            f"{report.robust_price}; no arbitrage exists"
        )
    claim = Claim(tuple(opt.value for opt in report.per_path))
    cost, holdings = superhedge(market, claim)
    return ArbitragePair(
        premium=premium,
        claim_values=claim.values,
        holdings=tuple(holdings),
        cost=cost,
        shortfall=premium - cost,
        strict_case=premium > report.robust_price + COMPARISON_BAND,
        insurance=InsuranceStrategy(),
    )


def _exit_times(cdf: np.ndarray, draws: np.ndarray) -> np.ndarray:
    # smallest integer t with CDF(t) >= draw; one past the horizon when none
    return (np.searchsorted(cdf[1:], draws, side="left") + 1).astype(np.int16)


def _client_payouts(
    tau_death: np.ndarray,
    tau_surrender: np.ndarray,
    survival_pay: float,
    surrender_pays: np.ndarray,
    horizon: int,
) -> np.ndarray:
    x = np.where((tau_death > horizon) & (tau_surrender > horizon), survival_pay, 0.0)
    for t in range(1, horizon):
        x = np.where((tau_surrender == t) & (tau_death > t), surrender_pays[t], x)
    return x


def simulate_portfolio(
    theta: Theta,
    spec: CopulaSpec,
    benefit: BenefitSpec,
    market: MarketParams,
    n_schedule: Sequence[int],
    trials: int,
    seed: int,
    premium: float = 0.0,
) -> list[PortfolioSample]:
    """Simulate equal-weight client pools under one hazard model.

    Each trial draws a market path from the risk-neutral weights, then a
    pool of conditionally independent clients: one copula draw per
    client mapped through the generalized inverses of the path's
    marginal exit-time distributions.  Per-trial generators are derived
    from (seed, trial), so results are reproducible and independent of
    any execution order.
    """
    sched = _check_schedule(n_schedule)
    if not (isinstance(trials, int) and trials >= 1):
        raise ContractError(f"trials must be a positive integer, got {trials}")
    if not (isinstance(seed, int) and seed >= 0):
        raise ConfigurationError(f"seed must be a nonnegative integer, got {seed}")
    paths = enumerate_paths(market)
    q = np.array([p.q_weight for p in paths])
    T = market.T
    n_max = sched[-1]
    samples: list[PortfolioSample] = []
    for k in range(trials):
        rng = np.random.default_rng([seed, k])
        path = paths[int(rng.choice(len(paths), p=q))]
        death_cdf = np.array([gompertz_cdf(theta, t) for t in range(T + 1)])
        surr_cdf = np.array(
            [surrender_cdf(path, theta, t, benefit.surrender) for t in range(T + 1)]
        )
        u, v = sample_pairs(spec, n_max, rng)
        tau1 = _exit_times(death_cdf, u)
        tau2 = _exit_times(surr_cdf, v)
        survival_pay, surrender_pays = discounted_payoffs(benefit, market, path)
        x = _client_payouts(tau1, tau2, survival_pay, surrender_pays, T)
        cum = np.cumsum(x)
        values = tuple(premium - cum[n - 1] / n for n in sched)
        samples.append(
            PortfolioSample(
                trial=k,
                path_index=path.index,
                tau_death=tau1,
                tau_surrender=tau2,
                n_schedule=sched,
                portfolio_values=values,
                premium=premium,
                conditional_value=conditional_value(path, theta, spec, benefit, market),
                payout_std=float(np.std(x)),
            )
        )
    return samples


def lln_rms(samples: Sequence[PortfolioSample]) -> tuple[np.ndarray, np.ndarray]:
    """Root-mean-square gap to the conditional limit per pool size.

    Returns (rms_error, mean_value) arrays over the common schedule; the
    error of a trial at pool size n is the difference between the
    realized average and its conditional limit premium - G(path, theta).
    """
    if not samples:
        raise ContractError("need at least one sample")
    sched = samples[0].n_schedule
    errs = np.zeros((len(samples), len(sched)))
    vals = np.zeros_like(errs)
    for i, s in enumerate(samples):
        if s.n_schedule != sched:
            raise ContractError("samples mix different schedules")
        vals[i] = s.portfolio_values
        errs[i] = vals[i] - (s.premium - s.conditional_value)
    return np.sqrt(np.mean(errs * errs, axis=0)), vals.mean(axis=0)


def verify_arbitrage(
    pair: ArbitragePair,
    premium: float,
    thetas: Sequence[Theta],
    spec: CopulaSpec,
    benefit: BenefitSpec,
    market: MarketParams,
    trials: int,
    seed: int,
    n_clients: int = 100000,
) -> VerificationReport:
    """Monte-Carlo check of a constructed arbitrage pair.

    For every sampled model and trial the realized combined payoff
    (hedge gain plus averaged premium-minus-benefit balance) must stay
    above -5 * sigma / sqrt(n); in the strict case at least one model
    must show a strictly positive empirical mean.  Violations raise
    VerificationError with the partial report attached.
    """
    if not isinstance(pair, ArbitragePair):
        raise ContractError("pair must come from construct_arbitrage")
    if not thetas:
        raise ContractError("need at least one model to sample")
    paths = enumerate_paths(market)
    holdings = list(pair.holdings)
    means: list[float] = []
    min_payoff = math.inf
    worst_violation = 0.0
    for j, theta in enumerate(thetas):
        samples = simulate_portfolio(
            theta,
            spec,
            benefit,
            market,
            [n_clients],
            trials,
            seed + 7919 * j,
            premium=premium,
        )
        payoffs = []
        for s in samples:
            gain = strategy_gain(market, holdings, paths[s.path_index])
            payoff = s.portfolio_values[-1] + gain
            payoffs.append(payoff)
            min_payoff = min(min_payoff, payoff)
            budget = 5.0 * s.payout_std / math.sqrt(n_clients)
            if payoff < -budget:
                worst_violation = min(worst_violation, payoff + budget)
        means.append(float(np.mean(payoffs)))
    strict_ok = (not pair.strict_case) or max(means) > 0.0
    passed = worst_violation >= 0.0 and strict_ok
    report = VerificationReport(
        n_clients=n_clients,
        trials=trials,
        thetas=tuple(thetas),
        mean_payoffs=tuple(means),
        min_payoff=min_payoff,
        worst_violation=worst_violation,
        strict_required=pair.strict_case,
        strict_ok=strict_ok,
        passed=passed,
    )
    if not passed:
        detail = (
            f"payoff violated the LLN budget by {-worst_violation}"
            if worst_violation < 0.0
            else "no sampled model showed a positive mean payoff"
        )
        raise VerificationError(
            f"arbitrage verification failed: {detail}", report=report
        )
    return report
