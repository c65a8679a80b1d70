"""Worst-case valuation of the contract over the hazard parameter box.

The filtration generated by the market is atomic: conditioning on the
full market history is conditioning on a lattice path.  For a fixed
hazard parameter point the conditional discounted contract value on a
path is

    G(path, theta) = survival_pay * P(no decrement through T)
                   + sum_t surrender_pay[t] * P(alive at t, surrender at t),

with both probabilities produced by the copula-coupled hazard models.
The worst-case price replaces G by its per-path supremum over the box
(suprema over equivalent model families act pathwise here because all
models share the market's null sets), then integrates under the
risk-neutral weights:

    robust_price = sum_paths q_weight * sup_theta G(path, theta).

Monotone reduction: every admissible copula is 2-increasing, so both the
joint survival mass and each surrender slice mass are nondecreasing in
the death survival level, which is itself decreasing in b and c.  Hence
G is nonincreasing in (b, c) for every family, and the supremum pins
them at the lower box corner (the infimum at the upper corner), leaving
a 2-dimensional search over (a, d).  That search runs deterministic
multistart Nelder-Mead on box-normalised coordinates, a dense grid, or
both (hybrid), per the optimizer configuration.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from rifa.benefits import BenefitSpec, discounted_payoffs
from rifa.copulas import CopulaSpec, _survival_array, SLICE_TOL
from rifa.errors import ConfigurationError, NumericalError
from rifa.hazards import ParamBox, Theta
from rifa.lattice import MarketParams, Path, enumerate_paths

OPTIMIZER_METHODS = ("nelder_mead", "grid", "hybrid")

# simplex-size tolerance in box-normalised coordinates
_XATOL = 1e-8
# resolution of the pre-multistart screening batch (coarser than any
# validation grid, so cross-checks against grid oracles stay meaningful)
_SCREEN_POINTS_PER_DIM = 17


@dataclass(frozen=True, slots=True)
class OptimizerConfig:
    """Search settings for all box optimizations.

    method:              nelder_mead, grid, or hybrid (both, best of)
    multistarts:         Nelder-Mead starts on a fixed Latin pattern
    tolerance:           absolute function tolerance for convergence
    max_iters:           Nelder-Mead iteration cap per start
    grid_points_per_dim: grid resolution for grid/hybrid methods
    """

    method: str = "nelder_mead"
    multistarts: int = 5
    tolerance: float = 1e-8
    max_iters: int = 500
    grid_points_per_dim: int = 64

    def __post_init__(self):
        if self.method not in OPTIMIZER_METHODS:
            raise ConfigurationError(
                f"method must be one of {OPTIMIZER_METHODS}, got {self.method!r}"
            )
        if self.multistarts < 1:
            raise ConfigurationError("multistarts must be >= 1")
        if not (self.tolerance > 0.0):
            raise ConfigurationError("tolerance must be positive")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if self.grid_points_per_dim < 2:
            raise ConfigurationError("grid_points_per_dim must be >= 2")


@dataclass(frozen=True, slots=True)
class PathOptimum:
    """Worst-case value of one path: index, value, attaining parameters."""

    index: int
    q_weight: float
    value: float
    theta: Theta


@dataclass(frozen=True, slots=True)
class EvaluationReport:
    """Result of a robust valuation, optionally with the classical side.

    robust_price:  weighted sum of per-path worst-case values
    per_path:      the per-path optima, ascending path index
    sup_classical: best single-model price over the box (None if not run)
    argmax_outer:  parameter point attaining sup_classical
    delta:         robust_price - sup_classical (None if not run)
    """

    robust_price: float
    per_path: tuple[PathOptimum, ...]
    sup_classical: float | None = None
    argmax_outer: Theta | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.sup_classical is not None:
            if self.delta is None or not math.isclose(
                self.delta, self.robust_price - self.sup_classical, abs_tol=1e-12
            ):
                raise NumericalError("delta must equal robust_price - sup_classical")
            # pathwise domination makes the robust price an upper bound
            if self.delta < -1e-9:
                raise NumericalError(
                    f"robust price {self.robust_price} below classical supremum "
                    f"{self.sup_classical}"
                )


class _PathEvaluator:
    """Fast conditional-value evaluation on one fixed path.

    Price prefix sums make the surrender hazard an O(1) quadratic in a
    per date, so a value costs O(T) exponentials; the grid variant
    evaluates whole (a, d) point batches with numpy.
    """

    __slots__ = ("T", "spec", "surr_on", "v_pay", "v_surv", "cum1", "cum2", "tt")

    def __init__(
        self,
        path: Path,
        spec: CopulaSpec,
        benefit: BenefitSpec,
        market: MarketParams,
    ):
        self.T = market.T
        self.spec = spec
        self.surr_on = benefit.surrender
        survival_pay, surrender_pays = discounted_payoffs(benefit, market, path)
        self.v_surv = survival_pay
        self.v_pay = surrender_pays  # interior dates only; [0] and [T] are 0
        prices = np.asarray(path.prices)
        self.cum1 = np.concatenate(([0.0], np.cumsum(prices[:-1])))
        self.cum2 = np.concatenate(([0.0], np.cumsum(prices[:-1] ** 2)))
        self.tt = np.arange(self.T + 1, dtype=float)

    def death_survival(self, b: float, c: float) -> np.ndarray:
        """P(death > t) for t = 0..T."""
        loads = b * np.exp(c * np.arange(self.T, dtype=float))
        return np.exp(-np.concatenate(([0.0], np.cumsum(loads))))

    def surrender_survival(self, a: np.ndarray, d: np.ndarray) -> np.ndarray:
        """P(surrender > t) block, one row per (a, d) point."""
        a = np.atleast_1d(np.asarray(a, dtype=float))
        d = np.atleast_1d(np.asarray(d, dtype=float))
        load = self.tt * a[:, None] ** 2 - 2.0 * a[:, None] * self.cum1 + self.cum2
        return np.exp(-load / d[:, None])

    def values(
        self, a: np.ndarray, d: np.ndarray, b: float, c: float
    ) -> np.ndarray:
        """Conditional values at paired (a, d) points with (b, c) fixed."""
        f1 = self.death_survival(b, c)
        if not self.surr_on:
            n = np.atleast_1d(np.asarray(a, dtype=float)).shape[0]
            return np.full(n, self.v_surv * f1[self.T])
        f2 = self.surrender_survival(a, d)
        return _combine(self.spec, f1, f2, self.v_pay, self.v_surv)

    def value(self, theta: Theta) -> float:
        return float(self.values(theta.a, theta.d, theta.b, theta.c)[0])

    def objective_ad(self, b: float, c: float) -> Callable[[float, float], float]:
        """Scalar (a, d) objective with the death leg frozen."""

        def f(a: float, d: float) -> float:
            return float(self.values(a, d, b, c)[0])

        return f


def _combine(
    spec: CopulaSpec,
    f1: np.ndarray,
    f2: np.ndarray,
    v_pay: np.ndarray,
    v_surv,
) -> np.ndarray:
    """Assemble conditional values from survival blocks.

    f1: death survival, (T+1,).  f2: surrender survival, (n, T+1).
    v_pay: interior surrender payouts, (T+1,) or (n, T+1).
    v_surv: maturity payout, scalar or (n,).
    """
    T = f1.shape[0] - 1
    if spec.is_independence:
        survival = f1[T] * f2[:, T]
        slices = f2[:, 0 : T - 1] - f2[:, 1:T] if T >= 2 else None
        if slices is not None and float(slices.min(initial=0.0)) < -SLICE_TOL:
            raise NumericalError("negative surrender slice mass beyond tolerance")
        interior = (
            (slices * (np.atleast_2d(v_pay)[:, 1:T] * f1[1:T])).sum(axis=1)
            if T >= 2
            else 0.0
        )
        return v_surv * survival + interior
    survival = _survival_array(spec, np.asarray(f1[T]), f2[:, T])
    if T >= 2:
        upper = _survival_array(spec, f1[None, 1:T], f2[:, 0 : T - 1])
        lower = _survival_array(spec, f1[None, 1:T], f2[:, 1:T])
        slices = upper - lower
        if float(slices.min(initial=0.0)) < -SLICE_TOL:
            raise NumericalError("negative surrender slice mass beyond tolerance")
        interior = (np.clip(slices, 0.0, None) * np.atleast_2d(v_pay)[:, 1:T]).sum(
            axis=1
        )
    else:
        interior = 0.0
    return v_surv * survival + interior


class _LatticeEvaluator:
    """Conditional values stacked across all paths, for outer optimization."""

    __slots__ = ("T", "spec", "surr_on", "q", "v_pay", "v_surv", "cum1", "cum2", "tt", "paths")

    def __init__(
        self,
        paths: Sequence[Path],
        spec: CopulaSpec,
        benefit: BenefitSpec,
        market: MarketParams,
    ):
        self.T = market.T
        self.spec = spec
        self.surr_on = benefit.surrender
        self.paths = paths
        self.q = np.array([p.q_weight for p in paths])
        v_surv = []
        v_pay = []
        cum1 = []
        cum2 = []
        for p in paths:
            sp, ip = discounted_payoffs(benefit, market, p)
            v_surv.append(sp)
            v_pay.append(ip)
            prices = np.asarray(p.prices)
            cum1.append(np.concatenate(([0.0], np.cumsum(prices[:-1]))))
            cum2.append(np.concatenate(([0.0], np.cumsum(prices[:-1] ** 2))))
        self.v_surv = np.array(v_surv)
        self.v_pay = np.array(v_pay)
        self.cum1 = np.array(cum1)
        self.cum2 = np.array(cum2)
        self.tt = np.arange(self.T + 1, dtype=float)

    def _death_survival(self, b: float, c: float) -> np.ndarray:
        loads = b * np.exp(c * np.arange(self.T, dtype=float))
        return np.exp(-np.concatenate(([0.0], np.cumsum(loads))))

    def path_values(self, theta: Theta) -> np.ndarray:
        """Conditional value of every path at one parameter point."""
        f1 = self._death_survival(theta.b, theta.c)
        if not self.surr_on:
            return self.v_surv * f1[self.T]
        load = self.tt * theta.a**2 - 2.0 * theta.a * self.cum1 + self.cum2
        f2 = np.exp(-load / theta.d)
        return _combine(self.spec, f1, f2, self.v_pay, self.v_surv)

    def classical(self, theta: Theta) -> float:
        """Single-model price: exact ordered reduction over paths."""
        return math.fsum((self.q * self.path_values(theta)).tolist())

    def classical_batch(
        self, a: np.ndarray, d: np.ndarray, b: float, c: float
    ) -> np.ndarray:
        """Single-model prices at paired (a, d) points, (b, c) fixed."""
        a = np.asarray(a, dtype=float)
        d = np.asarray(d, dtype=float)
        f1 = self._death_survival(b, c)
        out = np.zeros(a.shape[0])
        if not self.surr_on:
            out[:] = float(np.dot(self.q, self.v_surv)) * f1[self.T]
            return out
        # path loop keeps the accumulation order fixed and memory flat
        for i in range(self.q.shape[0]):
            load = self.tt * a[:, None] ** 2 - 2.0 * a[:, None] * self.cum1[i] + self.cum2[i]
            f2 = np.exp(-load / d[:, None])
            out += self.q[i] * _combine(
                self.spec, f1, f2, self.v_pay[i], self.v_surv[i]
            )
        return out


def _latin_starts(k: int, ndim: int) -> list[tuple[float, ...]]:
    """k deterministic starts on a Latin pattern over the unit cube."""
    fractions = [(i + 0.5) / k for i in range(k)]
    if ndim == 1:
        return [(f,) for f in fractions]
    perm = list(range(0, k, 2)) + list(range(1, k, 2))
    return [(fractions[i], fractions[perm[i]]) for i in range(k)]


def _optimize_ad(
    scalar_f: Callable[[float, float], float],
    batch_f: Callable[[np.ndarray, np.ndarray], np.ndarray] | None,
    a_iv: tuple[float, float],
    d_iv: tuple[float, float],
    cfg: OptimizerConfig,
    maximize: bool,
    extra_points: Sequence[tuple[float, float]] = (),
) -> tuple[float, tuple[float, float]]:
    """Optimize a smooth objective over the (a, d) rectangle.

    Candidate points come from multistart Nelder-Mead, the dense grid,
    the rectangle corners and midpoint, and any caller-supplied extras;
    the winner is re-evaluated through `scalar_f` so the reported value
    is canonical regardless of which route produced the point.
    """
    sign = -1.0 if maximize else 1.0
    a_lo, a_hi = a_iv
    d_lo, d_hi = d_iv
    free = [i for i, (lo, hi) in enumerate((a_iv, d_iv)) if hi > lo]

    def to_point(z: Sequence[float]) -> tuple[float, float]:
        vals = [a_lo, d_lo]
        for j, i in enumerate(free):
            lo, hi = (a_iv, d_iv)[i]
            vals[i] = lo + min(max(z[j], 0.0), 1.0) * (hi - lo)
        return vals[0], vals[1]

    candidates: list[tuple[float, float]] = [
        (a_lo, d_lo),
        (a_lo, d_hi),
        (a_hi, d_lo),
        (a_hi, d_hi),
        (0.5 * (a_lo + a_hi), 0.5 * (d_lo + d_hi)),
    ]
    for a, d in extra_points:
        candidates.append((min(max(a, a_lo), a_hi), min(max(d, d_lo), d_hi)))

    if free and cfg.method in ("grid", "hybrid"):
        n = cfg.grid_points_per_dim
        a_grid = np.linspace(a_lo, a_hi, n) if a_hi > a_lo else np.array([a_lo])
        d_grid = np.linspace(d_lo, d_hi, n) if d_hi > d_lo else np.array([d_lo])
        aa, dd = np.meshgrid(a_grid, d_grid, indexing="ij")
        aa, dd = aa.ravel(), dd.ravel()
        vals = (
            batch_f(aa, dd)
            if batch_f is not None
            else np.array([scalar_f(x, y) for x, y in zip(aa, dd)])
        )
        best = int(np.argmin(sign * vals))
        candidates.append((float(aa[best]), float(dd[best])))

    if free and cfg.method in ("nelder_mead", "hybrid"):
        # space-filling screen: its best point seeds one extra polish run,
        # so multistart locality cannot miss a basin the screen can see
        starts = _latin_starts(cfg.multistarts, len(free))
        n_screen = _SCREEN_POINTS_PER_DIM if len(free) == 2 else _SCREEN_POINTS_PER_DIM**2
        axes = [np.linspace(0.0, 1.0, n_screen)] * len(free)
        mesh = np.meshgrid(*axes, indexing="ij") if len(free) == 2 else axes
        zz = np.stack([m.ravel() for m in mesh], axis=1)
        pts = np.array([to_point(z) for z in zz])
        vals = (
            batch_f(pts[:, 0], pts[:, 1])
            if batch_f is not None
            else np.array([scalar_f(x, y) for x, y in pts])
        )
        starts.append(tuple(zz[int(np.argmin(sign * vals))]))
        converged = 0
        for z0 in starts:
            res = minimize(
                lambda z: sign * scalar_f(*to_point(z)),
                np.asarray(z0),
                method="Nelder-Mead",
                bounds=[(0.0, 1.0)] * len(free),
                options={
                    "maxiter": cfg.max_iters,
                    "fatol": cfg.tolerance,
                    "xatol": _XATOL,
                },
            )
            candidates.append(to_point(res.x))
            converged += bool(res.success)
        if converged == 0:
            best_val = None
            for a, d in candidates:
                val = scalar_f(a, d)
                if best_val is None or sign * val < sign * best_val:
                    best_val = val
            raise NumericalError(
                f"Nelder-Mead failed to converge within {cfg.max_iters} iterations "
                f"on all {len(starts)} starts",
                best_value=best_val,
            )

    best_point = candidates[0]
    best_val = scalar_f(*best_point)
    for point in candidates[1:]:
        val = scalar_f(*point)
        if sign * val < sign * best_val:
            best_val, best_point = val, point
    if not math.isfinite(best_val):
        raise NumericalError(f"objective returned non-finite value {best_val}")
    return best_val, best_point


def conditional_value(
    path: Path,
    theta: Theta,
    spec: CopulaSpec,
    benefit: BenefitSpec,
    market: MarketParams,
) -> float:
    """Discounted conditional contract value G(path, theta)."""
    return _PathEvaluator(path, spec, benefit, market).value(theta)


def pathwise_esssup(
    path: Path,
    box: ParamBox,
    spec: CopulaSpec,
    benefit: BenefitSpec,
    market: MarketParams,
    cfg: OptimizerConfig,
    extra_thetas: Sequence[Theta] = (),
) -> tuple[float, Theta]:
    """Per-path supremum of the conditional value over the box.

    (b, c) are pinned to their lower bounds by the monotone certificate;
    the remaining (a, d) rectangle is searched per the configuration.
    """
    ev = _PathEvaluator(path, spec, benefit, market)
    b, c = box.b[0], box.c[0]
    scalar_f = ev.objective_ad(b, c)

    def batch_f(a: np.ndarray, d: np.ndarray) -> np.ndarray:
        return ev.values(a, d, b, c)

    value, (a_star, d_star) = _optimize_ad(
        scalar_f,
        batch_f,
        box.a,
        box.d,
        cfg,
        maximize=True,
        extra_points=[(t.a, t.d) for t in extra_thetas],
    )
    return value, Theta(a_star, b, c, d_star)


def _worker_count() -> int:
    """Worker cap from RIFA_THREADS; 0 means auto, unset/garbage means 1."""
    raw = os.environ.get("RIFA_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def robust_price(
    box: ParamBox,
    spec: CopulaSpec,
    benefit: BenefitSpec,
    market: MarketParams,
    cfg: OptimizerConfig,
    extra_thetas: Sequence[Theta] = (),
) -> EvaluationReport:
    """Worst-case price: q-weighted per-path suprema, robust side only.

    Path results are combined by an exact sum in ascending path-index
    order, so the value does not depend on the worker count.
    """
    paths = enumerate_paths(market)

    def solve(path: Path) -> PathOptimum:
        value, theta = pathwise_esssup(
            path, box, spec, benefit, market, cfg, extra_thetas
        )
        return PathOptimum(path.index, path.q_weight, value, theta)

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            optima = list(pool.map(solve, paths))
    else:
        optima = [solve(p) for p in paths]
    total = math.fsum(opt.q_weight * opt.value for opt in optima)
    return EvaluationReport(robust_price=total, per_path=tuple(optima))


def classical_price(
    theta: Theta,
    spec: CopulaSpec,
    benefit: BenefitSpec,
    market: MarketParams,
) -> float:
    """Price under one fixed hazard model: E_Q of the conditional value."""
    ev = _LatticeEvaluator(enumerate_paths(market), spec, benefit, market)
    return ev.classical(theta)


def _optimize_classical(
    box: ParamBox,
    spec: CopulaSpec,
    benefit: BenefitSpec,
    market: MarketParams,
    cfg: OptimizerConfig,
    maximize: bool,
) -> tuple[float, Theta]:
    ev = _LatticeEvaluator(enumerate_paths(market), spec, benefit, market)
    # monotone certificate: worst case pins (b, c) low, best case high
    b, c = (box.b[0], box.c[0]) if maximize else (box.b[1], box.c[1])

    def scalar_f(a: float, d: float) -> float:
        return ev.classical(Theta(a, b, c, d))

    def batch_f(a: np.ndarray, d: np.ndarray) -> np.ndarray:
        return ev.classical_batch(a, d, b, c)

    value, (a_star, d_star) = _optimize_ad(
        scalar_f, batch_f, box.a, box.d, cfg, maximize=maximize
    )
    return value, Theta(a_star, b, c, d_star)


def sup_classical(
    box: ParamBox,
    spec: CopulaSpec,
    benefit: BenefitSpec,
    market: MarketParams,
    cfg: OptimizerConfig,
) -> tuple[float, Theta]:
    """Largest single-model price over the box, with its attaining point."""
    return _optimize_classical(box, spec, benefit, market, cfg, maximize=True)


def inf_classical(
    box: ParamBox,
    spec: CopulaSpec,
    benefit: BenefitSpec,
    market: MarketParams,
    cfg: OptimizerConfig,
) -> tuple[float, Theta]:
    """Smallest single-model price over the box, with its attaining point."""
    return _optimize_classical(box, spec, benefit, market, cfg, maximize=False)


def evaluate(
    box: ParamBox,
    spec: CopulaSpec,
    benefit: BenefitSpec,
    market: MarketParams,
    cfg: OptimizerConfig,
) -> EvaluationReport:
    """Full robust-versus-classical evaluation.

    The classical argmax is injected as a candidate into every per-path
    search, which guarantees the domination robust >= sup_classical holds
    in floating point, not just in theory.
    """
    sup_val, theta_star = sup_classical(box, spec, benefit, market, cfg)
    robust = robust_price(box, spec, benefit, market, cfg, extra_thetas=(theta_star,))
    return EvaluationReport(
        robust_price=robust.robust_price,
        per_path=robust.per_path,
        sup_classical=sup_val,
        argmax_outer=theta_star,
        delta=robust.robust_price - sup_val,
    )
