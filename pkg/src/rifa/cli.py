"""Batch command-line front end.

Four subcommands drive the engine from a JSON configuration file:

* ``price``     robust and classical prices with per-path statistics
* ``sweep``     CSV of classical supremum prices along one parameter axis
* ``check``     no-arbitrage verdict for the configured premium
* ``simulate``  CSV of law-of-large-numbers diagnostics for client pools

Output is buffered and written only on success, so downstream pipelines
never see a truncated document.  Exit codes: 0 success, 2 invalid
configuration, 3 numerical failure, 10 arbitrage found by ``check``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .benefits import BenefitSpec
from .copulas import CopulaSpec
from .errors import (
    ConfigurationError,
    ContractError,
    NumericalError,
    ResourceError,
)
from .hazards import ParamBox, Theta
from .lattice import MarketParams
from .arbitrage_lab import lln_rms, nrifa_check, simulate_portfolio
from .robust_eval import OptimizerConfig, evaluate, sup_classical

__all__ = [
    "RunConfig",
    "parse_config",
    "canonical_json",
    "main",
]

SWEEP_AXES = ("a", "b", "c", "d", "l", "K", "r_G")

_EXIT_OK = 0
_EXIT_CONFIG = 2
_EXIT_NUMERICAL = 3
_EXIT_RIFA = 10


@dataclass(frozen=True, slots=True)
class RunConfig:
    """One batch run: market, contract, model box, and search settings."""

    market: MarketParams
    benefit: BenefitSpec
    theta_box: ParamBox
    copula: CopulaSpec
    optimizer: OptimizerConfig
    premium: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.premium is not None:
            if not (
                isinstance(self.premium, (int, float))
                and math.isfinite(self.premium)
                and self.premium >= 0.0
            ):
                raise ConfigurationError(f"premium must be >= 0, got {self.premium}")
        if self.seed is not None and not (
            isinstance(self.seed, int) and self.seed >= 0
        ):
            raise ConfigurationError(
                f"seed must be a nonnegative integer, got {self.seed!r}"
            )


def _section(doc: dict, name: str, keys: tuple[str, ...], optional: tuple[str, ...] = ()):
    if name not in doc:
        raise ConfigurationError(f"missing config section {name!r}")
    section = doc[name]
    if not isinstance(section, dict):
        raise ConfigurationError(f"section {name!r} must be an object")
    unknown = set(section) - set(keys) - set(optional)
    if unknown:
        raise ConfigurationError(f"unknown keys in {name!r}: {sorted(unknown)}")
    missing = set(keys) - set(section)
    if missing:
        raise ConfigurationError(f"missing keys in {name!r}: {sorted(missing)}")
    return section


def _number(section: dict, name: str, key: str) -> float:
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigurationError(f"{name}.{key} must be a number, got {v!r}")
    return float(v)


def _interval(section: dict, key: str) -> tuple[float, float]:
    v = section[key]
    if (
        not isinstance(v, list)
        or len(v) != 2
        or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v)
    ):
        raise ConfigurationError(f"theta_box.{key} must be [lo, hi], got {v!r}")
    return float(v[0]), float(v[1])


def parse_config(path: str) -> RunConfig:
    """Read and validate a JSON run configuration."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("config root must be an object")
    known = {"market", "benefit", "theta_box", "copula", "optimizer", "premium", "seed"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"unknown top-level keys: {sorted(unknown)}")

    m = _section(doc, "market", ("s0", "u", "v", "r", "T"))
    if isinstance(m["T"], bool) or not isinstance(m["T"], int):
        raise ConfigurationError(f"market.T must be an integer, got {m['T']!r}")
    market = MarketParams(
        s0=_number(m, "market", "s0"),
        u=_number(m, "market", "u"),
        v=_number(m, "market", "v"),
        r=_number(m, "market", "r"),
        T=m["T"],
    )

    b = _section(doc, "benefit", ("K", "r_G", "l", "surrender"))
    if not isinstance(b["surrender"], bool):
        raise ConfigurationError("benefit.surrender must be true or false")
    benefit = BenefitSpec(
        K=_number(b, "benefit", "K"),
        r_G=_number(b, "benefit", "r_G"),
        l=_number(b, "benefit", "l"),
        surrender=b["surrender"],
    )

    tb = _section(doc, "theta_box", ("a", "b", "c", "d"))
    box = ParamBox(
        a=_interval(tb, "a"),
        b=_interval(tb, "b"),
        c=_interval(tb, "c"),
        d=_interval(tb, "d"),
    )

    cp = _section(doc, "copula", ("family",), optional=("param",))
    family = cp["family"]
    param = cp.get("param")
    if param is not None and (
        isinstance(param, bool) or not isinstance(param, (int, float))
    ):
        raise ConfigurationError(f"copula.param must be a number, got {param!r}")
    copula = CopulaSpec(family, None if param is None else float(param))

    if "optimizer" in doc:
        op = _section(
            doc,
            "optimizer",
            ("method", "multistarts", "tolerance", "max_iters", "grid_points"),
        )
        for key in ("multistarts", "max_iters", "grid_points"):
            if isinstance(op[key], bool) or not isinstance(op[key], int):
                raise ConfigurationError(f"optimizer.{key} must be an integer")
        optimizer = OptimizerConfig(
            method=op["method"],
            multistarts=op["multistarts"],
            tolerance=_number(op, "optimizer", "tolerance"),
            max_iters=op["max_iters"],
            grid_points_per_dim=op["grid_points"],
        )
    else:
        optimizer = OptimizerConfig()

    premium = doc.get("premium")
    if premium is not None:
        if isinstance(premium, bool) or not isinstance(premium, (int, float)):
            raise ConfigurationError(f"premium must be a number, got {premium!r}")
        premium = float(premium)
    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigurationError(f"seed must be an integer, got {seed!r}")

    return RunConfig(
        market=market,
        benefit=benefit,
        theta_box=box,
        copula=copula,
        optimizer=optimizer,
        premium=premium,
        seed=seed,
    )


def canonical_json(config: RunConfig) -> str:
    """Serialize a RunConfig so that re-parsing reproduces it exactly."""
    doc = {
        "market": {
            "s0": config.market.s0,
            "u": config.market.u,
            "v": config.market.v,
            "r": config.market.r,
            "T": config.market.T,
        },
        "benefit": {
            "K": config.benefit.K,
            "r_G": config.benefit.r_G,
            "l": config.benefit.l,
            "surrender": config.benefit.surrender,
        },
        "theta_box": {
            "a": list(config.theta_box.a),
            "b": list(config.theta_box.b),
            "c": list(config.theta_box.c),
            "d": list(config.theta_box.d),
        },
        "copula": {
            "family": config.copula.family,
            "param": config.copula.param,
        },
        "optimizer": {
            "method": config.optimizer.method,
            "multistarts": config.optimizer.multistarts,
            "tolerance": config.optimizer.tolerance,
            "max_iters": config.optimizer.max_iters,
            "grid_points": config.optimizer.grid_points_per_dim,
        },
    }
    if config.premium is not None:
        doc["premium"] = config.premium
    if config.seed is not None:
        doc["seed"] = config.seed
    return json.dumps(doc, indent=2) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _fmt_theta(theta: Theta) -> str:
    return (
        f"a={_fmt(theta.a)} b={_fmt(theta.b)} c={_fmt(theta.c)} d={_fmt(theta.d)}"
    )


def _cmd_price(args) -> tuple[str, int]:
    config = parse_config(args.config)
    if args.echo_config:
        return canonical_json(config), _EXIT_OK
    report = evaluate(
        config.theta_box,
        config.copula,
        config.benefit,
        config.market,
        config.optimizer,
    )
    values = [opt.value for opt in report.per_path]
    lines = [
        f"robust_price = {_fmt(report.robust_price)}",
        f"sup_classical = {_fmt(report.sup_classical)}",
        f"delta = {_fmt(report.delta)}",
        f"argmax_outer = {_fmt_theta(report.argmax_outer)}",
        f"per_path_count = {len(values)}",
        f"per_path_min = {_fmt(min(values))}",
        f"per_path_max = {_fmt(max(values))}",
        f"per_path_mean = {_fmt(math.fsum(values) / len(values))}",
    ]
    return "\n".join(lines) + "\n", _EXIT_OK


def _swept_configs(config: RunConfig, axis: str, value: float):
    """Collapse a box axis to the sweep point, or rebuild the benefit."""
    box, benefit = config.theta_box, config.benefit
    if axis in ("a", "b", "c", "d"):
        intervals = {
            "a": box.a,
            "b": box.b,
            "c": box.c,
            "d": box.d,
            axis: (value, value),
        }
        box = ParamBox(**intervals)
    elif axis == "l":
        benefit = BenefitSpec(benefit.K, benefit.r_G, value, benefit.surrender)
    elif axis == "K":
        benefit = BenefitSpec(value, benefit.r_G, benefit.l, benefit.surrender)
    else:
        benefit = BenefitSpec(benefit.K, value, benefit.l, benefit.surrender)
    return box, benefit


def _cmd_sweep(args) -> tuple[str, int]:
    config = parse_config(args.config)
    if not (math.isfinite(args.lo) and math.isfinite(args.hi) and args.lo <= args.hi):
        raise ConfigurationError(f"need lo <= hi, got [{args.lo}, {args.hi}]")
    if args.steps < 1:
        raise ConfigurationError(f"steps must be >= 1, got {args.steps}")
    grid = np.linspace(args.lo, args.hi, args.steps)
    rows = ["axis_value,price"]
    for value in grid:
        box, benefit = _swept_configs(config, args.axis, float(value))
        price, _ = sup_classical(
            box, config.copula, benefit, config.market, config.optimizer
        )
        rows.append(f"{_fmt(float(value))},{_fmt(price)}")
    return "\n".join(rows) + "\n", _EXIT_OK


def _cmd_check(args) -> tuple[str, int]:
    config = parse_config(args.config)
    if config.premium is None:
        raise ConfigurationError("check requires a premium in the config")
    report = evaluate(
        config.theta_box,
        config.copula,
        config.benefit,
        config.market,
        config.optimizer,
    )
    verdict = nrifa_check(
        config.premium,
        report,
        config.theta_box,
        config.copula,
        config.benefit,
        config.market,
        config.optimizer,
    )
    lines = [
        f"status = {verdict.status}",
        f"premium = {_fmt(verdict.premium)}",
        f"robust_price = {_fmt(verdict.robust_price)}",
        f"inf_classical = {_fmt(verdict.inf_classical)}",
        f"margin_i = {_fmt(verdict.margin_i)}",
        f"margin_ii = {_fmt(verdict.margin_ii)}",
        f"boundary_case = {str(verdict.boundary_case).lower()}",
    ]
    if verdict.theta_prime is not None:
        lines.append(f"theta_prime = {_fmt_theta(verdict.theta_prime)}")
    code = _EXIT_OK if verdict.is_nrifa else _EXIT_RIFA
    return "\n".join(lines) + "\n", code


def _decade_schedule(n_max: int) -> list[int]:
    if n_max < 100:
        return [n_max]
    sched = []
    n = 100
    while n < n_max:
        sched.append(n)
        n *= 10
    sched.append(n_max)
    return sched


def _cmd_simulate(args) -> tuple[str, int]:
    config = parse_config(args.config)
    if config.premium is None:
        raise ConfigurationError("simulate requires a premium in the config")
    if config.seed is None:
        raise ConfigurationError("simulate requires a seed in the config")
    if args.n_max < 1:
        raise ConfigurationError(f"--n-max must be >= 1, got {args.n_max}")
    if args.trials < 1:
        raise ConfigurationError(f"--trials must be >= 1, got {args.trials}")
    box = config.theta_box
    theta = Theta(
        a=0.5 * (box.a[0] + box.a[1]),
        b=0.5 * (box.b[0] + box.b[1]),
        c=0.5 * (box.c[0] + box.c[1]),
        d=0.5 * (box.d[0] + box.d[1]),
    )
    samples = simulate_portfolio(
        theta,
        config.copula,
        config.benefit,
        config.market,
        _decade_schedule(args.n_max),
        args.trials,
        config.seed,
        premium=config.premium,
    )
    rms, mean_v = lln_rms(samples)
    rows = ["n,rms_error,mean_V"]
    for n, r, m in zip(samples[0].n_schedule, rms, mean_v):
        rows.append(f"{n},{_fmt(float(r))},{_fmt(float(m))}")
    return "\n".join(rows) + "\n", _EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rifa",
        description="Robust valuation and arbitrage checks for "
        "finance-linked insurance benefits on a binomial market.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_price = sub.add_parser("price", help="robust and classical prices")
    p_price.add_argument("--config", required=True, help="JSON config path")
    p_price.add_argument(
        "--echo-config",
        action="store_true",
        help="print the parsed config as canonical JSON and exit",
    )

    p_sweep = sub.add_parser("sweep", help="CSV price sweep along one axis")
    p_sweep.add_argument("--config", required=True, help="JSON config path")
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--lo", required=True, type=float)
    p_sweep.add_argument("--hi", required=True, type=float)
    p_sweep.add_argument("--steps", required=True, type=int)

    p_check = sub.add_parser("check", help="no-arbitrage verdict")
    p_check.add_argument("--config", required=True, help="JSON config path")

    p_sim = sub.add_parser("simulate", help="CSV of pool convergence diagnostics")
    p_sim.add_argument("--config", required=True, help="JSON config path")
    p_sim.add_argument("--n-max", type=int, default=100000, dest="n_max")
    p_sim.add_argument("--trials", type=int, default=200)

    return parser


_DISPATCH = {
    "price": _cmd_price,
    "sweep": _cmd_sweep,
    "check": _cmd_check,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        output, code = _DISPATCH[args.command](args)
    except (ConfigurationError, ContractError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return _EXIT_CONFIG
    except (NumericalError, ResourceError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return _EXIT_NUMERICAL
    sys.stdout.write(output)
    return code


if __name__ == "__main__":
    sys.exit(main())
