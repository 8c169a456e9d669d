"""Command-line surface: fit, solve, pareto, check.

Exit codes: 0 ok, 2 input error, 3 infeasible revenue target, 4 failed
diagnostics. Monetary figures print in $/cycle with 4 significant figures;
CSV outputs carry machine precision (repr round-trip). Every output file
embeds its provenance (model files) or gets a sidecar `<out>.manifest.json`.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .checks import run_model_checks
from .errors import InfeasibleTarget, InvalidRegime, TariffLabError
from .ingest import (
    CalibrationConfig,
    ModelFilePayload,
    RawSeries,
    calibrate_demand,
    estimate_moments,
    file_digest,
    fit_provenance,
    parse_csv,
    read_model_file,
    revenue_baseline,
    write_model_file,
)
from .model import (
    LinearDemandModel,
    Tariff,
    WelfareReport,
    flat_rate_elasticity,
    retailer_surplus,
    welfare_gains,
)
from .pareto import ParetoFront, default_revenue_grid, sweep
from .solvers import (
    DEFAULT_CONFIG,
    solve_adjusted_flat,
    solve_flat_linear,
    solve_linear,
    solve_two_part,
)
from .svg import render_fronts

FAMILY_ALIASES = {
    "two-part": "two-part-optimal",
    "two-part-optimal": "two-part-optimal",
    "linear": "linear-optimal",
    "linear-optimal": "linear-optimal",
    "flat-linear": "flat-linear",
    "fixed-a-two-part": "fixed-A-two-part",
    "fixed-A-two-part": "fixed-A-two-part",
    "adjusted-flat": "adjusted-flat",
}


def _money(x: float) -> str:
    return format(x, ".4g")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _threads_from_env() -> int | None:
    raw = os.environ.get("TARIFFLAB_THREADS")
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"TARIFFLAB_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"TARIFFLAB_THREADS must be >= 1, got {value}")
    return value


def _write_manifest(out_path, command: str, inputs: dict, flags: dict) -> None:
    manifest = {
        "command": command,
        "tool_version": __version__,
        "inputs": {name: file_digest(p) for name, p in inputs.items()},
        "flags": flags,
        "created": _now(),
    }
    Path(str(out_path) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def _scaled_prices(series: RawSeries, unit: str) -> RawSeries:
    if unit == "kwh":
        return series
    return dataclasses.replace(series, values=series.values * 1e-3)


def _resolve_baseline(
    payload: ModelFilePayload, model: LinearDemandModel, args
) -> Tariff:
    rate = getattr(args, "flat_rate", None)
    charge = getattr(args, "connection_charge", None)
    if rate is None:
        rate = payload.baseline_flat_rate
    if charge is None:
        charge = payload.baseline_connection_charge
    if rate is None or charge is None:
        raise ValueError(
            "model file carries no baseline tariff; pass --flat-rate and "
            "--connection-charge"
        )
    return Tariff(
        connection_charge=float(charge),
        prices=np.full(model.periods, float(rate)),
        family="adjusted-flat",
    )


def _resolve_target(raw: str, model: LinearDemandModel, baseline: Tariff) -> float:
    if raw == "baseline":
        return retailer_surplus(model, baseline)
    try:
        return float(raw)
    except ValueError:
        raise ValueError(
            f"--target-rs must be a number or 'baseline', got {raw!r}"
        ) from None


def _parse_families(raw: str) -> set[str]:
    if raw == "all":
        return set(FAMILY_ALIASES.values())
    names = [part.strip() for part in raw.split(",") if part.strip()]
    unknown = [n for n in names if n not in FAMILY_ALIASES]
    if unknown or not names:
        raise ValueError(
            f"--families must list tariff families or 'all', got {raw!r}"
        )
    return {FAMILY_ALIASES[n] for n in names}


def front_csv(fronts: list[ParetoFront], periods: int) -> str:
    cols = ["family", "F", "delta_cs", "delta_rs", "delta_sw", "feasible"]
    cols += [f"pi_{t}" for t in range(periods)]
    lines = [",".join(cols)]
    for front in fronts:
        for p in front.points:
            if p.feasible:
                prices = [repr(float(x)) for x in p.tariff.prices]
                row = [
                    front.family,
                    repr(float(p.F)),
                    repr(float(p.delta_cs)),
                    repr(float(p.delta_rs)),
                    repr(float(p.delta_sw)),
                    "true",
                    *prices,
                ]
            else:
                row = [front.family, repr(float(p.F))] + ["nan"] * 3 + ["false"]
                row += ["nan"] * periods
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _parse_csv_with_context(path, kind: str) -> RawSeries:
    try:
        return parse_csv(path, kind)
    except TariffLabError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def cmd_fit(args) -> int:
    load = _parse_csv_with_context(args.load, "load")
    prices = _scaled_prices(_parse_csv_with_context(args.prices, "price"), args.price_unit)
    scenarios = estimate_moments(load, prices)
    config = CalibrationConfig(
        flat_rate=args.flat_rate,
        elasticity_target=args.elasticity,
        alpha=args.alpha,
        customers=args.customers,
        connection_charge=args.connection_charge,
    )
    model = calibrate_demand(scenarios, config)
    provenance = fit_provenance(args.load, args.prices, config, created=_now())
    write_model_file(args.out, model, baseline=config, provenance=provenance)

    eigs = np.linalg.eigvalsh(model.G)
    tr_sigma = float(np.trace(model.scenarios.sigma_lambda_omega))
    revenue = revenue_baseline(model, config)
    print(f"model written to {args.out}")
    print(f"periods: {model.periods}  scenarios: {model.scenarios.n_scenarios}")
    print(f"realized elasticity at flat rate: {flat_rate_elasticity(model, config.flat_rate)!r}")
    print(f"G eigenvalue range: [{float(eigs[0])!r}, {float(eigs[-1])!r}]")
    print(f"tr cov(lambda, Omega): {tr_sigma!r}")
    print(f"baseline revenue: gross {_money(revenue.gross)} $/cycle, "
          f"net {_money(revenue.net)} $/cycle")
    return 0


def _solve_with_diagnostics(model, family, F, baseline):
    config = DEFAULT_CONFIG
    diagnostics: dict[str, float] = {}
    if family == "two-part-optimal":
        tariff = solve_two_part(model, F, config)
    elif family == "linear-optimal":
        sol = solve_linear(model, F, config)
        tariff = sol.tariff
        diagnostics = {"rho": sol.rho, "gamma": sol.gamma, "achieved_rs": sol.achieved_rs}
    elif family == "flat-linear":
        tariff = solve_flat_linear(model, F, config)
    elif family == "fixed-A-two-part":
        charge = baseline.connection_charge
        sol = solve_linear(model, F - model.customers * charge, config)
        tariff = Tariff(
            connection_charge=charge, prices=sol.prices, family="fixed-A-two-part"
        )
        diagnostics = {"rho": sol.rho, "gamma": sol.gamma, "achieved_rs": sol.achieved_rs}
    elif family == "adjusted-flat":
        base_rate = float(baseline.prices[0])
        tariff = solve_adjusted_flat(
            model, F, base_rate, baseline.connection_charge, config
        )
        diagnostics = {"delta": float(tariff.prices[0]) - base_rate}
    else:
        raise ValueError(f"unknown family {family!r}")
    return tariff, diagnostics


def print_solution(
    family: str, F: float, tariff: Tariff, report: WelfareReport, diagnostics: dict
) -> None:
    print(f"family: {family}")
    print(f"target rs (F): {_money(F)} $/cycle")
    print(f"connection charge A: {_money(tariff.connection_charge)} $/customer/cycle")
    print("prices ($/kWh):")
    for t, price in enumerate(tariff.prices):
        print(f"  {t:>3d}  {price:.6g}")
    for key, value in diagnostics.items():
        print(f"{key}: {value:.10g}")
    print("welfare vs baseline:")
    print(f"  delta_cs: {_money(report.delta_cs)} $/cycle")
    print(f"  delta_rs: {_money(report.delta_rs)} $/cycle")
    print(f"  delta_sw: {_money(report.delta_sw)} $/cycle")
    print(f"  rs_absolute: {_money(report.rs_absolute)} $/cycle")


def cmd_solve(args) -> int:
    payload = read_model_file(args.model)
    model = payload.to_model()
    baseline = _resolve_baseline(payload, model, args)
    F = _resolve_target(args.target_rs, model, baseline)
    family = FAMILY_ALIASES[args.family]
    tariff, diagnostics = _solve_with_diagnostics(model, family, F, baseline)
    report = welfare_gains(model, tariff, baseline)
    print_solution(family, F, tariff, report, diagnostics)
    if args.out:
        from .pareto import ParetoPoint

        point = ParetoPoint(
            F=F,
            delta_cs=report.delta_cs,
            delta_rs=report.delta_rs,
            delta_sw=report.delta_sw,
            tariff=tariff,
            feasible=True,
        )
        front = ParetoFront(
            family=family,
            points=(point,),
            baseline=baseline,
            baseline_rs=retailer_surplus(model, baseline),
        )
        Path(args.out).write_text(front_csv([front], model.periods))
        _write_manifest(
            args.out, "solve", {"model": args.model},
            {"family": family, "target_rs": args.target_rs},
        )
    return 0


def cmd_pareto(args) -> int:
    payload = read_model_file(args.model)
    model = payload.to_model()
    baseline = _resolve_baseline(payload, model, args)
    families = _parse_families(args.families)
    steps = args.steps
    if steps < 1:
        raise ValueError(f"--steps must be >= 1, got {steps}")
    if args.f_min is not None or args.f_max is not None:
        if args.f_min is None or args.f_max is None:
            raise ValueError("--f-min and --f-max must be given together")
        grid = np.linspace(args.f_min, args.f_max, steps)
    else:
        grid = default_revenue_grid(model, steps)
    fronts = sweep(
        model, baseline, families, grid, max_workers=_threads_from_env()
    )
    csv_text = front_csv(fronts, model.periods)
    flags = {
        "families": sorted(families),
        "f_min": float(grid[0]),
        "f_max": float(grid[-1]),
        "steps": steps,
    }
    if args.out:
        Path(args.out).write_text(csv_text)
        _write_manifest(args.out, "pareto", {"model": args.model}, flags)
        print(f"front table written to {args.out}")
    else:
        sys.stdout.write(csv_text)
    if args.svg:
        Path(args.svg).write_text(render_fronts(fronts))
        _write_manifest(args.svg, "pareto", {"model": args.model}, flags)
        print(f"front plot written to {args.svg}")
    return 0


def cmd_check(args) -> int:
    payload = read_model_file(args.model)
    results = run_model_checks(payload)
    failed = [r for r in results if r.failed]
    for r in results:
        print(f"{r.status} {r.name}: {r.detail}")
    if failed:
        print(f"{len(failed)} check(s) failed")
        return 4
    print("all checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tarifflab",
        description="welfare-optimal retail tariffs under stochastic prices and demand",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    fit = sub.add_parser("fit", help="calibrate a demand model from load/price CSVs")
    fit.add_argument("--load", required=True, help="hourly load CSV (day,hour,value)")
    fit.add_argument("--prices", required=True, help="hourly price CSV (day,hour,value)")
    fit.add_argument("--price-unit", choices=["kwh", "mwh"], default="kwh",
                     help="price unit in the CSV ($/kWh or $/MWh)")
    fit.add_argument("--flat-rate", type=float, default=0.172,
                     help="baseline flat rate pi_CE, $/kWh")
    fit.add_argument("--elasticity", type=float, default=-0.3,
                     help="target aggregate own-price elasticity at the flat rate")
    fit.add_argument("--alpha", type=float, default=0.2,
                     help="geometric decay of the substitution kernel, in [0,1)")
    fit.add_argument("--customers", type=int, default=2_200_000)
    fit.add_argument("--connection-charge", type=float, default=0.52,
                     help="baseline connection charge A_CE, $/customer/cycle")
    fit.add_argument("--out", required=True, help="model file to write")
    fit.set_defaults(func=cmd_fit)

    solve = sub.add_parser("solve", help="solve one tariff family at a revenue target")
    solve.add_argument("--model", required=True)
    solve.add_argument("--family", required=True, choices=sorted(FAMILY_ALIASES))
    solve.add_argument("--target-rs", required=True,
                       help="revenue target F in $/cycle, or 'baseline'")
    solve.add_argument("--flat-rate", type=float, default=None,
                       help="override the baseline flat rate from the model file")
    solve.add_argument("--connection-charge", type=float, default=None,
                       help="override the baseline connection charge")
    solve.add_argument("--out", default=None, help="optional machine-precision CSV")
    solve.set_defaults(func=cmd_solve)

    pareto = sub.add_parser("pareto", help="sweep revenue targets into Pareto fronts")
    pareto.add_argument("--model", required=True)
    pareto.add_argument("--families", default="all",
                        help="comma-separated families, or 'all'")
    pareto.add_argument("--f-min", type=float, default=None)
    pareto.add_argument("--f-max", type=float, default=None)
    pareto.add_argument("--steps", type=int, default=41)
    pareto.add_argument("--flat-rate", type=float, default=None)
    pareto.add_argument("--connection-charge", type=float, default=None)
    pareto.add_argument("--out", default=None, help="CSV output path (default stdout)")
    pareto.add_argument("--svg", default=None, help="optional SVG plot path")
    pareto.set_defaults(func=cmd_pareto)

    check = sub.add_parser("check", help="run model diagnostics")
    check.add_argument("--model", required=True)
    check.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except InfeasibleTarget as exc:
        lo, hi = exc.feasible_range
        print(
            f"infeasible revenue target {exc.target!r}: feasible range is "
            f"[{lo!r}, {hi!r}]",
            file=sys.stderr,
        )
        return 3
    except InvalidRegime as exc:
        print(
            f"revenue target {exc.target!r} is below the large-F regime floor "
            f"{exc.regime_floor!r}",
            file=sys.stderr,
        )
        return 3
    except (TariffLabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
