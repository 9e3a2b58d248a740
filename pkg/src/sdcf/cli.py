"""Command line: ``sdcf value``, ``sdcf irr``, ``sdcf sweep`` and ``sdcf schema``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure. All
results are computed before any file is written, so a failed run leaves no
partial output behind.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from . import binomial, lsm
from .config import ScenarioConfig, SweepConfig, json_schema
from .discounting import Compounding, Horizon, RatePair, solve_irr
from .errors import ConsistencyError, DomainError, NumericError
from .output import boundary_csv, exercise_times_csv, json_text, lattice_csv, phi_csv, write_all
from .risk import hedged_scenario
from .studies import STUDIES, render_report, run_study


class ConfigError(Exception):
    pass


def _load_json(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def _describe(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{where}: {err['msg']}")
    return "\n".join(lines)


def _scenario(args) -> ScenarioConfig:
    data = _load_json(args.config)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.paths is not None:
        data["paths"] = args.paths
    if args.workers is not None:
        data["workers"] = args.workers
    if args.mode is not None:
        data["mode"] = args.mode
    if args.steps is not None:
        data.setdefault("horizon", {})
        if isinstance(data["horizon"], dict):
            data["horizon"]["steps"] = args.steps
    if args.out_dir is not None:
        data.setdefault("output", {})
        if isinstance(data["output"], dict):
            data["output"]["dir"] = args.out_dir
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from None


def _market_rate(cfg: ScenarioConfig, spec, horizon: Horizon) -> float:
    rates = cfg.rates
    if rates.r_q is not None:
        return rates.r_q
    return solve_irr(spec, rates.q0, cfg.resolved_mode, horizon)


def _lsm_inputs(cfg: ScenarioConfig):
    horizon = cfg.horizon.build()
    if cfg.premia is not None:
        spec, rates = hedged_scenario(cfg.factor_structure(), cfg.risk_premia(), cfg.cashflow.x10, cfg.cashflow.x20, cfg.premia.drift)
        return spec, rates, horizon
    spec = cfg.cashflow.build()
    rates = RatePair(cfg.rates.r_p, _market_rate(cfg, spec, horizon), Compounding.CONTINUOUS)
    return spec, rates, horizon


def compute_value(cfg: ScenarioConfig) -> tuple[dict[str, str], list[str]]:
    """Output files (name to text) and summary lines for one valuation."""
    files: dict[str, str] = {}
    report: dict[str, Any] = {"engine": cfg.engine, "mode": cfg.resolved_mode.value}
    cf = cfg.cashflow
    T = cfg.horizon.T

    if cfg.engine == "binomial-sdcf":
        res = binomial.value_sdcf(cf.x0, cf.mu, cf.sigma, cfg.rates.r_p, int(T), q0=cfg.rates.q0, r_q=cfg.rates.r_q)
    elif cfg.engine == "binomial-mad":
        res = binomial.value_mad(cf.x0, cf.mu, cf.sigma, cfg.rates.r_p, int(T), cfg.rates.q0, cfg.paths, cfg.seed, cfg.resolved_mode, cfg.workers, cfg.p0)
        report.update(paths=cfg.paths, seed=cfg.seed, s=res.calibration.s, delta=res.calibration.delta)
    if cfg.engine.startswith("binomial"):
        report.update(V0=res.V0, v0=res.v0, NPV0=res.NPV0, P0=res.P0, r_p=res.r_p, r_q=res.r_q)
        if cfg.output.lattices:
            for name, lattice in res.lattices.items():
                files[f"lattice_{name}.csv"] = lattice_csv(lattice)
    else:
        spec, rates, horizon = _lsm_inputs(cfg)
        paths = lsm.simulate_paths(spec, horizon, cfg.paths, cfg.seed, cfg.workers)
        res = lsm.lsm_value(lsm.npv_paths(paths, rates, spec.mu1, spec.mu2), paths.times, cfg.filter)
        report.update(
            V0=res.V0,
            v0=res.v0,
            NPV0=res.NPV0,
            P0=res.P0,
            se=res.se,
            r_p=rates.r_p,
            r_q=rates.r_q,
            paths=cfg.paths,
            seed=cfg.seed,
            steps=horizon.steps,
            filter=cfg.filter,
            phi=res.phi,
            paths_used=res.paths_used,
            degenerate_steps=[t for t, d in enumerate(res.regression.degenerate) if d],
        )
        files["boundary.csv"] = boundary_csv(res.boundary)
        files["phi.csv"] = phi_csv(res.times, res.phi)
        if cfg.output.exercise_times:
            files["exercise_times.csv"] = exercise_times_csv(res.times, res.exercise_step)
    files["value.json"] = json_text(report)

    summary = [f"engine {cfg.engine}", f"V0   {report['V0']:.6f}", f"v0   {report['v0']:.6f}", f"NPV0 {report['NPV0']:.6f}"]
    if cfg.engine == "lsm":
        summary.append(f"se   {report['se']:.6f}")
        summary.append("t      L            U            phi")
        b = res.boundary
        for t in range(horizon.steps + 1):
            lo = f"{b.lower[t]:<12.6g}" if t < b.lower.size else f"{'':<12}"
            hi = f"{b.upper[t]:<12.6g}" if t < b.upper.size else f"{'':<12}"
            summary.append(f"{res.times[t]:<6g} {lo} {hi} {res.phi[t]:.4f}")
    return files, summary


def compute_irr(cfg: ScenarioConfig) -> tuple[dict[str, str], list[str]]:
    if cfg.rates is None or cfg.rates.q0 is None:
        raise ConfigError("rates.q0: irr needs a market price q0")
    spec = cfg.cashflow.build()
    horizon = cfg.horizon.build()
    mode = cfg.resolved_mode
    rate = solve_irr(spec, cfg.rates.q0, mode, horizon)
    files = {"irr.json": json_text({"r_q": rate, "q0": cfg.rates.q0, "mode": mode.value, "T": horizon.T})}
    return files, [f"IRR {rate:.10f} ({100 * rate:.4f}%)"]


def _sweep_config(args) -> tuple[SweepConfig, str]:
    data = _load_json(args.config)
    for key, flag in (("seed", args.seed), ("n_paths", args.paths), ("steps", args.steps), ("workers", args.workers), ("out_dir", args.out_dir)):
        if flag is not None:
            data[key] = flag
    try:
        cfg = SweepConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from None
    return cfg, cfg.out_dir


def cmd_value(args):
    cfg = _scenario(args)
    files, summary = compute_value(cfg)
    return files, summary, cfg.output.dir


def cmd_irr(args):
    cfg = _scenario(args)
    files, summary = compute_irr(cfg)
    return files, summary, cfg.output.dir


def cmd_sweep(args):
    cfg, out_dir = _sweep_config(args)
    try:
        sweep = cfg.build(args.study)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    report = run_study(sweep)
    summary = [f"study {report.study}: {len(report.cells)} cells"]
    for v in report.verdicts:
        summary.append(f"  {'PASS' if v.passed else 'FAIL'} {v.name} margin={v.margin:.4g} se={v.se:.3g}")
    return render_report(report), summary, out_dir


def cmd_schema(args):
    return {"schema.json": json_text(json_schema())}, ["wrote schema.json"], args.out_dir or "."


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdcf", description="Subjective discounted cash flow real-option valuation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("config", help="scenario JSON file")
        p.add_argument("--seed", type=int, help="RNG seed (default 0)")
        p.add_argument("--paths", type=int, help="Monte Carlo paths (default 10000)")
        p.add_argument("--steps", type=int, help="time steps (default: one per year)")
        p.add_argument("--workers", type=int, help="parallel workers; results do not depend on it (default 1)")
        p.add_argument("--out-dir", help="output directory (default: config output.dir, else ./out)")

    p = sub.add_parser("value", help="value the option described by a scenario")
    common(p)
    p.add_argument("--mode", choices=[m.value for m in Compounding], help="compounding convention")
    p.set_defaults(handler=cmd_value)

    p = sub.add_parser("irr", help="back out the market rate from a price q0")
    common(p)
    p.add_argument("--mode", choices=[m.value for m in Compounding], help="compounding convention")
    p.set_defaults(handler=cmd_irr)

    p = sub.add_parser("sweep", help="run a study grid and write its CSV and verdict JSON")
    p.add_argument("--study", required=True, choices=STUDIES)
    p.add_argument("config", nargs="?", help="optional sweep override JSON")
    common(p, config_required=False)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("schema", help="write the configuration JSON schema")
    p.add_argument("--out-dir", help="output directory (default .)")
    p.set_defaults(handler=cmd_schema)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        files, summary, out_dir = args.handler(args)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return 2
    except (NumericError, ConsistencyError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"numeric failure: degenerate inputs: {exc}", file=sys.stderr)
        return 3
    write_all(files, out_dir)
    for line in summary:
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
