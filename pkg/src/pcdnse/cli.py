"""Command-line interface.

Four subcommands: ``params`` (detuning sweep of the effective constants),
``simulate`` (one configured run from a JSON file), ``fit`` (sech-pulse fit
of a stored snapshot), and ``experiment`` (canned multi-run datasets).

Output directory precedence: ``--out`` flag, then the ``PCDNSE_OUTPUT_DIR``
environment variable, then the config file's ``output.directory``, then
``./out/<name>``.  Exit codes: 0 on success, 2 on configuration errors,
3 on numerical failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import io
from .analysis import NoPeakError, fit_soliton
from .collective import WidthCollapseError
from .experiments import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    run_experiment,
    run_params_sweep,
    run_simulation,
)
from .integrate import IntegrationError

__all__ = ["main", "OUTPUT_DIR_ENV"]

OUTPUT_DIR_ENV = "PCDNSE_OUTPUT_DIR"

_NUMERICAL_ERRORS = (IntegrationError, WidthCollapseError, NoPeakError,
                     FloatingPointError, OverflowError)


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _resolve_out(flag_value: str | None, config_value: str | None,
                 default: str) -> Path:
    if flag_value:
        return Path(flag_value)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env)
    if config_value:
        return Path(config_value)
    return Path(default)


def _print_checks(report: dict) -> None:
    for name, ok in report.get("checks", {}).items():
        print(f"  {name}: {'PASS' if ok else 'FAIL'}")
    for failure in report.get("failures", []):
        print(f"  sub-run failed: {failure}")


def _cmd_params(args: argparse.Namespace) -> int:
    cfg = {}
    if args.config:
        raw = _load_config(args.config)
        cfg = raw.get("params_sweep", {})
        if not isinstance(cfg, dict):
            raise ConfigError("config[params_sweep]: expected an object")
    out_dir = _resolve_out(args.out, cfg.get("directory"), "out/params")
    kwargs = {}
    for key in ("chi", "eta", "kappa", "hopping", "delta_min", "delta_max",
                "num"):
        flag = getattr(args, key)
        if flag is not None:
            kwargs[key] = flag
        elif key in cfg:
            kwargs[key] = cfg[key]
    report = run_params_sweep(out_dir, **kwargs)
    print(f"parameter sweep written to {out_dir}")
    _print_checks(report)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    solver = config.setdefault("run", {}).setdefault("solver", {})
    if args.preset:
        solver["preset"] = args.preset
    if args.rtol is not None:
        solver["rtol"] = args.rtol
    if args.atol is not None:
        solver["atol"] = args.atol
    config_out = config.get("output", {}).get("directory") \
        if isinstance(config.get("output"), dict) else None
    out_dir = _resolve_out(args.out, config_out, "out/run")
    manifest = run_simulation(config, out_dir)
    print(f"run complete: {out_dir}")
    diag = manifest.get("diagnostics", {})
    for key in ("particle_drift", "particle_conserved", "energy_drift",
                "energy_conserved"):
        if key in diag:
            print(f"  {key}: {diag[key]}")
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    path = Path(args.input)
    if not path.exists():
        raise ConfigError(f"no such snapshot file: {path}")
    field = (io.read_field_json(path) if path.suffix == ".json"
             else io.read_field_csv(path))
    result = fit_soliton(field, residual_threshold=args.residual_threshold)
    payload = {
        "psi": result.coords.psi, "x0": result.coords.x0,
        "v": result.coords.v, "w": result.coords.w, "d": result.coords.d,
        "phi": result.coords.phi, "residual": result.residual,
        "converged": result.converged,
    }
    if args.out:
        io.write_json(args.out, payload)
        print(f"fit written to {args.out}")
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    out_dir = _resolve_out(args.out, None, f"out/{args.figure}")
    report = run_experiment(ExperimentConfig(
        figure=args.figure, out_dir=out_dir, full=args.full,
        threads=args.threads))
    print(f"experiment {args.figure} written to {out_dir}")
    _print_checks(report)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcdnse",
        description="Particle-conserving dissipative lattice and field "
                    "simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_params = sub.add_parser(
        "params", help="sweep detuning and tabulate effective g shift and "
                       "dissipation rate")
    p_params.add_argument("--config", help="JSON file with a params_sweep "
                                           "section")
    p_params.add_argument("--out", help="output directory")
    p_params.add_argument("--chi", type=float, default=None)
    p_params.add_argument("--eta", type=float, default=None)
    p_params.add_argument("--kappa", type=float, default=None)
    p_params.add_argument("--hopping", type=float, default=None)
    p_params.add_argument("--delta-min", dest="delta_min", type=float,
                          default=None)
    p_params.add_argument("--delta-max", dest="delta_max", type=float,
                          default=None)
    p_params.add_argument("--num", type=int, default=None)
    p_params.set_defaults(func=_cmd_params)

    p_sim = sub.add_parser("simulate", help="run one configured simulation")
    p_sim.add_argument("--config", required=True, help="JSON run config")
    p_sim.add_argument("--out", help="output directory")
    p_sim.add_argument("--preset", help="solver preset override")
    p_sim.add_argument("--rtol", type=float, default=None)
    p_sim.add_argument("--atol", type=float, default=None)
    p_sim.set_defaults(func=_cmd_simulate)

    p_fit = sub.add_parser("fit", help="fit a sech pulse to a stored "
                                       "snapshot")
    p_fit.add_argument("--input", required=True, help="snapshot CSV or JSON")
    p_fit.add_argument("--out", help="write the fit as JSON here instead of "
                                     "stdout")
    p_fit.add_argument("--residual-threshold", dest="residual_threshold",
                       type=float, default=1e-3)
    p_fit.set_defaults(func=_cmd_fit)

    p_exp = sub.add_parser("experiment", help="run a canned experiment")
    p_exp.add_argument("figure", choices=sorted(EXPERIMENTS))
    p_exp.add_argument("--out", help="output directory")
    p_exp.add_argument("--threads", type=int, default=1,
                       help="worker threads for independent sub-runs")
    p_exp.add_argument("--full", action="store_true",
                       help="full-scale horizons instead of desk-scale "
                            "presets")
    p_exp.set_defaults(func=_cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
