"""Simulation driver and reproducible figure-style experiments.

:func:`run_simulation` executes one configured run (any of the five model
levels) and writes snapshots, diagnostics, a fully-defaulted config echo,
and a checksummed manifest into the output directory.  The ``run_figN``
functions orchestrate multi-run comparisons, each emitting plot-ready CSVs
plus a ``report.json`` whose ``checks`` section holds named pass/fail
booleans.  Sub-runs are independent, so experiments farm them out to a
thread pool.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import io
from .analysis import (
    NoPeakError,
    envelope_deviation,
    compare_profiles,
    fit_soliton,
    velocity_damping_estimate,
)
from .collective import (
    SolitonCoords,
    ansatz_energy,
    make_collective_ode,
    make_stable_ode,
    stable_soliton,
)
from .integrate import (
    OdeProblem,
    SOLVER_PRESETS,
    SolverConfig,
    TimeSeries,
    solve,
    solver_preset,
)
from .model_continuum import (
    ContainmentWarning,
    FieldState,
    field_energy,
    make_pcdnse_ode,
    make_soliton_field,
    particle_number,
)
from .model_effective import chain_energy, make_chain_ode
from .model_full import (
    make_full_ode,
    rotating_frame_to_effective,
    steady_state_cavities,
)
from .params import (
    OPEN,
    PERIODIC,
    WEAK_COUPLING_ADVISORY,
    ChainParams,
    EffectiveParams,
    ReservoirParams,
    effective_params,
    invert_for_chi_alpha,
    weak_coupling_ratios,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "normalize_config",
    "run_simulation",
    "run_params_sweep",
    "run_experiment",
    "EXPERIMENTS",
]

MODELS = ("pcdnse", "lattice", "langevin", "collective", "stable")

_DEFAULT_SOLVER_PRESET = {
    "pcdnse": "pcdnse",
    "lattice": "pcdnse",
    "langevin": "langevin",
    "collective": "collective",
    "stable": "collective",
}


class ConfigError(ValueError):
    """A configuration file is malformed or inconsistent."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Selection of a canned experiment and its execution scale."""

    figure: str
    out_dir: Path
    full: bool = False
    threads: int = 1


# ---------------------------------------------------------------------------
# configuration handling


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"config[{path}]: {message}")


def _get_number(cfg: Mapping, key: str, path: str, default=None,
                required: bool = False):
    if key not in cfg:
        if required:
            raise ConfigError(f"config[{path}.{key}]: missing required key")
        return default
    value = cfg[key]
    _expect(isinstance(value, (int, float)) and not isinstance(value, bool),
            f"{path}.{key}", f"expected a number, got {value!r}")
    return float(value)


def _get_int(cfg: Mapping, key: str, path: str, default=None,
             required: bool = False):
    if key not in cfg:
        if required:
            raise ConfigError(f"config[{path}.{key}]: missing required key")
        return default
    value = cfg[key]
    _expect(isinstance(value, int) and not isinstance(value, bool),
            f"{path}.{key}", f"expected an integer, got {value!r}")
    return int(value)


def _check_keys(cfg: Mapping, allowed: set[str], path: str) -> None:
    unknown = set(cfg) - allowed
    _expect(not unknown, path, f"unknown keys {sorted(unknown)}")


def normalize_config(config: Mapping) -> dict:
    """Validate a run configuration and fill in every default.

    Returns the fully-explicit config echoed into each run directory.
    Raises :class:`ConfigError` with the offending key path on any problem.
    """
    _expect(isinstance(config, Mapping), "", "top level must be an object")
    _check_keys(config, {"model", "microscopic", "effective", "grid", "sites",
                         "boundary", "initial", "run", "output"}, "")

    model = config.get("model")
    _expect(model in MODELS, "model", f"must be one of {MODELS}, got {model!r}")

    has_micro = "microscopic" in config
    has_eff = "effective" in config
    _expect(has_micro != has_eff, "microscopic|effective",
            "exactly one parameterization (microscopic or effective) required")
    if model == "langevin":
        _expect(has_micro, "microscopic",
                "the langevin model needs microscopic parameters")

    out: dict = {"model": model}

    if has_micro:
        m = config["microscopic"]
        _check_keys(m, {"chi", "eta", "kappa", "delta", "hopping",
                        "anharmonicity"}, "microscopic")
        out["microscopic"] = {
            "chi": _get_number(m, "chi", "microscopic", required=True),
            "eta": _get_number(m, "eta", "microscopic", required=True),
            "kappa": _get_number(m, "kappa", "microscopic", required=True),
            "delta": _get_number(m, "delta", "microscopic", required=True),
            "hopping": _get_number(m, "hopping", "microscopic", default=1.0),
            "anharmonicity": _get_number(m, "anharmonicity", "microscopic",
                                         default=0.0),
        }
    else:
        e = config["effective"]
        _check_keys(e, {"g", "gamma", "delta_g", "hopping"}, "effective")
        out["effective"] = {
            "g": _get_number(e, "g", "effective", required=True),
            "gamma": _get_number(e, "gamma", "effective", default=0.0),
            "delta_g": _get_number(e, "delta_g", "effective", default=0.0),
            "hopping": _get_number(e, "hopping", "effective", default=1.0),
        }

    if model == "pcdnse":
        _expect("grid" in config, "grid", "required for the pcdnse model")
        grid = config["grid"]
        _check_keys(grid, {"domain_length", "n_points", "boundary"}, "grid")
        boundary = grid.get("boundary", PERIODIC)
        _expect(boundary in (PERIODIC, OPEN), "grid.boundary",
                f"must be '{PERIODIC}' or '{OPEN}'")
        out["grid"] = {
            "domain_length": _get_number(grid, "domain_length", "grid",
                                         required=True),
            "n_points": _get_int(grid, "n_points", "grid", required=True),
            "boundary": boundary,
        }
        _expect(out["grid"]["domain_length"] > 0, "grid.domain_length",
                "must be positive")
        _expect(out["grid"]["n_points"] >= 16, "grid.n_points",
                "must be at least 16")
    elif model in ("lattice", "langevin"):
        sites = _get_int(config, "sites", "", required=True)
        _expect(sites >= 2, "sites", "must be at least 2")
        boundary = config.get("boundary", PERIODIC)
        _expect(boundary in (PERIODIC, OPEN), "boundary",
                f"must be '{PERIODIC}' or '{OPEN}'")
        out["sites"] = sites
        out["boundary"] = boundary

    _expect("initial" in config, "initial", "missing required section")
    init = config["initial"]
    kinds = [k for k in ("soliton", "stable", "field_file") if k in init]
    _expect(len(kinds) == 1, "initial",
            "exactly one of 'soliton', 'stable', 'field_file' required")
    kind = kinds[0]
    _check_keys(init, {kind}, "initial")
    if kind == "soliton":
        s = init["soliton"]
        _check_keys(s, {"psi", "x0", "v", "w", "d", "phi"}, "initial.soliton")
        w = s.get("w")
        out["initial"] = {"soliton": {
            "psi": _get_number(s, "psi", "initial.soliton", required=True),
            "x0": _get_number(s, "x0", "initial.soliton", required=True),
            "v": _get_number(s, "v", "initial.soliton", default=0.0),
            "w": None if w is None else _get_number(s, "w", "initial.soliton"),
            "d": _get_number(s, "d", "initial.soliton", default=0.0),
            "phi": _get_number(s, "phi", "initial.soliton", default=0.0),
        }}
    elif kind == "stable":
        s = init["stable"]
        _check_keys(s, {"n_particles", "x0", "v", "phi"}, "initial.stable")
        out["initial"] = {"stable": {
            "n_particles": _get_number(s, "n_particles", "initial.stable",
                                       required=True),
            "x0": _get_number(s, "x0", "initial.stable", default=0.0),
            "v": _get_number(s, "v", "initial.stable", default=0.0),
            "phi": _get_number(s, "phi", "initial.stable", default=0.0),
        }}
    else:
        _expect(model in ("pcdnse", "lattice", "langevin"), "initial.field_file",
                "field files apply to field/lattice models only")
        _expect(isinstance(init["field_file"], str), "initial.field_file",
                "expected a path string")
        out["initial"] = {"field_file": init["field_file"]}

    _expect("run" in config, "run", "missing required section")
    run = config["run"]
    _check_keys(run, {"t_final", "snapshots", "solver"}, "run")
    t_final = _get_number(run, "t_final", "run", required=True)
    _expect(t_final > 0, "run.t_final", "must be positive")
    snapshots = _get_int(run, "snapshots", "run", default=11)
    _expect(snapshots >= 2, "run.snapshots", "must be at least 2")

    solver_cfg = run.get("solver", {})
    _check_keys(solver_cfg, {"preset", "method", "rtol", "atol", "max_steps"},
                "run.solver")
    preset = solver_cfg.get("preset", _DEFAULT_SOLVER_PRESET[model])
    _expect(preset in SOLVER_PRESETS, "run.solver.preset",
            f"unknown preset {preset!r}; choose from {sorted(SOLVER_PRESETS)}")
    base = SOLVER_PRESETS[preset]
    method = solver_cfg.get("method", base.method)
    out["run"] = {
        "t_final": t_final,
        "snapshots": snapshots,
        "solver": {
            "preset": preset,
            "method": method,
            "rtol": _get_number(solver_cfg, "rtol", "run.solver",
                                default=base.rtol),
            "atol": _get_number(solver_cfg, "atol", "run.solver",
                                default=base.atol),
            "max_steps": _get_int(solver_cfg, "max_steps", "run.solver",
                                  default=base.max_steps),
        },
    }

    output = config.get("output", {})
    _check_keys(output, {"directory", "formats", "field_files"}, "output")
    formats = output.get("formats", ["csv"])
    _expect(isinstance(formats, list) and formats
            and all(f in ("csv", "json") for f in formats),
            "output.formats", "must be a non-empty list drawn from ['csv', 'json']")
    out["output"] = {
        "directory": output.get("directory"),
        "formats": list(formats),
        "field_files": _get_int(output, "field_files", "output", default=5),
    }
    _expect(out["output"]["field_files"] >= 2, "output.field_files",
            "must be at least 2 (first and last snapshot)")

    try:
        SolverConfig(method=method, rtol=out["run"]["solver"]["rtol"],
                     atol=out["run"]["solver"]["atol"],
                     max_steps=out["run"]["solver"]["max_steps"])
    except ValueError as exc:
        raise ConfigError(f"config[run.solver]: {exc}") from exc

    return out


def _solver_from_config(run_cfg: Mapping,
                        snapshot_times: np.ndarray) -> SolverConfig:
    s = run_cfg["solver"]
    return SolverConfig(method=s["method"], rtol=s["rtol"], atol=s["atol"],
                        max_steps=s["max_steps"], snapshot_times=snapshot_times)


def _params_from_config(cfg: Mapping, sites: int | None
                        ) -> tuple[EffectiveParams, ReservoirParams | None,
                                   ChainParams | None]:
    if "microscopic" in cfg:
        m = cfg["microscopic"]
        try:
            res = ReservoirParams(chi=m["chi"], eta=m["eta"], kappa=m["kappa"],
                                  delta=m["delta"])
            chain = ChainParams(hopping=m["hopping"],
                                anharmonicity=m["anharmonicity"],
                                sites=sites if sites else 2,
                                boundary=cfg.get("boundary", PERIODIC))
            return effective_params(res, chain), res, chain
        except ValueError as exc:
            raise ConfigError(f"config[microscopic]: {exc}") from exc
    e = cfg["effective"]
    try:
        eff = EffectiveParams(g=e["g"], delta_g=e["delta_g"], gamma=e["gamma"],
                              hopping=e["hopping"])
    except ValueError as exc:
        raise ConfigError(f"config[effective]: {exc}") from exc
    return eff, None, None


def _coords_from_config(cfg: Mapping, eff: EffectiveParams) -> SolitonCoords:
    init = cfg["initial"]
    if "stable" in init:
        s = init["stable"]
        try:
            ss = stable_soliton(s["n_particles"], eff)
        except ValueError as exc:
            raise ConfigError(f"config[initial.stable]: {exc}") from exc
        return ss.coords(x0=s["x0"], v=s["v"], phi=s["phi"])
    s = init["soliton"]
    w = s["w"]
    if w is None:
        # Stable width for this amplitude: psi^2 w^2 = -2J/g.
        if eff.g >= 0 or s["psi"] <= 0:
            raise ConfigError(
                "config[initial.soliton.w]: omitted width needs g < 0 and psi > 0")
        w = math.sqrt(-2.0 * eff.hopping / eff.g) / s["psi"]
    try:
        return SolitonCoords(psi=s["psi"], x0=s["x0"], v=s["v"], w=w,
                             d=s["d"], phi=s["phi"])
    except ValueError as exc:
        raise ConfigError(f"config[initial.soliton]: {exc}") from exc


# ---------------------------------------------------------------------------
# single runs


def _snapshot_indices(n_snapshots: int, n_files: int) -> list[int]:
    return sorted(set(np.linspace(0, n_snapshots - 1, n_files).astype(int)))


def _write_field_outputs(out_dir: Path, series_fields: list[FieldState],
                         times: np.ndarray, cfg: Mapping,
                         files: list[Path]) -> None:
    indices = _snapshot_indices(len(times), min(cfg["output"]["field_files"],
                                                len(times)))
    snap_dir = out_dir / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    for i in indices:
        meta = {"t": io.format_float(times[i])}
        if "csv" in cfg["output"]["formats"]:
            files.append(io.write_field_csv(
                snap_dir / f"snap_{i:04d}.csv", series_fields[i], meta))
        if "json" in cfg["output"]["formats"]:
            files.append(io.write_field_json(
                snap_dir / f"snap_{i:04d}.json", series_fields[i], meta))


def run_simulation(config: Mapping, out_dir: str | Path) -> dict:
    """Execute one configured run; write outputs; return the manifest dict."""
    cfg = normalize_config(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files: list[Path] = [io.write_json(out_dir / "config_echo.json", cfg)]

    model = cfg["model"]
    sites = cfg.get("sites")
    eff, res, chain = _params_from_config(cfg, sites)
    times = np.linspace(0.0, cfg["run"]["t_final"], cfg["run"]["snapshots"])
    solver = _solver_from_config(cfg["run"], times)

    manifest_extra: dict = {"model": model}
    if res is not None:
        manifest_extra["effective_derived"] = {
            "g": eff.g, "delta_g": eff.delta_g, "gamma": eff.gamma,
            "hopping": eff.hopping,
        }

    caught: list[str] = []
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always", ContainmentWarning)
        result = _dispatch_run(cfg, model, eff, res, chain, times, solver,
                               out_dir, files)
        caught = [str(w.message) for w in wlist
                  if issubclass(w.category, ContainmentWarning)]
    if caught:
        manifest_extra["warnings"] = caught

    manifest_extra.update(result)
    manifest = io.write_manifest(out_dir, files, manifest_extra)
    with manifest.open() as fh:
        return json.load(fh)


def _diagnostics_and_flags(times, n_series, e_series, peak_series, gamma,
                           out_dir, files) -> dict:
    files.append(io.write_table_csv(out_dir / "diagnostics.csv", {
        "t": times,
        "particle_number": np.asarray(n_series),
        "energy": np.asarray(e_series),
        "peak_amplitude": np.asarray(peak_series),
    }))
    n0 = n_series[0]
    e0 = e_series[0]
    particle_drift = float(np.max(np.abs(np.asarray(n_series) / n0 - 1.0))) \
        if n0 != 0 else 0.0
    energy_drift = float(np.max(np.abs(np.asarray(e_series) - e0))) / max(abs(e0), 1e-300)
    diag = {
        "particle_drift": particle_drift,
        "particle_conserved": bool(particle_drift < 1e-6),
        "energy_drift": energy_drift,
    }
    if gamma == 0.0:
        diag["energy_conserved"] = bool(energy_drift < 1e-6)
    return diag


def _initial_field(cfg, eff, domain_length, n_points, boundary) -> FieldState:
    init = cfg["initial"]
    if "field_file" in init:
        path = Path(init["field_file"])
        if not path.exists():
            raise ConfigError(
                f"config[initial.field_file]: no such file {path}")
        field = (io.read_field_json(path) if path.suffix == ".json"
                 else io.read_field_csv(path))
        if field.n_points != n_points:
            raise ConfigError(
                "config[initial.field_file]: grid size "
                f"{field.n_points} does not match configured {n_points}")
        return FieldState(field.psi, domain_length, boundary)
    coords = _coords_from_config(cfg, eff)
    return make_soliton_field(coords, domain_length, n_points, boundary)


def _dispatch_run(cfg, model, eff, res, chain, times, solver, out_dir,
                  files) -> dict:
    stats_dict: Callable[[TimeSeries], dict] = lambda series: {
        "accepted_steps": series.stats.n_accepted,
        "rejected_steps": series.stats.n_rejected,
        "rhs_evaluations": series.stats.n_rhs,
    }

    if model == "pcdnse":
        grid = cfg["grid"]
        field0 = _initial_field(cfg, eff, grid["domain_length"],
                                grid["n_points"], grid["boundary"])
        problem = OdeProblem(make_pcdnse_ode(field0, eff), 0.0, times[-1],
                             field0.psi)
        series = solve(problem, solver)
        fields = [field0.with_psi(s) for s in series.states]
        n_series = [particle_number(f) for f in fields]
        e_series = [field_energy(f, eff) for f in fields]
        peak = [float(np.max(np.abs(f.psi))) for f in fields]
        _write_field_outputs(out_dir, fields, series.times, cfg, files)
        diag = _diagnostics_and_flags(series.times, n_series, e_series, peak,
                                      eff.gamma, out_dir, files)
        return {"integrator": stats_dict(series), "diagnostics": diag}

    if model in ("lattice", "langevin"):
        sites = cfg["sites"]
        boundary = cfg["boundary"]
        domain = float(sites) if boundary == PERIODIC else float(sites - 1)
        field0 = _initial_field(cfg, eff, domain, sites, boundary)
        if model == "lattice":
            problem = OdeProblem(make_chain_ode(eff, boundary), 0.0,
                                 times[-1], field0.psi)
            series = solve(problem, solver)
            site_series = series
        else:
            cavities = steady_state_cavities(res, sites)
            y0 = np.concatenate([cavities, field0.psi])
            problem = OdeProblem(make_full_ode(res, chain), 0.0, times[-1], y0)
            series = solve(problem, solver)
            site_series = rotating_frame_to_effective(series, res, chain)
        fields = [field0.with_psi(s) for s in site_series.states]
        n_series = [float(np.sum(np.abs(f.psi) ** 2)) for f in fields]
        e_series = [chain_energy(f.psi, eff, boundary) for f in fields]
        peak = [float(np.max(np.abs(f.psi))) for f in fields]
        _write_field_outputs(out_dir, fields, site_series.times, cfg, files)
        diag = _diagnostics_and_flags(site_series.times, n_series, e_series,
                                      peak, eff.gamma, out_dir, files)
        if model == "langevin":
            diag.pop("energy_conserved", None)  # effective-frame energy only
            b_max = max(float(np.max(np.abs(f.psi))) for f in fields)
            r1, r2 = weak_coupling_ratios(res, chain, b_max)
            diag["weak_coupling"] = {
                "r1": r1, "r2": r2,
                "advisory_threshold": WEAK_COUPLING_ADVISORY,
                "within_advisory": bool(max(r1, r2) < WEAK_COUPLING_ADVISORY),
            }
        return {"integrator": stats_dict(series), "diagnostics": diag}

    if model == "collective":
        coords0 = _coords_from_config(cfg, eff)
        problem = OdeProblem(make_collective_ode(eff), 0.0, times[-1],
                             coords0.to_array())
        series = solve(problem, solver)
        psi, x0, v, w, d, phi = series.states.real.T
        files.append(io.write_table_csv(out_dir / "trajectory.csv", {
            "t": series.times, "psi": psi, "x0": x0, "v": v, "w": w,
            "d": d, "phi": phi,
        }))
        n_series = 2.0 * psi**2 * w
        e_series = [ansatz_energy(SolitonCoords(*row), eff)
                    for row in series.states.real]
        diag = _diagnostics_and_flags(series.times, n_series, e_series, psi,
                                      eff.gamma, out_dir, files)
        diag.pop("energy_conserved", None)  # energy falls even at gamma = 0 only if moving
        return {"integrator": stats_dict(series), "diagnostics": diag}

    # stable: reduced three-coordinate flow on the stable manifold
    init = cfg["initial"]
    if "stable" not in init:
        raise ConfigError("config[initial]: the stable model needs "
                          "an 'initial.stable' section")
    s = init["stable"]
    try:
        ss = stable_soliton(s["n_particles"], eff)
    except ValueError as exc:
        raise ConfigError(f"config[initial.stable]: {exc}") from exc
    y0 = np.array([s["x0"], s["v"], s["phi"]])
    problem = OdeProblem(make_stable_ode(ss), 0.0, times[-1], y0)
    series = solve(problem, solver)
    x0_t, v_t, phi_t = series.states.real.T
    files.append(io.write_table_csv(out_dir / "trajectory.csv", {
        "t": series.times, "x0": x0_t, "v": v_t, "phi": phi_t,
        "energy": np.array([ss.energy(v) for v in v_t]),
    }))
    return {
        "integrator": stats_dict(series),
        "stable_soliton": {
            "particle_number": ss.particle_number, "width": ss.width,
            "amplitude": ss.amplitude, "damping_rate": ss.damping_rate,
        },
    }


# ---------------------------------------------------------------------------
# parameter sweep (cavity response versus detuning)


def run_params_sweep(out_dir: str | Path, chi: float = 0.05, eta: float = 1.0,
                     kappa: float = 1.0, hopping: float = 1.0,
                     delta_min: float = -3.0, delta_max: float = 3.0,
                     num: int = 601) -> dict:
    """Sweep the detuning and tabulate (delta, delta_g, gamma).

    Also verifies the analytic structure of the sweep: both effective
    constants vanish at zero detuning and are odd in it, gamma is positive
    on the red-detuned side, and |gamma| peaks near |delta| = kappa/sqrt(20)
    (located via the sign change of the finite-difference derivative).
    """
    if num < 5:
        raise ConfigError("params sweep needs at least 5 points")
    if delta_min >= delta_max:
        raise ConfigError("delta_min must be below delta_max")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    deltas = np.linspace(delta_min, delta_max, num)
    chain = ChainParams(hopping=hopping, anharmonicity=0.0, sites=2)
    dg = np.empty(num)
    gam = np.empty(num)
    for i, delta in enumerate(deltas):
        eff = effective_params(
            ReservoirParams(chi=chi, eta=eta, kappa=kappa, delta=delta), chain)
        dg[i] = eff.delta_g
        gam[i] = eff.gamma

    files = [io.write_table_csv(out_dir / "sweep.csv", {
        "delta": deltas, "delta_g": dg, "gamma": gam,
    })]

    checks: dict[str, bool] = {}
    on_axis = np.isclose(deltas, 0.0, atol=1e-12)
    checks["vanishes_at_zero_detuning"] = bool(
        not on_axis.any() or (np.all(dg[on_axis] == 0.0)
                              and np.all(gam[on_axis] == 0.0)))
    red = deltas < 0
    checks["red_detuning_gives_positive_gamma"] = bool(np.all(gam[red] > 0))
    sym = np.allclose(gam, -gam[::-1], atol=1e-15) if num % 2 == 1 else True
    checks["gamma_odd_in_detuning"] = bool(sym)

    # |gamma| extremum on the red side: finite-difference derivative changes
    # sign once, near |delta| = kappa/sqrt(20) ~ 0.2236 kappa.
    red_idx = np.where(red)[0]
    dgam = np.diff(gam[red_idx])
    flips = np.where(np.sign(dgam[:-1]) * np.sign(dgam[1:]) < 0)[0]
    if len(flips) == 1:
        d_star = abs(deltas[red_idx[flips[0] + 1]])
        checks["gamma_extremum_near_expected_detuning"] = bool(
            0.15 * kappa < d_star < 0.3 * kappa)
    else:
        checks["gamma_extremum_near_expected_detuning"] = False

    report = {"checks": checks, "sweep_points": num,
              "parameters": {"chi": chi, "eta": eta, "kappa": kappa,
                             "hopping": hopping}}
    files.append(io.write_json(out_dir / "report.json", report))
    io.write_manifest(out_dir, files, {"experiment": "params_sweep"})
    return report


# ---------------------------------------------------------------------------
# figure-style experiments


def _reference_soliton() -> SolitonCoords:
    # Working point used across the comparison experiments: attractive
    # g = -0.1 J, unit amplitude, stable width sqrt(20), moderate velocity.
    return SolitonCoords(psi=1.0, x0=100.0, v=0.48, w=math.sqrt(20.0),
                         d=0.0, phi=0.0)


def _fig3_single_size(sites: int, delta: float, g: float, gamma: float,
                      jt_scale: bool = True) -> dict:
    """Langevin versus effective lattice at one chain size."""
    scale = sites / 400.0
    ref = _reference_soliton()
    coords = SolitonCoords(psi=ref.psi / scale, x0=sites / 4.0,
                           v=ref.v / scale, w=ref.w * scale, d=0.0, phi=0.0)
    t_final = 50.0 * scale**2 if jt_scale else 50.0

    chi, alpha = invert_for_chi_alpha(g, gamma, eta=1.0, kappa=1.0, delta=delta)
    res = ReservoirParams(chi=chi, eta=1.0, kappa=1.0, delta=delta)
    chain = ChainParams(hopping=1.0, anharmonicity=alpha, sites=sites)
    eff = effective_params(res, chain)

    field0 = make_soliton_field(coords, float(sites), sites, PERIODIC)
    b_max = float(np.max(np.abs(field0.psi)))
    r1, r2 = weak_coupling_ratios(res, chain, b_max)

    times = np.linspace(0.0, t_final, 3)
    cavities = steady_state_cavities(res, sites)
    full_series = solve(
        OdeProblem(make_full_ode(res, chain), 0.0, t_final,
                   np.concatenate([cavities, field0.psi])),
        solver_preset("langevin", snapshot_times=times))
    site_series = rotating_frame_to_effective(full_series, res, chain)

    lattice_series = solve(
        OdeProblem(make_chain_ode(eff, PERIODIC), 0.0, t_final, field0.psi),
        solver_preset("pcdnse", snapshot_times=times))

    occ_langevin = np.abs(site_series.states[-1]) ** 2
    occ_lattice = np.abs(lattice_series.states[-1]) ** 2
    x_sites = np.arange(sites, dtype=float)
    cmp_models = compare_profiles(x_sites, occ_langevin, x_sites, occ_lattice)

    return {
        "sites": sites,
        "delta": delta,
        "chi": chi,
        "alpha": alpha,
        "t_final": t_final,
        "scale": scale,
        "b_max": b_max,
        "r1": r1,
        "r2": r2,
        "weak_coupling_ok": bool(max(r1, r2) < WEAK_COUPLING_ADVISORY),
        "linf_rel_langevin_vs_lattice": cmp_models.linf_rel,
        "x_sites": x_sites,
        "occ_langevin": occ_langevin,
        "occ_lattice": occ_lattice,
    }


def _guarded(fn: Callable[..., dict], *args) -> dict:
    """Run one experiment sub-job, mapping failure to a recordable row."""
    try:
        return fn(*args)
    except Exception as exc:  # noqa: BLE001 - partial datasets are allowed
        return {"failed": True, "error": f"{type(exc).__name__}: {exc}"}


def run_fig3a(out_dir: str | Path, full: bool = False, threads: int = 1) -> dict:
    """Cross-model occupation profiles: microscopic vs lattice vs continuum.

    Chain sizes share one reference solution through the scaling family
    (soliton extent proportional to L, amplitude inversely proportional,
    horizon Jt = 50 (L/400)^2).  Each size is compared against its own
    effective-lattice run (reservoir-elimination quality) and, rescaled,
    against a single continuum reference at L = 400 (continuum-limit
    quality, which degrades for narrow solitons by construction).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sizes = (100, 200, 400, 800) if full else (100, 200, 400)

    ref = _reference_soliton()
    field_ref = make_soliton_field(ref, 400.0, 4000, PERIODIC)
    eff_ref = EffectiveParams(g=-0.1, gamma=0.05, hopping=1.0)
    ref_series = solve(
        OdeProblem(make_pcdnse_ode(field_ref, eff_ref), 0.0, 50.0,
                   field_ref.psi),
        solver_preset("pcdnse", snapshot_times=np.array([0.0, 25.0, 50.0])))
    occ_ref = np.abs(ref_series.states[-1]) ** 2

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(
            lambda sites: _guarded(_fig3_single_size, sites, -0.1, -0.1, 0.05),
            sizes))

    files = [io.write_table_csv(out_dir / "pcdnse_reference.csv", {
        "x": field_ref.x, "occupation": occ_ref,
    })]

    failures = [r["error"] for r in rows if r.get("failed")]
    table_rows = []
    for row in rows:
        if row.get("failed"):
            continue
        scale = row["scale"]
        x_rescaled = row["x_sites"] / scale
        cmp_lat = compare_profiles(x_rescaled, row["occ_lattice"] * scale**2,
                                   field_ref.x, occ_ref)
        cmp_lgv = compare_profiles(x_rescaled, row["occ_langevin"] * scale**2,
                                   field_ref.x, occ_ref)
        row["linf_rel_lattice_vs_continuum"] = cmp_lat.linf_rel
        row["linf_rel_langevin_vs_continuum"] = cmp_lgv.linf_rel
        files.append(io.write_table_csv(
            out_dir / f"profiles_L{row['sites']}.csv", {
                "site": row["x_sites"],
                "occ_langevin": row["occ_langevin"],
                "occ_lattice": row["occ_lattice"],
            }))
        table_rows.append({k: row[k] for k in (
            "sites", "t_final", "chi", "b_max", "r1", "r2",
            "weak_coupling_ok", "linf_rel_langevin_vs_lattice",
            "linf_rel_lattice_vs_continuum",
            "linf_rel_langevin_vs_continuum")})

    checks = {
        f"elimination_agrees_L{r['sites']}":
            bool(r["linf_rel_langevin_vs_lattice"] < 0.05)
        for r in table_rows if r["weak_coupling_ok"]
    }
    # Panel-(a) statement: the scaling family converges to the continuum
    # solution as the chain grows (the soliton widens in site units).  At
    # the two smallest sizes the profiles separate entirely within the
    # horizon and the sup norm saturates near the peak value, so only the
    # endpoints order reliably.
    errs = [r["linf_rel_lattice_vs_continuum"]
            for r in sorted(table_rows, key=lambda r: r["sites"])]
    checks["continuum_error_improves_with_length"] = bool(
        len(errs) >= 2 and errs[-1] < errs[0])
    checks["largest_size_tracks_continuum"] = bool(errs and errs[-1] < 0.5)
    report = {"experiment": "fig3a", "rows": table_rows, "checks": checks,
              "failures": failures}
    files.append(io.write_json(out_dir / "report.json", report))
    io.write_manifest(out_dir, files, {"experiment": "fig3a"})
    return report


def run_fig3b(out_dir: str | Path, full: bool = False,
              threads: int = 1) -> dict:
    """Reservoir-elimination breakdown at strong detuning.

    Same effective working point (g = -0.1 J, gamma = 0.05) realized at
    delta = -0.1 J and delta = -2 J.  The weakly-detuned case runs the
    L = 800 member of the scaling family (peak amplitude 0.5): both ratio
    diagnostics pass the 0.1 advisory and the microscopic chain tracks the
    effective lattice well inside the 5% band.  The strongly-detuned case
    runs at unit peak amplitude (L = 400), where the advisory is
    calibrated: r1 = chi b_max^2/|i delta + kappa/2| exceeds 0.1 and the
    occupations leave the band.  At strong detuning the advisory is
    necessary rather than sufficient; halving the amplitude drops r1 back
    under 0.1 while the dynamics still disagrees at the 17% level, so the
    breakdown demonstration must sit at the calibration amplitude.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = [pool.submit(_guarded, _fig3_single_size, sites, d,
                               -0.1, 0.05)
                   for sites, d in ((800, -0.1), (400, -2.0))]
        rows = [f.result() for f in futures]

    files = []
    failures = [r["error"] for r in rows if r.get("failed")]
    good = [r for r in rows if not r.get("failed")]
    for row in good:
        tag = (f"delta_{row['delta']:g}_L{row['sites']}"
               .replace("-", "m").replace(".", "p"))
        files.append(io.write_table_csv(out_dir / f"profiles_{tag}.csv", {
            "site": row["x_sites"],
            "occ_langevin": row["occ_langevin"],
            "occ_lattice": row["occ_lattice"],
        }))
        for k in ("x_sites", "occ_langevin", "occ_lattice"):
            row.pop(k)

    checks = {}
    for row in good:
        if row["delta"] == -0.1:
            checks["weak_detuning_agrees"] = bool(
                row["linf_rel_langevin_vs_lattice"] < 0.05)
            checks["weak_detuning_within_advisory"] = row["weak_coupling_ok"]
        else:
            checks["strong_detuning_disagrees"] = bool(
                row["linf_rel_langevin_vs_lattice"] > 0.05)
            checks["strong_detuning_flagged"] = bool(
                not row["weak_coupling_ok"])
    report = {"experiment": "fig3b", "rows": good, "checks": checks,
              "failures": failures}
    files.append(io.write_json(out_dir / "report.json", report))
    io.write_manifest(out_dir, files, {"experiment": "fig3b"})
    return report


def _fig4_single_gamma(gamma: float, tight: bool) -> dict:
    g = -0.1
    eff = EffectiveParams(g=g, gamma=gamma, hopping=1.0)
    # Start at an eighth of the box; tails at the seam are ~1e-7 of peak.
    coords = SolitonCoords(psi=1.0, x0=75.0, v=0.49, w=math.sqrt(20.0),
                           d=0.0, phi=0.0)
    field0 = make_soliton_field(coords, 600.0, 6000, PERIODIC,
                                containment_tol=1e-6)
    n = particle_number(field0)
    predicted = eff.gamma * (-(g) ** 3) * n**4 / 240.0

    times = np.linspace(0.0, 4.0, 9)
    preset = "pcdnse_tight" if tight else "pcdnse"
    series = solve(OdeProblem(make_pcdnse_ode(field0, eff), 0.0, 4.0,
                              field0.psi),
                   solver_preset(preset, snapshot_times=times))
    fields = [field0.with_psi(s) for s in series.states]
    estimate = velocity_damping_estimate(fields, series.times, horizon=4.0,
                                         hopping=eff.hopping)
    measured = -estimate.relative_rate
    return {
        "gamma": gamma,
        "g_gamma_psi4": g * gamma * coords.psi**4,
        "particle_number": n,
        "predicted_rate": predicted,
        "measured_rate": measured,
        "relative_error": abs(measured - predicted) / abs(predicted),
        "tight_tolerances": tight,
    }


def run_fig4(out_dir: str | Path, full: bool = False, threads: int = 1) -> dict:
    """Velocity damping rate versus dissipation strength.

    Red-detuned (gamma > 0) runs must reproduce the collective-coordinate
    friction Gamma = gamma (-g/J)^3 N^4 / 240 within 5%; the blue-detuned
    run (gamma < 0, anti-damping) within 10% at tight tolerances.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    red = [0.0125, 0.025, 0.05, 0.1]
    jobs = [(gamma, False) for gamma in red] + [(-0.0125, True)]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda job: _guarded(_fig4_single_gamma, *job),
                             jobs))
    failures = [r["error"] for r in rows if r.get("failed")]
    rows = [r for r in rows if not r.get("failed")]

    files = [io.write_table_csv(out_dir / "damping.csv", {
        "gamma": np.array([r["gamma"] for r in rows]),
        "g_gamma_psi4": np.array([r["g_gamma_psi4"] for r in rows]),
        "measured_rate": np.array([r["measured_rate"] for r in rows]),
        "predicted_rate": np.array([r["predicted_rate"] for r in rows]),
        "relative_error": np.array([r["relative_error"] for r in rows]),
    })]

    checks = {}
    for r in rows:
        tag = f"gamma_{r['gamma']:g}".replace("-", "m").replace(".", "p")
        tol = 0.10 if r["tight_tolerances"] else 0.05
        checks[f"damping_matches_{tag}"] = bool(r["relative_error"] < tol)
    report = {"experiment": "fig4", "rows": rows, "checks": checks,
              "failures": failures}
    files.append(io.write_json(out_dir / "report.json", report))
    io.write_manifest(out_dir, files, {"experiment": "fig4"})
    return report


def _fig5_single_delta(delta: float, gamma: float, full: bool) -> dict:
    g = -0.1
    eff = EffectiveParams(g=g, gamma=gamma, hopping=1.0)
    ss = stable_soliton(1.0, eff)
    psi0 = (1.0 + delta) * ss.amplitude
    w0 = ss.particle_number / (2.0 * psi0**2)
    domain = 10.0 * max(ss.width, w0)
    coords = SolitonCoords(psi=psi0, x0=domain / 2.0, v=0.0, w=w0, d=0.0,
                           phi=0.0)
    # Half-domain is ~5 widths, so sech tails sit near 1.4% at the seam;
    # the image tail back at the peak is ~7e-5, far below the bands tested.
    # dx = w_ss/80 resolves the pulse better than the cross-model benchmark
    # grid does (w/dx = 45 there); fit residuals agree with dx = 0.1 runs
    # to three digits at a sixtieth of the cost.
    field0 = make_soliton_field(coords, domain, int(round(domain / 0.5)),
                                PERIODIC, containment_tol=0.02)

    # Short field run: does the perturbed soliton keep its shape?
    t_short = 500.0
    fit_stride = 25.0
    times = np.arange(0.0, t_short + 1e-9, 2.5)
    series = solve(OdeProblem(make_pcdnse_ode(field0, eff), 0.0, t_short,
                              field0.psi),
                   solver_preset("pcdnse", snapshot_times=times))
    peak_series = np.max(np.abs(series.states), axis=1)

    # Shape-integrity threshold: benign radiation shed while relaxing keeps
    # the RMS misfit below ~5e-3 even for a 10% amplitude kick, while a
    # destabilized pulse crosses 1e-2 early on its way to losing the peak
    # entirely (NoPeakError once it dissolves into the background).
    breakup_time = None
    residuals = []
    fit_mask = np.isclose(series.times % fit_stride, 0.0, atol=1e-6) \
        | np.isclose(series.times % fit_stride, fit_stride, atol=1e-6)
    for idx in np.where(fit_mask)[0]:
        try:
            fit = fit_soliton(field0.with_psi(series.states[idx]),
                              residual_threshold=1e-2)
        except NoPeakError:
            breakup_time = float(series.times[idx])
            break
        residuals.append((float(series.times[idx]), fit.residual))
        if not fit.converged:
            breakup_time = float(series.times[idx])
            break

    out = {
        "delta": delta,
        "psi_ss": ss.amplitude,
        "short_times": series.times,
        "short_peak": peak_series,
        "max_peak_deviation": float(np.max(np.abs(peak_series / ss.amplitude
                                                  - 1.0))),
        "fit_residuals": residuals,
        "breakup_time": breakup_time,
    }
    if breakup_time is not None:
        return out

    # Long collective run with envelope extraction.
    t_long = 2e6 if full else 2e4
    window = 5e4 if full else 1e4
    stride = 50.0 if full else 5.0
    ctimes = np.arange(0.0, t_long + 1e-9, stride)
    cseries = solve(OdeProblem(make_collective_ode(eff), 0.0, t_long,
                               coords.to_array()),
                    solver_preset("collective", snapshot_times=ctimes))
    psi_t = cseries.states.real[:, 0]
    env = envelope_deviation(cseries.times, psi_t, ss.amplitude, window)
    out["collective_times"] = cseries.times
    out["collective_psi"] = psi_t
    out["envelope"] = env
    out["envelope_non_increasing_after_first"] = bool(
        np.all(np.diff(env.max_deviation) <= 1e-12)) if len(env.max_deviation) > 1 \
        else False
    return out


def run_fig5(out_dir: str | Path, full: bool = False, threads: int = 1) -> dict:
    """Shape stabilization of perturbed solitons (hybrid method).

    For each amplitude perturbation delta the field equation is integrated
    over a short horizon and the soliton fit monitored; if the shape
    survives, the long-horizon dynamics are continued with the collective
    coordinates and summarized by the windowed envelope deviation.  A large
    perturbation (delta = 0.3) must instead trip the fit-residual threshold,
    aborting the long run.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gamma = 0.1
    deltas = (-0.1, 0.01, 0.3)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(
            lambda d: _guarded(_fig5_single_delta, d, gamma, full), deltas))
    failures = [r["error"] for r in rows if r.get("failed")]
    rows = [r for r in rows if not r.get("failed")]

    files = []
    checks = {}
    summary_rows = []
    for row in rows:
        tag = f"delta_{row['delta']:g}".replace("-", "m").replace(".", "p")
        files.append(io.write_table_csv(out_dir / f"short_peak_{tag}.csv", {
            "t": row["short_times"], "peak_amplitude": row["short_peak"],
        }))
        files.append(io.write_table_csv(out_dir / f"fit_residuals_{tag}.csv", {
            "t": np.array([r[0] for r in row["fit_residuals"]]),
            "residual": np.array([r[1] for r in row["fit_residuals"]]),
        }))
        summary = {
            "delta": row["delta"],
            "max_peak_deviation": row["max_peak_deviation"],
            "breakup_time": row["breakup_time"],
        }
        if row["breakup_time"] is None:
            files.append(io.write_table_csv(
                out_dir / f"collective_psi_{tag}.csv", {
                    "t": row["collective_times"],
                    "psi": row["collective_psi"],
                }))
            env = row["envelope"]
            files.append(io.write_table_csv(out_dir / f"envelope_{tag}.csv", {
                "t_center": env.times, "max_deviation": env.max_deviation,
            }))
            summary["envelope_non_increasing"] = \
                row["envelope_non_increasing_after_first"]
        summary_rows.append(summary)

        if row["delta"] == 0.01:
            checks["small_perturbation_bounded"] = bool(
                row["max_peak_deviation"] <= 2.0 * abs(row["delta"]))
            checks["small_perturbation_envelope_contracts"] = bool(
                row.get("envelope_non_increasing_after_first", False))
        if row["delta"] == 0.3:
            checks["large_perturbation_breaks_up"] = bool(
                row["breakup_time"] is not None
                and row["breakup_time"] <= 200.0)
        if row["delta"] == -0.1:
            checks["negative_perturbation_survives"] = bool(
                row["breakup_time"] is None)

    report = {"experiment": "fig5", "gamma": gamma, "rows": summary_rows,
              "checks": checks, "failures": failures}
    files.append(io.write_json(out_dir / "report.json", report))
    io.write_manifest(out_dir, files, {"experiment": "fig5"})
    return report


def _fig6_single_gamma(gamma: float) -> dict:
    g = -0.1
    eff = EffectiveParams(g=g, gamma=gamma, hopping=1.0)
    w0 = math.sqrt(20.0)
    psi0 = 1.0
    v0 = 0.5
    domain = 20.0 * w0
    n_points = int(round(domain / 0.1))
    left = SolitonCoords(psi=psi0, x0=domain / 2.0 - 2.5 * w0, v=v0, w=w0,
                         d=0.0, phi=0.0)
    right = SolitonCoords(psi=psi0, x0=domain / 2.0 + 2.5 * w0, v=-v0, w=w0,
                          d=0.0, phi=0.0)
    # Solitons start 7.5 widths from the seam (tails ~1e-3 there by design,
    # as the pair needs room to collide and separate again).
    f_left = make_soliton_field(left, domain, n_points, PERIODIC,
                                containment_tol=5e-3)
    f_right = make_soliton_field(right, domain, n_points, PERIODIC,
                                 containment_tol=5e-3)
    field0 = f_left.with_psi(f_left.psi + f_right.psi)

    t_end = 25.0
    times = np.linspace(0.0, t_end, 101)
    series = solve(OdeProblem(make_pcdnse_ode(field0, eff), 0.0, t_end,
                              field0.psi),
                   solver_preset("two_soliton", snapshot_times=times))
    e_two = np.array([field_energy(field0.with_psi(s), eff)
                      for s in series.states])

    # Separated prediction: two independent stable solitons, each damping.
    n_single = 2.0 * psi0**2 * w0
    ss = stable_soliton(n_single, eff)
    v_t = v0 * np.exp(-ss.damping_rate * eff.hopping * series.times)
    e_single = np.array([ss.energy(v) for v in v_t])
    ratio = e_two / (2.0 * e_single)

    # Pre-collision: separation still at least 3 widths (closing speed 4Jv).
    t_pre = (5.0 * w0 - 3.0 * w0) / (4.0 * eff.hopping * v0)
    pre = series.times <= t_pre
    band = float(np.max(np.abs(ratio[pre] - 1.0)))
    return {
        "gamma": gamma,
        "times": series.times,
        "e_two": e_two,
        "e_single_pred": e_single,
        "ratio": ratio,
        "t_pre_collision": t_pre,
        "pre_collision_band": band,
        "final_ratio": float(ratio[-1]),
        "max_ratio_deviation": float(np.max(np.abs(ratio - 1.0))),
    }


def run_fig6(out_dir: str | Path, full: bool = False, threads: int = 1) -> dict:
    """Colliding soliton pair: dissipation enhancement during overlap.

    Compares the two-soliton field energy against twice the single-soliton
    prediction.  Without dissipation the ratio stays within 1%; with
    gamma = 0.01 the post-collision energy must sit below the separated
    prediction by more than the pre-collision noise band.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gammas = (0.0, 0.01)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda g: _guarded(_fig6_single_gamma, g),
                             gammas))
    failures = [r["error"] for r in rows if r.get("failed")]
    rows = [r for r in rows if not r.get("failed")]

    files = []
    checks = {}
    summary = []
    for row in rows:
        tag = f"gamma_{row['gamma']:g}".replace("-", "m").replace(".", "p")
        files.append(io.write_table_csv(out_dir / f"energy_{tag}.csv", {
            "t": row["times"], "e_two": row["e_two"],
            "e_single_pred": row["e_single_pred"], "ratio": row["ratio"],
        }))
        summary.append({k: row[k] for k in (
            "gamma", "t_pre_collision", "pre_collision_band", "final_ratio",
            "max_ratio_deviation")})
        if row["gamma"] == 0.0:
            checks["conservative_ratio_within_band"] = bool(
                row["max_ratio_deviation"] < 0.01)
        else:
            checks["dissipative_pre_collision_within_band"] = bool(
                row["pre_collision_band"] < 0.01)
            checks["collision_enhances_dissipation"] = bool(
                1.0 - row["final_ratio"] >= row["pre_collision_band"])

    report = {"experiment": "fig6", "rows": summary, "checks": checks,
              "failures": failures}
    files.append(io.write_json(out_dir / "report.json", report))
    io.write_manifest(out_dir, files, {"experiment": "fig6"})
    return report


def run_fig2(out_dir: str | Path, full: bool = False, threads: int = 1) -> dict:
    """Detuning sweep of the effective constants (see run_params_sweep)."""
    return run_params_sweep(out_dir)


EXPERIMENTS: dict[str, Callable[..., dict]] = {
    "fig2": run_fig2,
    "fig3a": run_fig3a,
    "fig3b": run_fig3b,
    "fig4": run_fig4,
    "fig5": run_fig5,
    "fig6": run_fig6,
}


def run_experiment(config: ExperimentConfig) -> dict:
    """Dispatch a canned experiment by figure id."""
    try:
        runner = EXPERIMENTS[config.figure]
    except KeyError:
        raise ConfigError(
            f"unknown experiment {config.figure!r}; "
            f"choose from {sorted(EXPERIMENTS)}") from None
    return runner(config.out_dir, full=config.full, threads=config.threads)
