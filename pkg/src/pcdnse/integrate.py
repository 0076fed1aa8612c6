"""Adaptive explicit Runge-Kutta integration with embedded error control.

Two embedded pairs are provided:

``tsit5``
    The 5(4) pair of Tsitouras [1], the workhorse for the field and
    collective-coordinate equations.  First-same-as-last, 6 effective
    stages per accepted step.
``rkf78``
    The 13-stage 7(8) pair of Fehlberg [2], used where very tight
    tolerances make a high-order method pay off (the microscopic
    cavity-chain runs).  The eighth-order solution is propagated.

Step-size selection uses a PI controller (safety factor 0.9, growth factor
clamped to [0.2, 5]).  Requested snapshot times are hit exactly by clipping
the step, never by interpolation, so recorded states are genuine solution
points of the stepper.

References
----------
[1] Ch. Tsitouras, Comput. Math. Appl. 62, 770 (2011).
[2] E. Fehlberg, NASA TR R-287 (1968), Table X.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

__all__ = [
    "OdeProblem",
    "SolverConfig",
    "TimeSeries",
    "SolveStats",
    "IntegrationError",
    "StepUnderflowError",
    "MaxStepsExceededError",
    "solve",
    "solve_fixed_grid",
    "solver_preset",
    "SOLVER_PRESETS",
]


class IntegrationError(RuntimeError):
    """Base class for integrator failures."""

    def __init__(self, message: str, stats: "SolveStats | None" = None):
        if stats is not None:
            message = (
                f"{message} [accepted={stats.n_accepted}, "
                f"rejected={stats.n_rejected}, rhs_evals={stats.n_rhs}]"
            )
        super().__init__(message)
        self.stats = stats


class StepUnderflowError(IntegrationError):
    """Step size shrank below floating-point resolution of the time axis."""


class MaxStepsExceededError(IntegrationError):
    """Step budget exhausted before reaching the end of the interval."""


@dataclass(frozen=True)
class OdeProblem:
    """An initial value problem dy/dt = rhs(t, y) on [t0, t1]."""

    rhs: Callable[[float, np.ndarray], np.ndarray]
    t0: float
    t1: float
    initial_state: np.ndarray

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t0) and math.isfinite(self.t1)):
            raise ValueError("t0 and t1 must be finite")
        if self.t1 <= self.t0:
            raise ValueError("t1 must exceed t0")


@dataclass(frozen=True)
class SolverConfig:
    """Method choice and accuracy targets for :func:`solve`.

    ``snapshot_times`` requests the recorded output grid; when ``None`` every
    accepted step is recorded.  The local error is measured against
    ``atol + rtol * |y|`` componentwise (RMS norm).
    """

    method: str = "tsit5"
    rtol: float = 1e-8
    atol: float = 1e-8
    max_steps: int = 1_000_000
    snapshot_times: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.method not in _METHOD_ALIASES:
            raise ValueError(
                f"unknown method {self.method!r}; "
                f"choose from {sorted(set(_METHOD_ALIASES))}"
            )
        if self.rtol <= 0 or self.atol < 0:
            raise ValueError("rtol must be > 0 and atol >= 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class SolveStats:
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs: int = 0


@dataclass
class TimeSeries:
    """Recorded trajectory: ``states[i]`` is the state at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray
    stats: SolveStats | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states)
        if self.times.ndim != 1 or len(self.times) != len(self.states):
            raise ValueError("times and states must have matching leading length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")


@dataclass(frozen=True)
class _Tableau:
    c: np.ndarray
    a: np.ndarray          # strictly lower triangular stage coefficients
    b: np.ndarray          # weights of the propagated solution
    e: np.ndarray          # error weights (propagated minus embedded)
    error_order: int       # order of the embedded (lower) solution
    fsal: bool


def _tsitouras_5_4() -> _Tableau:
    # Coefficients from Tsitouras (2011), as commonly tabulated in double
    # precision.  Row sums of `a` reproduce `c`; `b` row sums to 1.
    c = np.array([0.0, 0.161, 0.327, 0.9, 0.9800255409045097, 1.0, 1.0])
    a = np.zeros((7, 7))
    a[1, 0] = 0.161
    a[2, :2] = [-0.008480655492356989, 0.335480655492357]
    a[3, :3] = [2.8971530571054935, -6.359448489975075, 4.3622954328695815]
    a[4, :4] = [
        5.325864828439257,
        -11.748883564062828,
        7.4955393428898365,
        -0.09249506636175525,
    ]
    a[5, :5] = [
        5.86145544294642,
        -12.92096931784711,
        8.159367898576159,
        -0.071584973281401,
        -0.028269050394068383,
    ]
    a[6, :6] = [
        0.09646076681806523,
        0.01,
        0.4798896504144996,
        1.379008574103742,
        -3.290069515436081,
        2.324710524099774,
    ]
    b = a[6].copy()  # first-same-as-last: last stage is the 5th order solution
    e = np.array([
        -0.001780011052225771,
        -0.0008164344596567469,
        0.007880878010261995,
        -0.1447110071732629,
        0.5823571654525552,
        -0.45808210592918697,
        1.0 / 66.0,
    ])
    return _Tableau(c=c, a=a, b=b, e=e, error_order=4, fsal=True)


def _fehlberg_7_8() -> _Tableau:
    c = np.array([
        0.0, 2 / 27, 1 / 9, 1 / 6, 5 / 12, 1 / 2, 5 / 6, 1 / 6, 2 / 3, 1 / 3,
        1.0, 0.0, 1.0,
    ])
    a = np.zeros((13, 13))
    a[1, 0] = 2 / 27
    a[2, :2] = [1 / 36, 1 / 12]
    a[3, :3] = [1 / 24, 0, 1 / 8]
    a[4, :4] = [5 / 12, 0, -25 / 16, 25 / 16]
    a[5, :5] = [1 / 20, 0, 0, 1 / 4, 1 / 5]
    a[6, :6] = [-25 / 108, 0, 0, 125 / 108, -65 / 27, 125 / 54]
    a[7, :7] = [31 / 300, 0, 0, 0, 61 / 225, -2 / 9, 13 / 900]
    a[8, :8] = [2, 0, 0, -53 / 6, 704 / 45, -107 / 9, 67 / 90, 3]
    a[9, :9] = [
        -91 / 108, 0, 0, 23 / 108, -976 / 135, 311 / 54, -19 / 60, 17 / 6,
        -1 / 12,
    ]
    a[10, :10] = [
        2383 / 4100, 0, 0, -341 / 164, 4496 / 1025, -301 / 82, 2133 / 4100,
        45 / 82, 45 / 164, 18 / 41,
    ]
    a[11, :11] = [
        3 / 205, 0, 0, 0, 0, -6 / 41, -3 / 205, -3 / 41, 3 / 41, 6 / 41, 0,
    ]
    a[12, :12] = [
        -1777 / 4100, 0, 0, -341 / 164, 4496 / 1025, -289 / 82, 2193 / 4100,
        51 / 82, 33 / 164, 12 / 41, 0, 1,
    ]
    # Propagate the 8th-order solution; the error estimate is the classical
    # difference of the pair, 41/840 (k1 + k11 - k12 - k13).
    b = np.array([
        0, 0, 0, 0, 0, 34 / 105, 9 / 35, 9 / 35, 9 / 280, 9 / 280, 0,
        41 / 840, 41 / 840,
    ])
    e = np.zeros(13)
    e[0] = 41 / 840
    e[10] = 41 / 840
    e[11] = -41 / 840
    e[12] = -41 / 840
    return _Tableau(c=c, a=a, b=b, e=e, error_order=7, fsal=False)


_TABLEAUS = {"tsit5": _tsitouras_5_4(), "rkf78": _fehlberg_7_8()}
# Contract-level aliases: the default pair and the high-order pair.
_METHOD_ALIASES = {
    "tsit5": "tsit5",
    "rk45_tsitouras": "tsit5",
    "rkf78": "rkf78",
    "rk_high_order": "rkf78",
}

#: Named tolerance presets for the production runs.
SOLVER_PRESETS: dict[str, SolverConfig] = {
    "pcdnse": SolverConfig(method="tsit5", rtol=1e-8, atol=1e-8),
    "pcdnse_tight": SolverConfig(method="tsit5", rtol=1e-13, atol=1e-12),
    "langevin": SolverConfig(method="rkf78", rtol=1e-12, atol=1e-12),
    "collective": SolverConfig(method="tsit5", rtol=1e-10, atol=1e-8),
    "two_soliton": SolverConfig(method="tsit5", rtol=1e-10, atol=1e-8),
}


def solver_preset(name: str, **overrides) -> SolverConfig:
    """Return a named preset, optionally overriding individual fields."""
    try:
        cfg = SOLVER_PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown solver preset {name!r}; choose from {sorted(SOLVER_PRESETS)}"
        ) from None
    return replace(cfg, **overrides) if overrides else cfg


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray,
                atol: float, rtol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, t1, order, atol, rtol, stats) -> float:
    # Classical starting-step heuristic (Hairer, Norsett, Wanner, II.4).
    scale = atol + rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((np.abs(y0) / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((np.abs(f0) / scale) ** 2)))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t1 - t0)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    stats.n_rhs += 1
    d2 = float(np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1, t1 - t0)


def solve(problem: OdeProblem, config: SolverConfig) -> TimeSeries:
    """Integrate ``problem`` and return the recorded trajectory.

    With ``snapshot_times`` set, exactly those instants are recorded (they
    must lie in [t0, t1] and be strictly increasing); integration stops at
    the last one.  Without them every accepted step is recorded, starting
    at t0.  Identical inputs produce bit-identical output.

    Raises
    ------
    StepUnderflowError
        If error control forces the step below the resolution of the time
        variable (typically a sign of a defective or singular RHS).
    MaxStepsExceededError
        If more than ``config.max_steps`` steps (accepted plus rejected)
        would be needed.
    """
    tab = _TABLEAUS[_METHOD_ALIASES[config.method]]
    rhs = problem.rhs
    t0, t1 = float(problem.t0), float(problem.t1)
    y = np.array(problem.initial_state, copy=True)
    if y.ndim != 1:
        raise ValueError("initial_state must be one-dimensional")
    if not np.issubdtype(y.dtype, np.inexact):
        y = y.astype(float)

    snapshots = None
    if config.snapshot_times is not None:
        snapshots = np.asarray(config.snapshot_times, dtype=float)
        if snapshots.ndim != 1 or len(snapshots) == 0:
            raise ValueError("snapshot_times must be a non-empty 1-d array")
        if len(snapshots) > 1 and not np.all(np.diff(snapshots) > 0):
            raise ValueError("snapshot_times must be strictly increasing")
        if snapshots[0] < t0 - 1e-12 * max(1.0, abs(t0)) or snapshots[-1] > t1 + 1e-12 * max(1.0, abs(t1)):
            raise ValueError("snapshot_times must lie within [t0, t1]")

    stats = SolveStats()
    rec_times: list[float] = []
    rec_states: list[np.ndarray] = []

    def record(t: float, state: np.ndarray) -> None:
        rec_times.append(t)
        rec_states.append(state.copy())

    out_idx = 0
    if snapshots is None:
        record(t0, y)
        t_end = t1
    else:
        tiny0 = 1e-12 * max(1.0, abs(t0))
        while out_idx < len(snapshots) and snapshots[out_idx] <= t0 + tiny0:
            record(t0, y)
            out_idx += 1
        t_end = float(snapshots[-1])
        if out_idx >= len(snapshots):
            return TimeSeries(np.array(rec_times), np.array(rec_states), stats)

    n_stages = len(tab.c)
    k = np.empty((n_stages, y.size), dtype=y.dtype)
    f0 = rhs(t0, y)
    stats.n_rhs += 1
    k[0] = f0

    order = tab.error_order + 1          # order of the propagated solution
    exponent = 1.0 / (tab.error_order + 1)
    beta1 = 0.7 * exponent               # PI controller memory weights
    beta2 = 0.4 * exponent
    safety, fac_min, fac_max = 0.9, 0.2, 5.0

    t = t0
    dt = _initial_step(rhs, t0, y, f0, t_end, tab.error_order, config.atol,
                       config.rtol, stats)
    err_prev = 1.0
    k0_valid = True                      # k[0] holds rhs(t, y) for current (t, y)

    while t < t_end:
        if stats.n_accepted + stats.n_rejected >= config.max_steps:
            raise MaxStepsExceededError(
                f"exceeded max_steps={config.max_steps} at t={t!r}", stats)

        tiny = 4.0 * np.finfo(float).eps * max(abs(t), 1.0)
        if dt < tiny:
            raise StepUnderflowError(
                f"step size {dt!r} underflowed at t={t!r}", stats)

        # Clip to land exactly on the next requested output (or the end).
        target = t_end if snapshots is None else float(snapshots[out_idx])
        h = dt
        clipped = False
        if t + h >= target - tiny:
            h = target - t
            clipped = True

        if not k0_valid:
            k[0] = rhs(t, y)
            stats.n_rhs += 1
            k0_valid = True
        for i in range(1, n_stages):
            yi = y + h * (tab.a[i, :i] @ k[:i])
            k[i] = rhs(t + tab.c[i] * h, yi)
        stats.n_rhs += n_stages - 1

        y_new = y + h * (tab.b @ k)
        err_vec = h * (tab.e @ k)
        err = _error_norm(err_vec, y, y_new, config.atol, config.rtol)

        if err <= 1.0:
            stats.n_accepted += 1
            t_new = target if clipped else t + h
            if err == 0.0:
                factor = fac_max
            else:
                factor = min(fac_max, max(
                    fac_min, safety * err**(-beta1) * err_prev**beta2))
            err_prev = max(err, 1e-4)
            t, y = t_new, y_new
            if tab.fsal:
                k[0] = k[-1]        # first-same-as-last stage reuse
            else:
                k0_valid = False
            if snapshots is None:
                record(t, y)
            elif clipped:
                record(t, y)
                out_idx += 1
                if out_idx >= len(snapshots):
                    break
            dt = h * factor
        else:
            # Rejection leaves (t, y) untouched, so k[0] remains valid.
            stats.n_rejected += 1
            dt = h * min(1.0, max(fac_min, safety * err**(-exponent)))

    return TimeSeries(np.array(rec_times), np.array(rec_states), stats)


def solve_fixed_grid(problem: OdeProblem, config: SolverConfig,
                     n_outputs: int) -> TimeSeries:
    """Integrate and record on a uniform grid of ``n_outputs`` points.

    The grid spans [t0, t1] inclusive, so ``n_outputs >= 2``.
    """
    if n_outputs < 2:
        raise ValueError("n_outputs must be >= 2")
    grid = np.linspace(problem.t0, problem.t1, n_outputs)
    return solve(problem, replace(config, snapshot_times=grid))
