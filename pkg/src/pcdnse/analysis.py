"""Estimators that reduce simulated fields to soliton observables.

The central tool is a nonlinear least-squares fit of the six-parameter
soliton ansatz to a complex field snapshot.  On top of it sit the velocity
damping estimator (finite-difference slope of the momentum velocity over a
fixed horizon, gated by endpoint fits) and the windowed envelope-deviation
series used to monitor shape relaxation in long runs.  A direct profile
comparator quantifies agreement between occupation profiles from different
models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .collective import SolitonCoords
from .model_continuum import FieldState, mean_velocity, sech
from .params import PERIODIC

__all__ = [
    "FitResult",
    "DampingEstimate",
    "EnvelopeSeries",
    "ProfileComparison",
    "NoPeakError",
    "fit_soliton",
    "velocity_damping_estimate",
    "envelope_deviation",
    "compare_profiles",
]

#: RMS occupancy misfit (relative to the peak) above which a fit is not
#: considered a faithful single-soliton description.
FIT_RESIDUAL_THRESHOLD = 1e-3


class NoPeakError(ValueError):
    """The field has no localized peak to fit (peak <= 10x median)."""


@dataclass(frozen=True)
class FitResult:
    """Outcome of a soliton fit.

    ``residual`` is the RMS misfit of |Psi|^2 relative to the peak
    occupation; ``converged`` requires optimizer success and a residual
    below the threshold.
    """

    coords: SolitonCoords
    residual: float
    converged: bool


@dataclass(frozen=True)
class DampingEstimate:
    """Velocity slope between two snapshots.

    Velocities are momentum per particle (P/N), which coincides with the
    ansatz phase slope v on the soliton manifold but, unlike a fitted v,
    carries no transient while the soliton builds its dissipative dressing.
    The endpoint fits are kept as shape-integrity gates.
    """

    vdot: float
    relative_rate: float     # vdot / (mean velocity * J)
    t_start: float
    t_end: float
    v_start: float
    v_end: float
    fit_start: FitResult
    fit_end: FitResult


@dataclass(frozen=True)
class EnvelopeSeries:
    """Per-window maxima of |value/reference - 1| over consecutive windows."""

    window_length: float
    times: np.ndarray        # window centers
    max_deviation: np.ndarray


@dataclass(frozen=True)
class ProfileComparison:
    """Pointwise distance between two occupation profiles.

    ``l2`` is an RMS over the comparison grid; the ``_rel`` variants are
    normalized by the larger of the two profile peaks.
    """

    linf: float
    l2: float
    linf_rel: float
    l2_rel: float
    peak: float


def _model_field(x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    amp, x0, v, w, d, phi = theta
    u = x - x0
    wa = abs(w)
    return amp * sech(u / wa) * np.exp(1j * (u * v + u * u * d + phi))


def _initial_guess(x: np.ndarray, psi: np.ndarray, dx: float) -> np.ndarray:
    occ = np.abs(psi) ** 2
    j_peak = int(np.argmax(occ))
    peak = occ[j_peak]
    amp = math.sqrt(peak)
    x0 = x[j_peak]

    # Width from the FWHM of |Psi|^2; sech^2 falls to half at
    # arcsech(1/sqrt(2)) = ln(1 + sqrt(2)) widths from the center.
    half = peak / 2.0
    j_left = j_peak
    while j_left > 0 and occ[j_left - 1] > half:
        j_left -= 1
    j_right = j_peak
    while j_right < len(occ) - 1 and occ[j_right + 1] > half:
        j_right += 1
    fwhm = max(j_right - j_left, 1) * dx
    w = fwhm / (2.0 * math.log(1.0 + math.sqrt(2.0)))

    # Velocity and chirp from a quadratic fit of the unwrapped phase near
    # the peak, weighted by occupation.
    window = occ > 1e-6 * peak
    lo, hi = j_peak, j_peak
    while lo > 0 and window[lo - 1]:
        lo -= 1
    while hi < len(occ) - 1 and window[hi + 1]:
        hi += 1
    sl = slice(lo, hi + 1)
    u = x[sl] - x0
    phase = np.unwrap(np.angle(psi[sl]))
    if len(u) >= 3:
        c2, c1, c0 = np.polyfit(u, phase, 2, w=occ[sl])
    else:
        c2, c1, c0 = 0.0, 0.0, float(np.angle(psi[j_peak]))
    return np.array([amp, x0, c1, w, c2, c0])


def _wrap_phase(phi: float) -> float:
    return (phi + math.pi) % (2.0 * math.pi) - math.pi


def fit_soliton(
    field: FieldState,
    residual_threshold: float = FIT_RESIDUAL_THRESHOLD,
) -> FitResult:
    """Fit the soliton ansatz to a field snapshot.

    The complex field (not just its modulus) is fitted, so velocity and
    chirp are recovered from the phase profile.  Periodic fields are rolled
    to center the peak first, which makes the fit insensitive to solitons
    near the seam; the fitted center is mapped back to [0, L).

    Raises
    ------
    NoPeakError
        If the occupation has no localized peak (peak <= 10x median).
    """
    occ = np.abs(field.psi) ** 2
    peak = float(np.max(occ))
    if peak <= 10.0 * float(np.median(occ)):
        raise NoPeakError(
            "occupation peak does not stand out from the background")

    x = field.x
    dx = field.dx
    psi = field.psi
    shift = 0
    if field.boundary == PERIODIC:
        shift = field.n_points // 2 - int(np.argmax(occ))
        psi = np.roll(psi, shift)

    theta0 = _initial_guess(x, psi, dx)

    def residuals(theta: np.ndarray) -> np.ndarray:
        r = _model_field(x, theta) - psi
        return np.concatenate([r.real, r.imag])

    result = least_squares(residuals, theta0, method="lm",
                           ftol=1e-12, xtol=1e-12, gtol=1e-12)

    amp, x0, v, w, d, phi = result.x
    if amp < 0:
        amp, phi = -amp, phi + math.pi
    w = abs(w)
    if field.boundary == PERIODIC:
        x0 = (x0 - shift * dx) % field.domain_length

    model_occ = np.abs(_model_field(x, result.x)) ** 2
    residual = float(np.sqrt(np.mean((model_occ - np.abs(psi) ** 2) ** 2))) / peak

    coords = SolitonCoords(psi=float(amp), x0=float(x0), v=float(v),
                           w=float(w), d=float(d), phi=_wrap_phase(phi))
    converged = bool(result.success) and residual < residual_threshold
    return FitResult(coords=coords, residual=residual, converged=converged)


def velocity_damping_estimate(
    fields: Sequence[FieldState],
    times: Sequence[float],
    horizon: float = 4.0,
    hopping: float = 1.0,
    residual_threshold: float = 1e-2,
) -> DampingEstimate:
    """Velocity slope between the start and the end of a horizon.

    Uses the first snapshot and the one nearest ``times[0] + horizon``
    (which must exist within 5% of the horizon) and returns the
    finite-difference slope and the relative rate vdot/(v_mean J).

    The velocity observable is momentum per particle.  A fitted phase
    slope lags the momentum by an order-one transient while the soliton
    develops its dissipative dressing, which over short horizons would
    understate the rate by ~20%; the momentum velocity is exact on the
    ansatz manifold and settles at the damped rate immediately.  Soliton
    fits still run at both endpoints, and a non-converged fit raises,
    since the slope is meaningless once the pulse loses its shape.  The
    gate threshold is looser than the breakup default: the dissipative
    dressing alone contributes an O(gamma) residual (~1.5e-3 at
    gamma = 0.1) that must not count as shape loss.
    """
    times = np.asarray(times, dtype=float)
    if len(times) != len(fields) or len(times) < 2:
        raise ValueError("need matching times and fields with >= 2 snapshots")
    t_target = times[0] + horizon
    idx = int(np.argmin(np.abs(times - t_target)))
    if abs(times[idx] - t_target) > 0.05 * horizon:
        raise ValueError(
            f"no snapshot within 5% of the horizon {horizon!r}; "
            f"closest is at t={times[idx]!r}")
    if idx == 0:
        raise ValueError("horizon too short: endpoint equals start")

    fit0 = fit_soliton(fields[0], residual_threshold=residual_threshold)
    fit1 = fit_soliton(fields[idx], residual_threshold=residual_threshold)
    if not (fit0.converged and fit1.converged):
        raise ValueError(
            "endpoint snapshot is not a clean single soliton; residuals "
            f"{fit0.residual:.2e} and {fit1.residual:.2e}")
    v0 = mean_velocity(fields[0])
    v1 = mean_velocity(fields[idx])
    dt = times[idx] - times[0]
    vdot = (v1 - v0) / dt
    v_mean = 0.5 * (v1 + v0)
    if v_mean == 0:
        raise ValueError("mean velocity vanishes; relative rate undefined")
    return DampingEstimate(
        vdot=vdot,
        relative_rate=vdot / (v_mean * hopping),
        t_start=float(times[0]),
        t_end=float(times[idx]),
        v_start=v0,
        v_end=v1,
        fit_start=fit0,
        fit_end=fit1,
    )


def envelope_deviation(
    times: np.ndarray,
    values: np.ndarray,
    reference: float,
    window_length: float,
) -> EnvelopeSeries:
    """Windowed maxima of |values/reference - 1|.

    Partitions the time span into consecutive windows of ``window_length``
    starting at times[0]; a trailing partial window is dropped.  Useful for
    deciding whether a slowly damped oscillation is actually contracting:
    with the window at least one oscillation period long, the series is
    non-increasing exactly when the envelope is.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise ValueError("times and values must be matching 1-d arrays")
    if reference == 0:
        raise ValueError("reference must be nonzero")
    if window_length <= 0:
        raise ValueError("window_length must be positive")
    span = times[-1] - times[0]
    if span < window_length:
        raise ValueError("series shorter than one window")

    deviation = np.abs(values / reference - 1.0)
    n_windows = int(math.floor(span / window_length + 1e-9))
    centers = []
    maxima = []
    for i in range(n_windows):
        left = times[0] + i * window_length
        right = left + window_length
        if i == n_windows - 1:
            mask = (times >= left) & (times <= right + 1e-9 * window_length)
        else:
            mask = (times >= left) & (times < right)
        if not np.any(mask):
            raise ValueError(f"window [{left}, {right}) contains no samples")
        centers.append(left + window_length / 2.0)
        maxima.append(float(np.max(deviation[mask])))
    return EnvelopeSeries(window_length=float(window_length),
                          times=np.array(centers),
                          max_deviation=np.array(maxima))


def compare_profiles(
    x_a: np.ndarray, occ_a: np.ndarray,
    x_b: np.ndarray, occ_b: np.ndarray,
) -> ProfileComparison:
    """Distance between two occupation profiles on a shared axis.

    The finer-sampled profile is linearly interpolated onto the coarser
    grid, so models with different resolutions (lattice sites versus a fine
    field grid) compare directly.  Both profiles must cover essentially the
    same coordinate range.
    """
    x_a = np.asarray(x_a, dtype=float)
    x_b = np.asarray(x_b, dtype=float)
    occ_a = np.asarray(occ_a, dtype=float)
    occ_b = np.asarray(occ_b, dtype=float)
    if x_a.shape != occ_a.shape or x_b.shape != occ_b.shape:
        raise ValueError("each profile needs matching x and occupation arrays")

    if len(x_a) <= len(x_b):
        grid, base, other_x, other_occ = x_a, occ_a, x_b, occ_b
    else:
        grid, base, other_x, other_occ = x_b, occ_b, x_a, occ_a
    resampled = np.interp(grid, other_x, other_occ)

    diff = base - resampled
    peak = float(max(np.max(occ_a), np.max(occ_b)))
    if peak <= 0:
        raise ValueError("profiles are identically zero")
    linf = float(np.max(np.abs(diff)))
    l2 = float(np.sqrt(np.mean(diff**2)))
    return ProfileComparison(linf=linf, l2=l2, linf_rel=linf / peak,
                             l2_rel=l2 / peak, peak=peak)
