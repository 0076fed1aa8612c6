"""Microscopic dynamics of the chain with its driven auxiliary cavities.

Site n couples cross-Kerr-wise to cavity n, which is coherently driven and
lossy.  In the frame rotating at the drive the classical amplitudes obey

    dA_n/dt = (i delta - kappa/2) A_n + eta - i chi |B_n|^2 A_n
    dB_n/dt = -i chi |A_n|^2 B_n - i alpha |B_n|^2 B_n + i J (B_{n-1} + B_{n+1})

The cavities relax toward A_ss = eta / (kappa/2 - i delta) at rate kappa/2
and, once eliminated, endow the sites with the effective constants of
:mod:`pcdnse.params`.  Comparisons against the reduced models are made in
the effective frame, reached by the time-dependent (site-independent) gauge

    b_n(t) = exp(i chi eta^2 t / (delta^2 + kappa^2/4)) exp(-2 i J t) B_n(t)

which removes the static cavity-induced frequency shift and re-centers the
hopping band; it leaves all occupations |B_n|^2 untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .integrate import TimeSeries
from .model_effective import lattice_laplacian
from .params import (
    OPEN,
    PERIODIC,
    ChainParams,
    DegenerateDenominatorError,
    ReservoirParams,
)

__all__ = [
    "FullState",
    "full_rhs",
    "steady_state_cavities",
    "pack_full_state",
    "unpack_full_state",
    "make_full_ode",
    "rotating_frame_to_effective",
]


@dataclass
class FullState:
    """Cavity and site amplitudes, one pair per lattice site."""

    cavity: np.ndarray
    sites: np.ndarray

    def __post_init__(self) -> None:
        self.cavity = np.asarray(self.cavity, dtype=complex)
        self.sites = np.asarray(self.sites, dtype=complex)
        if self.cavity.shape != self.sites.shape or self.cavity.ndim != 1:
            raise ValueError("cavity and sites must be 1-d arrays of equal length")


def _neighbor_sum(b: np.ndarray, boundary: str) -> np.ndarray:
    if boundary == PERIODIC:
        return np.roll(b, 1) + np.roll(b, -1)
    if boundary == OPEN:
        out = np.zeros_like(b)
        out[1:] += b[:-1]
        out[:-1] += b[1:]
        return out
    raise ValueError(f"unknown boundary {boundary!r}")


def full_rhs(state: FullState, res: ReservoirParams,
             chain: ChainParams) -> FullState:
    """Time derivative of the coupled cavity-site amplitudes."""
    a, b = state.cavity, state.sites
    occ_b = np.abs(b) ** 2
    occ_a = np.abs(a) ** 2
    da = ((1j * res.delta - res.kappa / 2.0) * a + res.eta
          - 1j * res.chi * occ_b * a)
    db = (-1j * res.chi * occ_a * b
          - 1j * chain.anharmonicity * occ_b * b
          + 1j * chain.hopping * _neighbor_sum(b, chain.boundary))
    return FullState(da, db)


def steady_state_cavities(res: ReservoirParams, sites: int) -> np.ndarray:
    """Cavity amplitudes with undisturbed sites: eta / (kappa/2 - i delta)."""
    denom = res.kappa / 2.0 - 1j * res.delta
    if denom == 0:
        raise DegenerateDenominatorError(
            "kappa and delta both vanish; no cavity steady state")
    return np.full(sites, res.eta / denom, dtype=complex)


def pack_full_state(state: FullState) -> np.ndarray:
    """Concatenate [cavities, sites] into one integrator vector."""
    return np.concatenate([state.cavity, state.sites])


def unpack_full_state(vec: np.ndarray) -> FullState:
    if len(vec) % 2:
        raise ValueError("packed full state must have even length")
    half = len(vec) // 2
    return FullState(vec[:half], vec[half:])


def make_full_ode(res: ReservoirParams,
                  chain: ChainParams) -> Callable[[float, np.ndarray], np.ndarray]:
    """Integrator-ready closure over :func:`full_rhs` on packed vectors."""
    half = chain.sites
    boundary = chain.boundary
    chi = res.chi
    eta = res.eta
    pole = 1j * res.delta - res.kappa / 2.0
    alpha = chain.anharmonicity
    j = chain.hopping

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        a = y[:half]
        b = y[half:]
        da = pole * a + eta - 1j * chi * np.abs(b) ** 2 * a
        db = (-1j * chi * np.abs(a) ** 2 * b - 1j * alpha * np.abs(b) ** 2 * b
              + 1j * j * _neighbor_sum(b, boundary))
        return np.concatenate([da, db])

    return rhs


def rotating_frame_to_effective(series: TimeSeries, res: ReservoirParams,
                                chain: ChainParams) -> TimeSeries:
    """Map a packed full-model trajectory to effective-frame site amplitudes.

    Applies the global gauge phase to the site half of each packed state;
    occupations are unchanged, so cross-model occupation comparisons may use
    either frame.
    """
    den = res.delta**2 + res.kappa**2 / 4.0
    if den == 0:
        raise DegenerateDenominatorError(
            "kappa and delta both vanish; rotating frame undefined")
    shift = res.chi * res.eta**2 / den
    states = np.asarray(series.states)
    if states.ndim != 2 or states.shape[1] % 2:
        raise ValueError("series must hold packed full states")
    half = states.shape[1] // 2
    phases = np.exp(1j * (shift - 2.0 * chain.hopping) * series.times)
    return TimeSeries(series.times.copy(),
                      states[:, half:] * phases[:, None],
                      series.stats)
