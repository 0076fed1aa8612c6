"""Estimators: soliton fits, the velocity damping slope, envelope windows
and profile comparison.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pcdnse.analysis import (
    NoPeakError,
    compare_profiles,
    envelope_deviation,
    fit_soliton,
    velocity_damping_estimate,
)
from pcdnse.collective import SolitonCoords
from pcdnse.model_continuum import FieldState, make_soliton_field
from pcdnse.params import OPEN


def test_fit_roundtrip_recovers_all_six_coordinates():
    truth = SolitonCoords(psi=0.8, x0=70.0, v=0.3, w=5.0, d=0.01, phi=1.2)
    field = make_soliton_field(truth, 200.0, 2000, containment_tol=1e-4)
    fit = fit_soliton(field)
    assert fit.converged
    assert fit.residual < 1e-6
    got = fit.coords
    assert_allclose(got.psi, truth.psi, rtol=1e-6)
    assert_allclose(got.x0, truth.x0, rtol=1e-6)
    assert_allclose(got.v, truth.v, rtol=1e-5)
    assert_allclose(got.w, truth.w, rtol=1e-6)
    assert_allclose(got.d, truth.d, rtol=1e-5)
    assert_allclose(got.phi, truth.phi, atol=1e-6)


def test_fit_handles_soliton_straddling_the_seam():
    # periodic translate of a contained soliton, peak rolled to x = 1.0:
    # smooth across the seam, exactly what a moving soliton produces
    centered = make_soliton_field(
        SolitonCoords(psi=1.0, x0=100.0, v=-0.2, w=5.0, d=0.0, phi=0.0),
        200.0, 2000, containment_tol=1e-4)
    field = FieldState(np.roll(centered.psi, -990), 200.0)
    fit = fit_soliton(field)
    assert fit.converged
    assert_allclose(fit.coords.x0 % 200.0, 1.0, atol=1e-5)
    assert_allclose(fit.coords.v, -0.2, rtol=1e-5)


def test_fit_open_boundary_field():
    truth = SolitonCoords(psi=0.6, x0=90.0, v=0.1, w=4.0, d=0.0, phi=-0.5)
    field = make_soliton_field(truth, 200.0, 2001, OPEN)
    fit = fit_soliton(field)
    assert fit.converged
    assert_allclose(fit.coords.x0, 90.0, rtol=1e-6)
    assert_allclose(fit.coords.w, 4.0, rtol=1e-6)


def test_fit_rejects_featureless_field():
    flat = FieldState(np.ones(256, dtype=complex), 256.0)
    with pytest.raises(NoPeakError):
        fit_soliton(flat)


def test_fit_flags_a_two_soliton_field_without_raising():
    a = make_soliton_field(
        SolitonCoords(psi=1.0, x0=60.0, v=0.0, w=5.0, d=0.0, phi=0.0),
        200.0, 2000, containment_tol=1e-4)
    b = make_soliton_field(
        SolitonCoords(psi=1.0, x0=140.0, v=0.0, w=5.0, d=0.0, phi=0.0),
        200.0, 2000, containment_tol=1e-4)
    both = FieldState(a.psi + b.psi, 200.0)
    fit = fit_soliton(both)
    assert not fit.converged
    assert fit.residual > 1e-2


def _decaying_sequence(rate, times, v0=0.5):
    fields = []
    for t in times:
        coords = SolitonCoords(psi=0.8, x0=100.0, v=v0 * math.exp(-rate * t),
                               w=4.0, d=0.0, phi=0.0)
        fields.append(make_soliton_field(coords, 200.0, 2000,
                                         containment_tol=1e-4))
    return fields


def test_velocity_damping_on_exponential_sequence():
    # v(t) = v0 exp(-r t) sampled at the endpoints of a horizon dt gives
    # the secant slope: relative rate -2 tanh(r dt / 2) / dt, not -r itself
    rate, dt = 0.05, 4.0
    times = [0.0, 2.0, 4.0]
    est = velocity_damping_estimate(_decaying_sequence(rate, times), times,
                                    horizon=dt)
    expected = -2.0 * math.tanh(rate * dt / 2.0) / dt
    assert_allclose(est.relative_rate, expected, rtol=1e-3)
    assert est.t_start == 0.0 and est.t_end == 4.0
    assert est.fit_start.converged and est.fit_end.converged
    assert est.v_start > est.v_end > 0


def test_velocity_damping_snapshot_gates():
    times = [0.0, 2.0, 4.0]
    fields = _decaying_sequence(0.05, times)
    with pytest.raises(ValueError, match="5%"):
        velocity_damping_estimate(fields, times, horizon=3.0)
    with pytest.raises(ValueError, match="horizon too short"):
        velocity_damping_estimate(fields, times, horizon=0.0)
    with pytest.raises(ValueError, match="matching times"):
        velocity_damping_estimate(fields[:2], times, horizon=4.0)


def test_velocity_damping_rejects_broken_endpoint():
    times = [0.0, 4.0]
    fields = _decaying_sequence(0.05, times)
    a = make_soliton_field(
        SolitonCoords(psi=1.0, x0=60.0, v=0.0, w=5.0, d=0.0, phi=0.0),
        200.0, 2000, containment_tol=1e-4)
    b = make_soliton_field(
        SolitonCoords(psi=1.0, x0=140.0, v=0.0, w=5.0, d=0.0, phi=0.0),
        200.0, 2000, containment_tol=1e-4)
    broken = [fields[0], FieldState(a.psi + b.psi, 200.0)]
    with pytest.raises(ValueError, match="single soliton"):
        velocity_damping_estimate(broken, times, horizon=4.0)


def test_velocity_damping_needs_nonzero_velocity():
    # a resting soliton on an open grid is exactly real, so the
    # central-difference momentum vanishes identically
    still = make_soliton_field(
        SolitonCoords(psi=0.8, x0=100.0, v=0.0, w=4.0, d=0.0, phi=0.0),
        200.0, 2001, OPEN, containment_tol=1e-4)
    with pytest.raises(ValueError, match="vanishes"):
        velocity_damping_estimate([still, still], [0.0, 4.0], horizon=4.0)


def test_envelope_deviation_tracks_a_decaying_oscillation():
    times = np.linspace(0.0, 10.5, 1051)
    ref = 2.0
    values = ref * (1.0 + 0.1 * np.exp(-times / 5.0) * np.cos(np.pi * times))
    series = envelope_deviation(times, values, ref, window_length=2.0)
    assert len(series.times) == 5           # trailing half-window dropped
    assert_allclose(series.times, [1.0, 3.0, 5.0, 7.0, 9.0], rtol=1e-12)
    # each window starts where |cos| = 1, so the maxima are the envelope
    assert_allclose(series.max_deviation,
                    0.1 * np.exp(-np.arange(0, 10, 2) / 5.0), rtol=1e-12)
    assert np.all(np.diff(series.max_deviation) < 0)


def test_envelope_deviation_validation():
    t = np.linspace(0.0, 4.0, 41)
    v = np.ones_like(t)
    with pytest.raises(ValueError, match="matching"):
        envelope_deviation(t, v[:-1], 1.0, 1.0)
    with pytest.raises(ValueError, match="reference"):
        envelope_deviation(t, v, 0.0, 1.0)
    with pytest.raises(ValueError, match="window_length"):
        envelope_deviation(t, v, 1.0, -1.0)
    with pytest.raises(ValueError, match="shorter"):
        envelope_deviation(t, v, 1.0, 8.0)


def test_compare_profiles_resamples_fine_onto_coarse():
    x_coarse = np.linspace(0.0, 10.0, 11)
    x_fine = np.linspace(0.0, 10.0, 101)
    same = compare_profiles(x_coarse, x_coarse, x_fine, x_fine)
    assert same.linf == 0.0 and same.l2 == 0.0
    assert same.peak == 10.0

    bumped = x_coarse.copy()
    bumped[5] += 0.5
    cmp = compare_profiles(x_coarse, bumped, x_fine, x_fine)
    # the linear profile interpolates exactly, so only the bump survives
    assert_allclose(cmp.linf, 0.5, rtol=1e-12)
    assert_allclose(cmp.l2, 0.5 / math.sqrt(11.0), rtol=1e-12)
    assert_allclose(cmp.linf_rel, 0.5 / cmp.peak, rtol=1e-12)
    # argument order must not matter beyond which grid hosts the diff
    flipped = compare_profiles(x_fine, x_fine, x_coarse, bumped)
    assert_allclose(flipped.linf, cmp.linf, rtol=1e-12)


def test_compare_profiles_validation():
    x = np.linspace(0.0, 1.0, 5)
    with pytest.raises(ValueError, match="matching"):
        compare_profiles(x, x[:-1], x, x)
    with pytest.raises(ValueError, match="zero"):
        compare_profiles(x, np.zeros(5), x, np.zeros(5))
