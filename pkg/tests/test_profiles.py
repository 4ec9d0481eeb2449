"""Newton solves, pin constraints, and family continuation."""

from fractions import Fraction

import numpy as np
import pytest

from oracles import lo_closed

from latticewave import fourier
from latticewave.errors import IrrationalWavenumber, NoConvergence, StepUnderflow
from latticewave.models import lambda_omega_seed, make_system
from latticewave.profiles import (
    as_rational,
    continue_family,
    residual_sup_norm,
    solve_wave,
)


def test_as_rational_forms():
    assert as_rational((1, 6)) == (1, 6)
    assert as_rational(Fraction(2, 12)) == (1, 6)
    assert as_rational("3/18") == (1, 6)
    assert as_rational(1) == (1, 1)
    assert as_rational(-0.25) == (-1, 4)  # dyadic floats are exact


def test_as_rational_rejects_bad_input():
    with pytest.raises(IrrationalWavenumber):
        as_rational(1 / 3)  # not dyadic
    with pytest.raises(IrrationalWavenumber):
        as_rational(0)
    with pytest.raises(IrrationalWavenumber):
        as_rational("0/5")
    with pytest.raises(IrrationalWavenumber):
        as_rational(object())


@pytest.mark.parametrize(
    "wave_name,tol", [("wave_rd16", 1e-12), ("wave_mx", 1e-10), ("wave_qc", 1e-10)]
)
def test_solved_residuals(request, wave_name, tol):
    wave = request.getfixturevalue(wave_name)
    assert wave.residual_sup <= tol
    assert abs(wave.slack) < 1e-9


def test_lambda_omega_frequency_closed_form(sys_rd, wave_rd18):
    ref = lo_closed(1 / 8, 0.5, 1.0, -1.0)
    assert wave_rd18.omega == pytest.approx(ref["omega"], abs=1e-12)


def test_frozen_frequencies(wave_mx, wave_qc):
    # regression anchors for the shipped reference waves
    assert wave_mx.omega == pytest.approx(-0.07665753346308016, abs=1e-9)
    assert wave_qc.omega == pytest.approx(0.30008268674593047, abs=1e-9)
    assert wave_qc.energy == pytest.approx(0.16119789815766736, abs=1e-9)


def test_pins_honored(wave_mx, wave_qc):
    # amplitude pin fixes Re of the first harmonic of the pinned component
    assert wave_mx.modes[wave_mx.K + 1, 1].real == pytest.approx(0.1, abs=1e-12)
    assert abs(wave_mx.modes[wave_mx.K + 1, 1].imag) < 1e-12
    assert wave_qc.modes[wave_qc.K + 1, 0].real == pytest.approx(0.175, abs=1e-12)
    # mass pin fixes the profile mean of the conserved component
    mean = fourier.mode_mean(wave_qc.modes)[0]
    assert mean.real == pytest.approx(0.4, abs=1e-12)


def test_residual_recomputes_independently(sys_rd, wave_rd16):
    r = residual_sup_norm(sys_rd, wave_rd16.modes, wave_rd16.k, wave_rd16.omega)
    assert r <= 2e-12


def test_mode_refinement_stable(sys_qc, wave_qc):
    # padding the converged profile and re-solving must not move omega
    from latticewave.models import chain_seed

    seed, om0, mass = chain_seed(sys_qc, 1, 5, 40, 0.4, 0.35)
    w2 = solve_wave(sys_qc, (1, 5), seed=seed, omega_seed=om0, mass=mass, amplitude=0.35)
    assert abs(w2.omega - wave_qc.omega) < 1e-11


def test_wave_profile_properties(wave_rd16):
    assert wave_rd16.require_rational() == (1, 6)
    assert wave_rd16.d == 2
    assert wave_rd16.speed == pytest.approx(-wave_rd16.omega / wave_rd16.k)
    g = wave_rd16.on_grid()
    assert g.ndim == 2 and g.shape[1] == 2
    du = wave_rd16.uprime()
    assert du.shape == wave_rd16.modes.shape


def test_irrational_wavenumber_path(sys_rd):
    seed, om0 = lambda_omega_seed(sys_rd, 1, 6, 12)
    k = 0.17
    w = solve_wave(sys_rd, k, seed=seed, omega_seed=om0, allow_irrational=True)
    assert w.p is None
    ref = lo_closed(k, 0.5, 1.0, -1.0)
    assert w.omega == pytest.approx(ref["omega"], abs=1e-10)
    with pytest.raises(IrrationalWavenumber):
        w.require_rational()


def test_solve_requires_allow_flag_for_floats(sys_rd):
    seed, om0 = lambda_omega_seed(sys_rd, 1, 6, 12)
    with pytest.raises(IrrationalWavenumber):
        solve_wave(sys_rd, 0.17, seed=seed, omega_seed=om0)


def test_no_convergence_reports_iterations(sys_rd):
    seed, om0 = lambda_omega_seed(sys_rd, 1, 6, 12)
    with pytest.raises(NoConvergence):
        solve_wave(sys_rd, (1, 6), seed=10.0 * seed, omega_seed=om0, max_iter=1)


def test_continue_in_wavenumber(sys_rd, wave_rd16):
    fam = continue_family(sys_rd, wave_rd16, "k", [Fraction(1, 7), Fraction(1, 8)])
    assert [w.require_rational() for w in fam] == [(1, 7), (1, 8)]
    for w in fam:
        ref = lo_closed(w.k, 0.5, 1.0, -1.0)
        assert w.omega == pytest.approx(ref["omega"], abs=1e-10)


def test_continue_in_mass_bisects(sys_qc, wave_qc):
    fam = continue_family(sys_qc, wave_qc, "M0", [0.42, 0.45])
    assert fam[-1].mass[0] == pytest.approx(0.45)
    assert fam[-1].residual_sup <= 1e-9


def test_continue_unknown_parameter(sys_rd, wave_rd16):
    with pytest.raises(KeyError, match="continuation parameter"):
        continue_family(sys_rd, wave_rd16, "Q", [1.0])


def test_continuation_failure_carries_partial(sys_rd, wave_rd16):
    # r^2 = 1 - 2 mu (1 - cos 2 pi k) < 0 at k = 1/2: no wave exists there
    with pytest.raises(StepUnderflow) as ei:
        continue_family(sys_rd, wave_rd16, "k", [Fraction(1, 5), Fraction(1, 2)])
    partial = ei.value.diagnostics["partial"]
    assert [w.require_rational() for w in partial] == [(1, 5)]
