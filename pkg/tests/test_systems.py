"""Model factories and ring vector fields against independent closed forms."""

import numpy as np
import pytest

from oracles import chain_omega, lo_closed

from latticewave import fourier
from latticewave.models import (
    hopf_point,
    lambda_omega_closed_form,
    make_system,
)
from latticewave.systems import (
    conserved_components,
    energy_density_flux_ring,
    rhs_ring,
    system_dim,
    variational_derivative_ring,
    wave_parameters,
)


@pytest.mark.parametrize("k", [1 / 8, 1 / 6, 1 / 5, 1 / 4])
def test_lambda_omega_closed_form_matches_oracle(k):
    got = lambda_omega_closed_form(k, 0.5, 1.0, -1.0)
    ref = lo_closed(k, 0.5, 1.0, -1.0)
    assert got["r2"] == pytest.approx(ref["r2"], abs=1e-14)
    assert got["omega"] == pytest.approx(ref["omega"], abs=1e-14)
    assert got["dk_omega"] == pytest.approx(ref["group_velocity"], abs=1e-14)
    assert got["d"] == pytest.approx(ref["diffusion"], abs=1e-13)


def test_system_metadata():
    rd = make_system("lambda_omega")
    mx = make_system("viscous_balance")
    qc = make_system("quartic_chain")
    assert (system_dim(rd), system_dim(mx), system_dim(qc)) == (2, 2, 1)
    assert conserved_components(rd) == []
    assert conserved_components(mx) == [0]
    assert conserved_components(qc) == [0]
    assert wave_parameters(rd) == ["k"]
    assert wave_parameters(mx) == ["k", "M0"]
    assert wave_parameters(qc) == ["k", "M0", "E"]


def test_unknown_model_and_parameter_rejected():
    with pytest.raises(KeyError, match="known:"):
        make_system("nope")
    with pytest.raises(KeyError, match="bogus"):
        make_system("lambda_omega", bogus=1.0)


def test_zero_state_is_equilibrium(sys_rd, sys_qc):
    # both nonlinearities vanish at the origin; the field must be exactly 0
    for sys in (sys_rd, sys_qc):
        z = np.zeros((8, system_dim(sys)))
        assert np.max(np.abs(rhs_ring(sys, z))) == 0.0


@pytest.mark.parametrize(
    "wave_name", ["wave_rd16", "wave_mx", "wave_qc"]
)
def test_ring_field_advances_exact_wave(request, wave_name):
    # d/dt U_j(t) = omega u'(k j + omega t) for the traveling-wave ansatz
    sysname = {"wave_rd16": "sys_rd", "wave_mx": "sys_mx", "wave_qc": "sys_qc"}
    sys = request.getfixturevalue(sysname[wave_name])
    wave = request.getfixturevalue(wave_name)
    _, N = wave.require_rational()
    j = np.arange(2 * N)
    for t in (0.0, 0.37):
        z = wave.k * j + wave.omega * t
        U = fourier.eval_modes(wave.modes, z).real
        dU = wave.omega * fourier.eval_modes(wave.uprime(), z).real
        err = np.max(np.abs(rhs_ring(sys, U) - dU))
        assert err < 1e-8


def test_mixed_first_component_sum_is_invariant(sys_mx, wave_mx):
    # dR/dt = -eta (T - I) f_r telescopes around the ring
    _, N = wave_mx.require_rational()
    U = fourier.eval_modes(wave_mx.modes, wave_mx.k * np.arange(3 * N)).real
    dU = rhs_ring(sys_mx, U)
    assert abs(np.sum(dU[:, 0])) < 1e-13


def test_hamiltonian_field_is_energy_orthogonal(sys_qc):
    # <delta H, D B delta H> = 0 by antisymmetry of the difference operator
    rng = np.random.default_rng(12)
    U = 0.4 + 0.3 * rng.standard_normal((12, 1))
    vd = variational_derivative_ring(sys_qc, U)
    assert abs(float(np.sum(vd * rhs_ring(sys_qc, U)))) < 1e-12


def test_variational_derivative_closed_form():
    # quartic chain: delta H / delta u_j = 2 a2 u + 4 a4 u^3 - eta^2 (Delta u)_j
    eta, a2, a4 = 0.8, 0.5, 0.25
    sys = make_system("quartic_chain", eta=eta, a2=a2, a4=a4)
    rng = np.random.default_rng(13)
    u = rng.standard_normal(10)
    lap = np.roll(u, -1) - 2 * u + np.roll(u, 1)
    ref = 2 * a2 * u + 4 * a4 * u**3 - eta * eta * lap
    got = variational_derivative_ring(sys, u[:, None]).ravel()
    assert np.max(np.abs(got - ref)) < 1e-13


def test_variational_derivative_is_gradient_of_density_sum(sys_qc):
    rng = np.random.default_rng(14)
    U = 0.4 + 0.3 * rng.standard_normal((9, 1))
    V = rng.standard_normal(U.shape)
    h = 1e-6

    def H(W):
        dens, _ = energy_density_flux_ring(sys_qc, W)
        return float(np.sum(dens))

    fd = (H(U + h * V) - H(U - h * V)) / (2 * h)
    vd = float(np.sum(variational_derivative_ring(sys_qc, U) * V))
    assert fd == pytest.approx(vd, rel=1e-7, abs=1e-9)


def test_energy_flux_telescopes(sys_qc):
    # instantaneous total-energy derivative is a pure telescoping sum
    rng = np.random.default_rng(15)
    U = 0.4 + 0.3 * rng.standard_normal((9, 1))
    _, flux = energy_density_flux_ring(sys_qc, U)
    assert abs(float(np.sum(np.roll(flux, -1) - flux))) < 1e-14


def test_hopf_point_frozen():
    om, slope, vec = hopf_point(1.0, 0.5, 1 / 6)
    assert om == pytest.approx(1.3877551020408134, abs=1e-9)
    assert slope == pytest.approx(-0.07876127077454177, abs=1e-9)
    assert vec.shape == (2,)


def test_chain_linear_frequency_matches_oracle(sys_qc):
    # linearization about the mean m has stiffness 2 a2 + 12 a4 m^2
    from latticewave.models import chain_seed

    eta, a2, a4, m = 0.8, 0.5, 0.25, 0.4
    _, om0, mass = chain_seed(sys_qc, 1, 5, 16, m, 0.35)
    a2_eff = a2 + 6 * a4 * m * m
    assert om0 == pytest.approx(chain_omega(1 / 5, eta, a2_eff), abs=1e-13)
    assert mass == pytest.approx([m])
