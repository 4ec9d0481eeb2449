"""One-period evolution operators against a finite-difference ring oracle.

The oracle in :mod:`oracles` integrates the full ring linearization with
a centered-difference Jacobian action, sharing no code with the symbol
assembly; its multiplier set must equal the union of the fiber spectra
over the commensurate Bloch exponents.
"""

import numpy as np
import pytest

from oracles import match_sets, ring_monodromy_fd

from latticewave.monodromy import monodromy, monodromy_expansion, symbol_generator
from latticewave.transforms import bloch_exponents


def _union_multipliers(sys, wave, P, tol=1e-10):
    _, N = wave.require_rational()
    out = []
    for xi in bloch_exponents(N, P):
        m = monodromy(symbol_generator(sys, wave, xi), tol=tol)
        out.extend(np.linalg.eigvals(m.S))
    return np.array(out)


def test_ring_union_rd(sys_rd_quarter, wave_rd14):
    ring = ring_monodromy_fd(sys_rd_quarter, wave_rd14, 2, tol=1e-9)
    union = _union_multipliers(sys_rd_quarter, wave_rd14, 2)
    assert len(ring) == len(union) == 16
    assert match_sets(union, ring) < 1e-6


def test_ring_union_mixed(sys_mx, wave_mx):
    ring = ring_monodromy_fd(sys_mx, wave_mx, 1, tol=1e-9)
    union = _union_multipliers(sys_mx, wave_mx, 1)
    assert match_sets(union, ring) < 1e-5


def test_ring_union_hamiltonian(sys_qc, wave_qc):
    # cubic nonlinearity raises the finite-difference floor
    ring = ring_monodromy_fd(sys_qc, wave_qc, 1, tol=1e-9)
    union = _union_multipliers(sys_qc, wave_qc, 1)
    assert match_sets(union, ring) < 2e-4


def test_period_convention(sys_mx, wave_mx):
    # integration always runs forward over one period 1/|omega|,
    # also for negative frequencies
    assert wave_mx.omega < 0
    m = monodromy(symbol_generator(sys_mx, wave_mx, 0.0))
    assert m.t0 == 0.0
    assert m.t1 == pytest.approx(1.0 / abs(wave_mx.omega), rel=1e-14)


@pytest.mark.parametrize(
    "sys_name,wave_name", [("sys_rd", "wave_rd16"), ("sys_qc", "wave_qc")]
)
def test_liouville_residual_at_tracking_tolerance(request, sys_name, wave_name):
    sys = request.getfixturevalue(sys_name)
    wave = request.getfixturevalue(wave_name)
    for xi in (0.0, 0.01):
        m = monodromy(symbol_generator(sys, wave, xi), tol=1e-12)
        assert m.liouville_rel_error <= 1e-8


def test_unit_multiplier_at_zero_exponent(sys_rd, wave_rd16):
    m = monodromy(symbol_generator(sys_rd, wave_rd16, 0.0), tol=1e-12)
    ev = np.linalg.eigvals(m.S)
    assert np.min(np.abs(ev - 1.0)) < 1e-12


def test_expansion_matches_finite_differences(sys_rd, wave_rd16):
    # S(xi) = S0 + (i xi) S1 + (i xi)^2 S2 + O(xi^3)
    mono, S1, S2 = monodromy_expansion(sys_rd, wave_rd16, tol=1e-12)
    xi = 1e-3
    Sp = monodromy(symbol_generator(sys_rd, wave_rd16, xi), tol=1e-12).S
    Sm = monodromy(symbol_generator(sys_rd, wave_rd16, -xi), tol=1e-12).S
    e1 = np.linalg.norm((Sp - Sm) / (2 * xi) - 1j * S1) / np.linalg.norm(S1)
    e2 = np.linalg.norm((Sp - 2 * mono.S + Sm) / (xi * xi) + 2 * S2) / np.linalg.norm(S2)
    assert e1 < 1e-4
    assert e2 < 1e-4


def test_symbol_dimensions(sys_mx, wave_mx):
    _, N = wave_mx.require_rational()
    m = monodromy(symbol_generator(sys_mx, wave_mx, 0.3))
    assert m.S.shape == (N * wave_mx.d, N * wave_mx.d)
    assert m.N == N and m.d == wave_mx.d
    assert m.xi == 0.3
