"""Profile linearization: kernels, adjoints, and parameter derivatives."""

import numpy as np
import pytest

from oracles import lo_closed

from latticewave import fourier
from latticewave.linearize import (
    adjoint_operator,
    apply_operator,
    assemble_profile_operator,
)


def test_adjoint_identity(sys_rd, wave_rd16):
    L = assemble_profile_operator(sys_rd, wave_rd16.modes, wave_rd16.k, wave_rd16.omega)
    A = adjoint_operator(L)
    rng = np.random.default_rng(21)
    for _ in range(5):
        w = rng.standard_normal(L.shape[0]) + 1j * rng.standard_normal(L.shape[0])
        v = rng.standard_normal(L.shape[0]) + 1j * rng.standard_normal(L.shape[0])
        lhs = np.vdot(A @ w, v)
        rhs = np.vdot(w, L @ v)
        assert abs(lhs - rhs) < 1e-10 * (1 + abs(rhs))


@pytest.mark.parametrize(
    "sys_name,wave_name",
    [("sys_rd", "wave_rd16"), ("sys_mx", "wave_mx"), ("sys_qc", "wave_qc")],
)
def test_profile_operator_annihilates_translation_mode(request, sys_name, wave_name):
    sys = request.getfixturevalue(sys_name)
    wave = request.getfixturevalue(wave_name)
    L = assemble_profile_operator(sys, wave.modes, wave.k, wave.omega)
    r = apply_operator(L, wave.uprime())
    scale = float(np.linalg.norm(L, 2))
    assert float(np.max(np.abs(r))) < 1e-8 * scale


@pytest.mark.parametrize(
    "sys_name,wave_name,wd_name,kdim",
    [
        ("sys_rd", "wave_rd16", "wd_rd16", 1),
        ("sys_mx", "wave_mx", "wd_mx", 1),
        ("sys_qc", "wave_qc", "wd_qc", 2),  # translation plus variational direction
    ],
)
def test_adjoint_vector_biorthogonality(request, sys_name, wave_name, wd_name, kdim):
    wave = request.getfixturevalue(wave_name)
    wd = request.getfixturevalue(wd_name)
    assert fourier.inner(wd.u_ad, wave.uprime()) == pytest.approx(1.0, abs=1e-9)
    for name, du in wd.d_u.items():
        if name == "k":
            continue  # only conserved-parameter directions are projected out
        assert abs(fourier.inner(wd.u_ad, du)) < 1e-9
    assert wd.chain_residual < 1e-8
    assert wd.kernel_dim == kdim


def test_cokernel_constants_annihilate_range(request, sys_mx, wave_mx, wd_mx):
    L = assemble_profile_operator(sys_mx, wave_mx.modes, wave_mx.k, wave_mx.omega)
    A = adjoint_operator(L)
    consts = wd_mx.cokernel["constants"]
    assert len(consts) == 1
    for c in consts:
        r = apply_operator(A, c)
        assert float(np.max(np.abs(r))) < 1e-10 * np.linalg.norm(L, 2)


def test_rd_frequency_derivative_is_group_velocity(wd_rd16):
    ref = lo_closed(1 / 6, 0.5, 1.0, -1.0)
    assert wd_rd16.d_omega["k"] == pytest.approx(ref["group_velocity"], abs=1e-9)


def test_mixed_frequency_derivatives_frozen(wd_mx):
    # regression anchors; computed from the bordered solve at first build
    assert wd_mx.d_omega["k"] == pytest.approx(-0.43558123952965194, abs=1e-8)
    assert wd_mx.d_omega["M0"] == pytest.approx(0.1404445985479509, abs=1e-8)


def test_parameter_derivative_matches_continuation(sys_qc, wave_qc, wd_qc):
    # d omega / d M0 against a centered continuation step
    from latticewave.profiles import continue_family

    h = 2e-4
    up = continue_family(sys_qc, wave_qc, "M0", [0.4 + h])[0]
    dn = continue_family(sys_qc, wave_qc, "M0", [0.4 - h])[0]
    fd = (up.omega - dn.omega) / (2 * h)
    assert wd_qc.d_omega["M0"] == pytest.approx(fd, abs=5e-7)


def test_profile_derivative_matches_continuation(sys_qc, wave_qc, wd_qc):
    from latticewave.profiles import continue_family

    h = 2e-4
    up = continue_family(sys_qc, wave_qc, "M0", [0.4 + h])[0]
    dn = continue_family(sys_qc, wave_qc, "M0", [0.4 - h])[0]
    fd = (up.modes - dn.modes) / (2 * h)
    err = np.max(np.abs(fd - wd_qc.d_u["M0"]))
    assert err < 1e-5
