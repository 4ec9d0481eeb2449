"""Critical-cluster tracking and the contour-integral reduced block."""

import numpy as np
import pytest

from oracles import lo_closed

from latticewave.branches import (
    BranchCountMismatch,
    auto_eps0,
    riesz_block,
    track_branches,
)


def test_rd_single_branch_tracks_group_velocity(sys_rd, wave_rd16):
    xis = [0.002, -0.002, 0.004, -0.004]
    tr = track_branches(sys_rd, wave_rd16, xis, tol=1e-12)
    assert tr.n_cluster == 1
    assert len(tr.branches) == 2  # one per exponent sign
    assert {b.side for b in tr.branches} == {+1, -1}
    assert tr.liouville_max <= 1e-8
    ref = lo_closed(1 / 6, 0.5, 1.0, -1.0)
    for b in tr.branches:
        v = b.velocities(wave_rd16.omega)
        # Re v -> group velocity, Im v -> -d xi at first order
        assert np.max(np.abs(v.real - ref["group_velocity"])) < 1e-4
        expected_im = -ref["diffusion"] * np.asarray(b.xis)
        assert np.max(np.abs(v.imag - expected_im)) < 1e-4


def test_labels_stable_under_velocity_continuity(sys_mx, wave_mx, wd_mx):
    xis = [0.001, 0.002, 0.003]
    tr = track_branches(sys_mx, wave_mx, xis, wd=wd_mx, tol=1e-12)
    assert tr.n_cluster == 2
    plus = [b for b in tr.branches if b.side == +1]
    assert sorted(b.label for b in plus) == [0, 1]
    for b in plus:
        assert list(b.xis) == xis
        v = b.velocities(wave_mx.omega)
        # each labeled branch stays on one smooth velocity curve
        assert np.max(np.abs(np.diff(v))) < 0.05


def test_hamiltonian_cluster_count(sys_qc, wave_qc, wd_qc):
    tr = track_branches(sys_qc, wave_qc, [0.004, -0.004], wd=wd_qc, tol=1e-12)
    assert tr.n_cluster == 3
    assert len([b for b in tr.branches if b.side == +1]) == 3


def test_riesz_block_rd(sys_rd, wave_rd16):
    rb = riesz_block(sys_rd, wave_rd16, 1e-3, tol=1e-12)
    assert rb.Omega.shape == (1, 1)
    assert abs(rb.projector_trace - 1.0) < 1e-10
    m = rb.basis.shape[1]
    biorth = np.max(np.abs(rb.duals.conj().T @ rb.basis - np.eye(m)))
    assert biorth < 1e-12
    # reduced block over (i xi) approaches group velocity / |omega|
    ref = lo_closed(1 / 6, 0.5, 1.0, -1.0)
    target = ref["group_velocity"] / abs(wave_rd16.omega)
    assert rb.Omega_tilde[0, 0].real == pytest.approx(target, rel=1e-3)


def test_riesz_block_contour_count_guard(sys_rd, wave_rd16):
    with pytest.raises(BranchCountMismatch):
        riesz_block(sys_rd, wave_rd16, 1e-3, eps0=2.5, tol=1e-10)
    with pytest.raises(BranchCountMismatch):
        riesz_block(sys_rd, wave_rd16, 1e-3, eps0=1e-14, tol=1e-10)


def test_auto_eps0_separates_cluster():
    lams = np.array([1.0 + 0j, 1.0 + 2e-9j, 0.3 + 0j, -0.5 + 0j])
    eps = auto_eps0(lams, 2)
    assert 2e-9 < eps < 0.7
    lams1 = np.array([1.0 + 0j, 0.3 + 0j])
    assert 0.0 < auto_eps0(lams1, 1) < 0.7


def test_parallel_tracking_matches_serial(sys_rd, wave_rd16):
    xis = [0.002, -0.002, 0.004, -0.004]
    t1 = track_branches(sys_rd, wave_rd16, xis, tol=1e-12, jobs=1)
    t2 = track_branches(sys_rd, wave_rd16, xis, tol=1e-12, jobs=2)
    for b1, b2 in zip(t1.branches, t2.branches):
        assert b1.label == b2.label and b1.side == b2.side
        assert np.array_equal(b1.multipliers, b2.multipliers)
