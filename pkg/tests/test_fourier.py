"""Mode arithmetic and the discrete Bloch transform."""

import numpy as np
import pytest

from latticewave import fourier
from latticewave.transforms import bloch_exponents, dbt, idbt


def random_modes(rng, K, d=2):
    raw = rng.standard_normal((2 * K + 1, d)) + 1j * rng.standard_normal((2 * K + 1, d))
    return fourier.hermitify(raw)


def test_grid_round_trip_exact():
    rng = np.random.default_rng(3)
    m = random_modes(rng, 7)
    g = fourier.to_grid(m, fourier.grid_size(7))
    back = fourier.from_grid(g, 7)
    assert np.max(np.abs(back - m)) < 1e-14


def test_eval_modes_matches_grid():
    rng = np.random.default_rng(4)
    m = random_modes(rng, 5)
    M = fourier.grid_size(5)
    z = fourier.grid_points(M)
    direct = fourier.eval_modes(m, z)
    assert np.max(np.abs(direct - fourier.to_grid(m, M))) < 1e-13


def test_hermitian_modes_give_real_grid():
    rng = np.random.default_rng(5)
    m = random_modes(rng, 6)
    assert fourier.is_hermitian(m)
    g = fourier.to_grid(m, 32)
    assert np.max(np.abs(g.imag)) < 1e-14
    # projection is idempotent
    assert np.max(np.abs(fourier.hermitify(m) - m)) < 1e-15


def test_shift_by_one_is_identity():
    rng = np.random.default_rng(6)
    m = random_modes(rng, 4)
    assert np.max(np.abs(fourier.shift(m, 1.0) - m)) < 1e-14


def test_shift_inverts():
    rng = np.random.default_rng(7)
    m = random_modes(rng, 4)
    s = 0.2345
    assert np.max(np.abs(fourier.shift(fourier.shift(m, s), -s) - m)) < 1e-14


def test_shift_evaluates_translated_profile():
    rng = np.random.default_rng(8)
    m = random_modes(rng, 4, d=1)
    s = 1 / 7
    z = np.linspace(0.0, 1.0, 11)
    lhs = fourier.eval_modes(fourier.shift(m, s), z)
    rhs = fourier.eval_modes(m, z + s)
    assert np.max(np.abs(lhs - rhs)) < 1e-13


def test_dz_of_cosine():
    # u = cos(2 pi z): modes at n = +-1 are 1/2
    m = np.zeros((5, 1), dtype=complex)
    n = fourier.mode_numbers(2)
    m[np.where(n == 1)[0][0], 0] = 0.5
    m[np.where(n == -1)[0][0], 0] = 0.5
    z = np.linspace(0, 1, 17)
    du = fourier.eval_modes(fourier.dz(m), z).real.ravel()
    assert np.max(np.abs(du + 2 * np.pi * np.sin(2 * np.pi * z))) < 1e-12


def test_pack_unpack_round_trip():
    rng = np.random.default_rng(9)
    m = random_modes(rng, 5, d=3)
    v = fourier.pack(m)
    assert v.ndim == 1
    back = fourier.unpack(v, 5, 3)
    assert np.array_equal(back, m)


def test_pad_truncate_round_trip():
    rng = np.random.default_rng(10)
    m = random_modes(rng, 4)
    up = fourier.pad_modes(m, 9)
    assert up.shape[0] == 19
    z = np.linspace(0, 1, 13)
    assert np.max(np.abs(fourier.eval_modes(up, z) - fourier.eval_modes(m, z))) < 1e-13
    assert np.array_equal(fourier.truncate_modes(up, 4), m)


def test_norm_matches_grid_mean_square():
    rng = np.random.default_rng(11)
    m = random_modes(rng, 6, d=1)
    g = fourier.to_grid(m, M=64).real.ravel()
    assert fourier.norm(m) == pytest.approx(np.sqrt(np.mean(g**2)), rel=1e-12)


@pytest.mark.parametrize("N", [2, 3, 6])
@pytest.mark.parametrize("P", [4, 8])
def test_dbt_round_trip_and_parseval(N, P):
    rng = np.random.default_rng(100 * N + P)
    for _ in range(10):
        f = rng.standard_normal((N * P, 2))
        s = dbt(f, N)
        back = idbt(s)
        assert np.max(np.abs(back - f)) < 1e-12
        # exact finite Parseval constant P
        lhs = np.sum(np.abs(s.values) ** 2)
        rhs = P * np.sum(f**2)
        assert abs(lhs - rhs) <= 1e-12 * max(rhs, 1.0)


def test_bloch_exponents_zone():
    xis = bloch_exponents(6, 2)
    assert np.allclose(sorted(xis), [-np.pi / 6, 0.0])
    xis = bloch_exponents(3, 4)
    assert np.all(xis >= -np.pi / 3 - 1e-15)
    assert np.all(xis < np.pi / 3)
    assert 0.0 in xis


def test_plane_wave_lands_in_single_fiber():
    N, P = 3, 4
    xis = bloch_exponents(N, P)
    j = np.arange(N * P)
    for m, xi in enumerate(xis):
        f = np.exp(1j * xi * j)[:, None]
        s = dbt(f, N)
        mags = np.max(np.abs(s.values), axis=(0, 2))
        assert mags[m] == pytest.approx(P, rel=1e-13)
        others = np.delete(mags, m)
        assert np.max(others) < 1e-12


def test_dbt_rejects_incommensurate_length():
    with pytest.raises(ValueError):
        dbt(np.zeros((7, 1)), 3)
