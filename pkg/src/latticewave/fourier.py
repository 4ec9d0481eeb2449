"""Fourier mode-space toolkit for 1-periodic profiles.

A profile ``u(zeta)`` with values in R^d (or C^d) is represented by its
truncated Fourier coefficients ``c[n] = uhat_n`` for ``|n| <= K``, stored as
a complex array of shape ``(2K+1, d)`` with row ``i`` holding mode number
``n = i - K``.  The basis is ``e^{2 pi i n zeta}``, orthonormal in
L^2(0,1), so the discrete pairing below equals the continuum one exactly
for band-limited arguments.

Nonlinear operations go through a dealiased collocation grid of size at
least ``4K+1`` so that up to quartic products of band-limited factors come
back alias-free after truncation.  Shifts and derivatives act diagonally
on modes and are exact.
"""

from __future__ import annotations

import numpy as np
import scipy.fft

__all__ = [
    "mode_numbers",
    "grid_size",
    "grid_points",
    "to_grid",
    "from_grid",
    "eval_modes",
    "shift",
    "dz",
    "mode_mean",
    "inner",
    "norm",
    "hermitify",
    "is_hermitian",
    "grid_map",
    "pack",
    "unpack",
    "pad_modes",
    "truncate_modes",
]


def mode_numbers(K: int) -> np.ndarray:
    """Mode numbers ``[-K, ..., K]`` matching the storage row order."""
    return np.arange(-K, K + 1)


def grid_size(K: int, factor: int = 4) -> int:
    """FFT-friendly collocation size with dealiasing margin ``factor``."""
    return scipy.fft.next_fast_len(factor * K + 1)


def grid_points(M: int) -> np.ndarray:
    return np.arange(M) / M


def to_grid(modes: np.ndarray, M: int) -> np.ndarray:
    """Evaluate modes on the uniform grid ``zeta_m = m/M`` (complex output)."""
    nm = modes.shape[0]
    K = (nm - 1) // 2
    if M < nm:
        raise ValueError(f"grid size {M} too small for {nm} modes")
    spec = np.zeros((M,) + modes.shape[1:], dtype=complex)
    spec[: K + 1] = modes[K:]            # n = 0..K
    spec[M - K:] = modes[:K]             # n = -K..-1
    return scipy.fft.ifft(spec, axis=0) * M


def from_grid(values: np.ndarray, K: int) -> np.ndarray:
    """Truncated Fourier coefficients of grid samples (inverse of to_grid)."""
    M = values.shape[0]
    spec = scipy.fft.fft(values, axis=0) / M
    out = np.empty((2 * K + 1,) + values.shape[1:], dtype=complex)
    out[K:] = spec[: K + 1]
    out[:K] = spec[M - K:]
    return out


def eval_modes(modes: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """Exact evaluation at arbitrary points; output shape zeta.shape + tail."""
    zeta = np.asarray(zeta, dtype=float)
    K = (modes.shape[0] - 1) // 2
    phases = np.exp(2j * np.pi * np.multiply.outer(zeta, mode_numbers(K)))
    return np.tensordot(phases, modes, axes=(-1, 0))


def shift(modes: np.ndarray, s: float) -> np.ndarray:
    """Modes of ``u(. + s)``: diagonal phase twist, exact."""
    K = (modes.shape[0] - 1) // 2
    ph = np.exp(2j * np.pi * mode_numbers(K) * s)
    return modes * ph.reshape((-1,) + (1,) * (modes.ndim - 1))


def dz(modes: np.ndarray) -> np.ndarray:
    """Modes of ``u'``."""
    K = (modes.shape[0] - 1) // 2
    fac = 2j * np.pi * mode_numbers(K)
    return modes * fac.reshape((-1,) + (1,) * (modes.ndim - 1))


def mode_mean(modes: np.ndarray) -> np.ndarray:
    """Zero mode, i.e. the profile average over one period."""
    K = (modes.shape[0] - 1) // 2
    return modes[K]


def inner(w: np.ndarray, v: np.ndarray) -> complex:
    """L^2(0,1) pairing ``int conj(w) . v`` via Parseval."""
    return complex(np.vdot(w, v))


def norm(modes: np.ndarray) -> float:
    return float(np.linalg.norm(modes))


def hermitify(modes: np.ndarray) -> np.ndarray:
    """Project onto real-valued profiles: ``c[-n] = conj(c[n])``."""
    return 0.5 * (modes + np.conj(modes[::-1]))


def is_hermitian(modes: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(modes - np.conj(modes[::-1]))) <= tol * (1 + np.max(np.abs(modes))))


def grid_map(fn, modes: np.ndarray, K_out: int | None = None, M: int | None = None) -> np.ndarray:
    """Apply a pointwise map on the dealiased grid and re-truncate.

    ``fn`` receives real grid values of shape ``(M, d)`` and may return any
    trailing shape; ``modes`` must represent a real profile.
    """
    K = (modes.shape[0] - 1) // 2
    if K_out is None:
        K_out = K
    if M is None:
        M = grid_size(K)
    vals = to_grid(modes, M)
    out = fn(vals.real)
    return from_grid(np.asarray(out, dtype=complex), K_out)


def pack(modes: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian mode array.

    Layout per component: ``[c0.real, c1.real, c1.imag, ..., cK.real,
    cK.imag]``; components are interleaved last so the vector is the
    flattened ``(2K+1, d)`` real coefficient table.
    """
    K = (modes.shape[0] - 1) // 2
    d = modes.shape[1]
    out = np.empty((2 * K + 1, d))
    out[0] = modes[K].real
    out[1::2] = modes[K + 1:].real
    out[2::2] = modes[K + 1:].imag
    return out.ravel()


def unpack(vec: np.ndarray, K: int, d: int) -> np.ndarray:
    """Inverse of :func:`pack`."""
    tab = vec.reshape(2 * K + 1, d)
    modes = np.empty((2 * K + 1, d), dtype=complex)
    modes[K] = tab[0]
    pos = tab[1::2] + 1j * tab[2::2]
    modes[K + 1:] = pos
    modes[:K] = np.conj(pos[::-1])
    return modes


def pad_modes(modes: np.ndarray, K_new: int) -> np.ndarray:
    K = (modes.shape[0] - 1) // 2
    if K_new < K:
        raise ValueError("pad_modes cannot shrink; use truncate_modes")
    out = np.zeros((2 * K_new + 1,) + modes.shape[1:], dtype=complex)
    out[K_new - K: K_new + K + 1] = modes
    return out


def truncate_modes(modes: np.ndarray, K_new: int) -> np.ndarray:
    K = (modes.shape[0] - 1) // 2
    if K_new > K:
        return pad_modes(modes, K_new)
    return modes[K - K_new: K + K_new + 1].copy()
