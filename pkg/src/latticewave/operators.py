"""Finite-range shift polynomials over the lattice shift T.

A shift polynomial is ``P = sum_p a_p T^p`` with matrix coefficients
``a_p`` in C^{d x d} and finitely many integer offsets ``p``; ``(T U)_j =
U_{j+1}``.  The same object acts in three guises:

* on ring states ``U`` of shape ``(L, d)`` (periodic index),
* on 1-periodic profiles through ``T -> T_k`` (shift by the rational
  wavenumber ``k``), diagonal on Fourier modes,
* as a Bloch symbol ``P(xi) = sum_p a_p e^{i p xi} T^p`` acting sitewise
  on one period's worth of sites.

First and second Bloch moments ``P1 = sum p a_p T^p`` and ``P2 = sum
(p^2/2) a_p T^p`` feed the long-wavelength expansion of the linearization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fourier

__all__ = ["ShiftPolynomial", "identity_poly", "shift_poly", "difference"]


@dataclass(frozen=True)
class ShiftPolynomial:
    """Immutable ``sum_p a_p T^p``; ``terms`` maps offset -> (d, d) array."""

    d: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for p, a in self.terms.items():
            a = np.asarray(a, dtype=complex)
            if a.shape != (self.d, self.d):
                raise ValueError(f"coefficient at offset {p} has shape {a.shape}")
            if np.any(a != 0):
                clean[int(p)] = a
        object.__setattr__(self, "terms", clean)

    # -- algebra ---------------------------------------------------------

    def __add__(self, other: "ShiftPolynomial") -> "ShiftPolynomial":
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        terms = {p: a.copy() for p, a in self.terms.items()}
        for p, a in other.terms.items():
            terms[p] = terms.get(p, 0) + a
        return ShiftPolynomial(self.d, terms)

    def __rmul__(self, scalar) -> "ShiftPolynomial":
        return ShiftPolynomial(self.d, {p: scalar * a for p, a in self.terms.items()})

    def __matmul__(self, other: "ShiftPolynomial") -> "ShiftPolynomial":
        """Operator composition: offsets add, coefficients multiply.

        ``(a_p T^p)(b_q T^q) = a_p b_q T^{p+q}`` since coefficients are
        constant (site-independent) matrices.
        """
        terms: dict = {}
        for p, a in self.terms.items():
            for q, b in other.terms.items():
                terms[p + q] = terms.get(p + q, 0) + a @ b
        return ShiftPolynomial(self.d, terms)

    # -- actions ---------------------------------------------------------

    def apply_ring(self, U: np.ndarray) -> np.ndarray:
        """Act on a ring state of shape (L, d) with periodic wrap."""
        out = np.zeros(U.shape, dtype=np.result_type(U.dtype, complex))
        for p, a in self.terms.items():
            out += np.roll(U, -p, axis=0) @ a.T
        if np.isrealobj(U) and all(np.max(np.abs(a.imag)) == 0 for a in self.terms.values()):
            return out.real
        return out

    def apply_profile(self, modes: np.ndarray, k: float) -> np.ndarray:
        """Act on profile modes with ``T -> shift by k``."""
        out = np.zeros_like(modes)
        for p, a in self.terms.items():
            out += fourier.shift(modes, p * k) @ a.T
        return out

    def profile_matrix(self, K: int, k: float) -> np.ndarray:
        """Dense matrix on flattened modes (row-major ``(2K+1, d)``)."""
        n = fourier.mode_numbers(K)
        dim = (2 * K + 1) * self.d
        M = np.zeros((dim, dim), dtype=complex)
        for p, a in self.terms.items():
            ph = np.exp(2j * np.pi * n * p * k)
            M += np.kron(np.diag(ph), a)
        return M

    def symbol(self, xi: float, N: int) -> np.ndarray:
        """Bloch symbol on one period of ``N`` sites, shape (N d, N d).

        The twist uses the unreduced offset, so ``symbol(xi + 2 pi)``
        equals ``symbol(xi)`` exactly.
        """
        dim = N * self.d
        M = np.zeros((dim, dim), dtype=complex)
        eye = np.eye(N)
        for p, a in self.terms.items():
            M += np.exp(1j * p * xi) * np.kron(np.roll(eye, p, axis=1), a)
        return M

    # -- Bloch moments ----------------------------------------------------

    def moment(self, order: int) -> "ShiftPolynomial":
        """``sum_p (p^order / order!) a_p T^p`` (order 0 returns self)."""
        fac = {0: 1.0, 1: 1.0, 2: 0.5}[order]
        return ShiftPolynomial(
            self.d, {p: fac * p ** order * a for p, a in self.terms.items()}
        )

    # -- structure checks --------------------------------------------------

    def coefficient_sum(self) -> np.ndarray:
        out = np.zeros((self.d, self.d), dtype=complex)
        for a in self.terms.values():
            out += a
        return out

    def annihilates_constants(self, tol: float = 1e-14) -> bool:
        """True when ``P`` kills site-independent states (sum a_p = 0)."""
        return bool(np.max(np.abs(self.coefficient_sum()), initial=0.0) <= tol)

    def range(self) -> int:
        return max((abs(p) for p in self.terms), default=0)


def identity_poly(d: int) -> ShiftPolynomial:
    return ShiftPolynomial(d, {0: np.eye(d)})


def shift_poly(p: int, d: int, coeff=None) -> ShiftPolynomial:
    """``coeff * T^p`` (coeff defaults to the identity)."""
    a = np.eye(d) if coeff is None else np.asarray(coeff, dtype=complex)
    if a.ndim == 0:
        a = a * np.eye(d)
    return ShiftPolynomial(d, {p: a})


def difference(d: int, eta: float, kind: str) -> ShiftPolynomial:
    """Standard difference stencils scaled by ``eta``.

    kind: 'forward' eta (T - I), 'backward' eta (I - T^{-1}),
    'centered' (eta/2) (T - T^{-1}), 'forward_adj' eta (T^{-1} - I),
    'laplace' eta (T - 2 I + T^{-1}).
    """
    I = np.eye(d)
    stencils = {
        "forward": {1: eta * I, 0: -eta * I},
        "backward": {0: eta * I, -1: -eta * I},
        "centered": {1: 0.5 * eta * I, -1: -0.5 * eta * I},
        "forward_adj": {-1: eta * I, 0: -eta * I},
        "laplace": {1: eta * I, 0: -2 * eta * I, -1: eta * I},
    }
    return ShiftPolynomial(d, stencils[kind])
