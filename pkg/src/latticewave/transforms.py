"""Discrete Bloch transform on rings commensurate with the wave period.

For a ring of ``L = N P`` sites, states split into ``P`` Bloch fibers
indexed by exponents ``xi_m = 2 pi m / L`` in the reduced zone
``[-pi/N, pi/N)``; each fiber carries an ``N``-site block.  The forward
transform is

    fhat(j, xi_m) = sum_kappa e^{-i (kappa N + j) xi_m} f_{kappa N + j},

and the inverse restores ``f`` with a ``1/P`` factor.  Parseval holds in
the form ``sum |fhat|^2 = P sum |f|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["BlochSample", "dbt", "idbt", "bloch_exponents"]


@dataclass
class BlochSample:
    """Fiberwise data: values[j, m] is site j of the fiber at xis[m]."""

    values: np.ndarray  # (N, P, d)
    xis: np.ndarray     # (P,)
    N: int
    P: int


def bloch_exponents(N: int, P: int) -> np.ndarray:
    ms = np.arange(-(P // 2), P - P // 2)
    return 2 * np.pi * ms / (N * P)


def _phases(N: int, P: int) -> np.ndarray:
    xis = bloch_exponents(N, P)
    kappa = np.arange(P)
    j = np.arange(N)
    sites = kappa[:, None] * N + j[None, :]
    return np.exp(-1j * xis[:, None, None] * sites[None, :, :])


def dbt(f: np.ndarray, N: int) -> BlochSample:
    """Forward transform of a ring state ``f`` of shape (L, d) or (L,)."""
    squeeze = f.ndim == 1
    if squeeze:
        f = f[:, None]
    L, d = f.shape
    if L % N:
        raise ValueError(f"ring length {L} not a multiple of the period {N}")
    P = L // N
    ph = _phases(N, P)
    vals = np.einsum("mkj,kjd->jmd", ph, f.reshape(P, N, d).astype(complex))
    return BlochSample(values=vals, xis=bloch_exponents(N, P), N=N, P=P)


def idbt(sample: BlochSample) -> np.ndarray:
    """Inverse transform back to a ring state of shape (L, d)."""
    N, P = sample.N, sample.P
    ph = _phases(N, P)
    f3 = np.einsum("mkj,jmd->kjd", np.conj(ph), sample.values) / P
    return f3.reshape(N * P, -1)
