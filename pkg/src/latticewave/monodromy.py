"""Time-periodic Bloch symbols and their monodromy operators.

Linearizing a lattice system about a wavetrain and conjugating by the
discrete Bloch wave ``e^{i xi j}`` yields, for each exponent ``xi``, a
time-periodic linear system on one period of ``N`` sites,

    dV/dt = A_xi(t) V,      A_xi(t) = sum_terms C_left(xi) M(t) C_right(xi),

where the shift-polynomial symbols carry the ``e^{i p xi}`` twists and the
multiplier blocks sample the wave's coefficient frame at ``k j + omega t``.
The monodromy ``S_xi`` integrates this forward over one temporal period
``1/|omega|``.  Forward is the stable direction for the dissipative
classes, whose backward flow amplifies at e^{+|spectrum| t}; identities
downstream therefore carry ``|omega|`` where the expansion exponent
appears.

Every integration records a Liouville determinant audit
``det S = exp(int tr A)`` as a relative error; the expansion routine
integrates the block-triangular augmented system for the first- and
second-order xi-derivative blocks ``S^(1)``, ``S^(2)`` alongside ``S_0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import fourier
from .errors import NonFiniteState, StepUnderflow
from .systems import linearization_terms

__all__ = [
    "SymbolGenerator",
    "symbol_generator",
    "BlochMonodromy",
    "monodromy",
    "monodromy_expansion",
]


class SymbolGenerator:
    """Callable ``t -> A_xi(t)``; precomputes the static symbol factors."""

    def __init__(self, sys, wave, xi: float, n_sites: Optional[int] = None,
                 moment: Optional[int] = None):
        p, N = wave.require_rational()
        if n_sites is None:
            n_sites = N
        if n_sites % N:
            raise ValueError("site count must be a multiple of the period")
        self.sys = sys
        self.xi = float(xi)
        self.N = n_sites
        self.d = wave.d
        self.dim = self.N * self.d
        self.k = wave.k
        self.omega = wave.omega
        self.period = 1.0 / abs(wave.omega)
        terms = linearization_terms(sys, wave.modes, wave.k)
        self._static = np.zeros((self.dim, self.dim), dtype=complex)
        self._pieces: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        splits = {None: [(0, 0)], 1: [(1, 0), (0, 1)], 2: [(2, 0), (1, 1), (0, 2)]}[moment]
        for term in terms:
            for lm, rm in splits:
                left = term.left.moment(lm) if lm else term.left
                right = term.right.moment(rm) if rm else term.right
                L = left.symbol(self.xi, self.N)
                R = right.symbol(self.xi, self.N)
                if term.phi is None:
                    self._static += L @ R
                else:
                    self._pieces.append((L, term.phi, R))
        self._zeta0 = self.k * np.arange(self.N)
        self._trace_blocks = [
            (R @ L, phi) for (L, phi, R) in self._pieces
        ]
        # largest multiplier harmonic that actually carries weight; the
        # sitewise sum aliases everything else out of the trace integrand
        n_eff = 0
        for _, phi, _ in self._pieces:
            Kphi = (phi.shape[0] - 1) // 2
            mags = np.max(np.abs(phi.reshape(2 * Kphi + 1, -1)), axis=1)
            big = np.nonzero(mags > 1e-14 * max(mags.max(), 1e-300))[0]
            if big.size:
                n_eff = max(n_eff, int(np.max(np.abs(big - Kphi))))
        self.trace_frequency = 2 * np.pi * abs(self.omega) * (n_eff // self.N * self.N)

    def __call__(self, t: float) -> np.ndarray:
        A = self._static.copy()
        d = self.d
        for L, phi, R in self._pieces:
            vals = fourier.eval_modes(phi, self._zeta0 + self.omega * t)
            M = np.zeros((self.dim, self.dim), dtype=complex)
            for j in range(self.N):
                M[j * d:(j + 1) * d, j * d:(j + 1) * d] = vals[j]
            A += L @ M @ R
        return A

    def trace(self, t: float) -> complex:
        tr = np.trace(self._static)
        d = self.d
        for RL, phi in self._trace_blocks:
            # trace(L M R) = trace((R L) M); M is block diagonal
            vals = fourier.eval_modes(phi, self._zeta0 + self.omega * t)
            for j in range(self.N):
                tr += np.sum(RL[j * d:(j + 1) * d, j * d:(j + 1) * d].T * vals[j])
        return complex(tr)


def symbol_generator(sys, wave, xi: float, n_sites: Optional[int] = None,
                     moment_order: Optional[int] = None) -> SymbolGenerator:
    """Build the Bloch symbol at exponent xi about a rational-k wave.

    ``moment_order`` of 1 or 2 returns the corresponding coefficient of
    the expansion ``A_xi = A0 + (i xi) A1 + (i xi)^2 A2 + O(xi^3)``,
    evaluated at base exponent ``xi``.
    """
    return SymbolGenerator(sys, wave, xi, n_sites=n_sites, moment=moment_order)


@dataclass
class BlochMonodromy:
    """Fundamental solution over one forward temporal period."""

    xi: float
    S: np.ndarray
    t0: float
    t1: float
    tol: float
    liouville_rel_error: float
    N: int
    d: int
    omega: float


def _integrate(rhs: Callable, y0: np.ndarray, t0: float, t1: float, tol: float) -> np.ndarray:
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=tol, atol=tol,
                    dense_output=False)
    if not sol.success:
        raise StepUnderflow("monodromy integration failed", message=sol.message)
    y = sol.y[:, -1]
    if not np.all(np.isfinite(y.view(float))):
        raise NonFiniteState("monodromy picked up non-finite entries")
    return y


def _trace_integral(gen: SymbolGenerator, t0: float, t1: float,
                    order: int = 16) -> complex:
    # enough Gauss panels that each sees at most ~6 radians of the fastest
    # surviving multiplier harmonic
    phase = gen.trace_frequency * abs(t1 - t0)
    panels = max(2, int(np.ceil(phase / 6.0)))
    nodes, weights = np.polynomial.legendre.leggauss(order)
    total = 0.0 + 0.0j
    edges = np.linspace(t0, t1, panels + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        for x, w in zip(nodes, weights):
            total += half * w * gen.trace(mid + half * x)
    return total


def monodromy(gen: SymbolGenerator, t0: float = 0.0, t1: Optional[float] = None,
              tol: float = 1e-10, check_liouville: bool = True,
              panels: int = 16) -> BlochMonodromy:
    """Integrate the fundamental solution from t0 to t1 (default one period).

    The interval is split into panels and the monodromy is accumulated as
    a product of panel factors.  Strongly contracting spectra make the
    whole-period determinant relatively ill-determined even when the
    matrix itself is accurate; each panel factor is well-conditioned, so
    the determinant audit stays meaningful (det of the product equals the
    product of panel determinants to machine accuracy).
    """
    if t1 is None:
        t1 = t0 + gen.period
    dim = gen.dim

    def rhs(t, y):
        return (gen(t) @ y.reshape(dim, dim)).ravel()

    S = np.eye(dim, dtype=complex)
    log_ratio = 0.0 + 0.0j
    edges = np.linspace(t0, t1, panels + 1)
    eye = np.eye(dim, dtype=complex).ravel()
    for a, b in zip(edges[:-1], edges[1:]):
        Sp = _integrate(rhs, eye, a, b, tol).reshape(dim, dim)
        S = Sp @ S
        if check_liouville:
            sign, logabs = np.linalg.slogdet(Sp)
            log_ratio += logabs + 1j * np.angle(sign) - _trace_integral(gen, a, b)
    if check_liouville:
        wrapped = (log_ratio.imag + np.pi) % (2 * np.pi) - np.pi
        lerr = float(abs(np.exp(log_ratio.real + 1j * wrapped) - 1.0))
    else:
        lerr = float("nan")
    return BlochMonodromy(
        xi=gen.xi, S=S, t0=t0, t1=t1, tol=tol,
        liouville_rel_error=lerr, N=gen.N, d=gen.d, omega=gen.omega,
    )


def monodromy_expansion(sys, wave, tol: float = 1e-10):
    """(S0, S1, S2) blocks of the xi-expansion of the monodromy at xi = 0.

    Solves the augmented block-triangular system

        S0' = A0 S0,  S1' = A0 S1 + A1 S0,  S2' = A0 S2 + A1 S1 + A2 S0,

    so that ``S_xi = S0 + (i xi) S1 + (i xi)^2 S2 + O(xi^3)``.
    """
    g0 = symbol_generator(sys, wave, 0.0)
    g1 = symbol_generator(sys, wave, 0.0, moment_order=1)
    g2 = symbol_generator(sys, wave, 0.0, moment_order=2)
    dim = g0.dim

    def rhs(t, y):
        Y = y.reshape(3, dim, dim)
        A0, A1, A2 = g0(t), g1(t), g2(t)
        out = np.empty_like(Y)
        out[0] = A0 @ Y[0]
        out[1] = A0 @ Y[1] + A1 @ Y[0]
        out[2] = A0 @ Y[2] + A1 @ Y[1] + A2 @ Y[0]
        return out.ravel()

    # panels as in monodromy(); the augmented blocks compose by the chain
    # rule of the product (S1 = S1_b S0_a + S0_b S1_a, etc.)
    panels = 16
    S0 = np.eye(dim, dtype=complex)
    S1 = np.zeros((dim, dim), dtype=complex)
    S2 = np.zeros((dim, dim), dtype=complex)
    log_ratio = 0.0 + 0.0j
    edges = np.linspace(0.0, g0.period, panels + 1)
    y0 = np.zeros((3, dim, dim), dtype=complex)
    y0[0] = np.eye(dim)
    y0 = y0.ravel()
    for a, b in zip(edges[:-1], edges[1:]):
        Y = _integrate(rhs, y0, a, b, tol).reshape(3, dim, dim)
        S0n = Y[0] @ S0
        S1n = Y[1] @ S0 + Y[0] @ S1
        S2n = Y[2] @ S0 + Y[1] @ S1 + Y[0] @ S2
        S0, S1, S2 = S0n, S1n, S2n
        sign, logabs = np.linalg.slogdet(Y[0])
        log_ratio += logabs + 1j * np.angle(sign) - _trace_integral(g0, a, b)
    wrapped = (log_ratio.imag + np.pi) % (2 * np.pi) - np.pi
    lerr = float(abs(np.exp(log_ratio.real + 1j * wrapped) - 1.0))
    mono = BlochMonodromy(
        xi=0.0, S=S0, t0=0.0, t1=g0.period, tol=tol,
        liouville_rel_error=lerr, N=g0.N, d=g0.d, omega=g0.omega,
    )
    return mono, S1, S2
