"""Lattice dynamical system classes and their traveling-wave residuals.

Three families share one traveling-wave framework.  With ``(T U)_j =
U_{j+1}`` and coupling strength ``eta``:

* reaction-diffusion: ``dU/dt = mu (T - 2 I + T^{-1}) U + f(U)``;
* conservation/relaxation pairs ``U = (R, W)``:
  ``dR/dt = -eta (T - I) f_r(U)``,
  ``dW/dt = -eta (I - T^{-1}) f_w(U)
            + eta (I - T^{-1}) [B(U) eta (T - I) W] + g(U)``;
* Hamiltonian chains: ``dU/dt = D B deltaH[U]`` with
  ``D = (eta/2)(T - T^{-1})``, ``deltaH[U] = grad_u H(U, v) +
  Dt* grad_v H(U, v)``, ``v = Dt U``, ``Dt = eta (T - I)``,
  ``Dt* = eta (T^{-1} - I)``.

A wavetrain ``U_j(t) = u(k j + omega t)`` with 1-periodic ``u`` turns each
vector field into a profile equation; :func:`residual_modes` evaluates it
pseudospectrally on Fourier modes.  The linearization about a wavetrain is
emitted as a list of :class:`MultTerm` products ``C_left . M_phi .
C_right`` (shift polynomial, pointwise multiplier, shift polynomial); one
term list drives the dense profile-side operator, the Bloch symbols on the
lattice side, and their long-wavelength moment expansions, so the two
sides cannot drift apart.

Nonlinearity callables are vectorized over leading axes: ``f(U)`` maps
``(..., d) -> (..., d)`` and ``Df`` returns ``(..., d, d)`` with
``Df[..., i, j] = d f_i / d u_j``; analogous shapes hold for the split
and Hamiltonian pieces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import fourier
from .operators import ShiftPolynomial, identity_poly

__all__ = [
    "ReactionDiffusion",
    "ConservationSystem",
    "HamiltonianChain",
    "MultTerm",
    "system_dim",
    "rhs_ring",
    "residual_modes",
    "residual_k_explicit",
    "energy_k_explicit",
    "variational_derivative_k_explicit",
    "linearization_terms",
    "variational_derivative",
    "energy_mean",
    "energy_density_flux_ring",
    "variational_derivative_ring",
    "conserved_components",
    "wave_parameters",
]


@dataclass(frozen=True)
class ReactionDiffusion:
    """``dU/dt = mu Laplace U + f(U)`` on the integer lattice."""

    d: int
    mu: float
    f: Callable
    Df: Callable
    name: str = "reaction-diffusion"

    kind = "rd"


@dataclass(frozen=True)
class ConservationSystem:
    """Conserved/relaxing pair with one-sided differences and diffusion B."""

    d1: int
    d2: int
    eta: float
    f_r: Callable
    Df_r: Callable
    f_w: Callable
    Df_w: Callable
    g: Callable
    Dg: Callable
    B: Callable
    DB: Optional[Callable] = None
    name: str = "conservation"

    kind = "mixed"

    @property
    def d(self) -> int:
        return self.d1 + self.d2


@dataclass(frozen=True)
class HamiltonianChain:
    """``dU/dt = D B deltaH[U]`` with energy density ``H(u, Dt u)``."""

    d: int
    eta: float
    Bmat: np.ndarray
    H: Callable
    H_u: Callable
    H_v: Callable
    H_uu: Callable
    H_uv: Callable
    H_vv: Callable
    name: str = "hamiltonian"

    kind = "hamiltonian"


System = ReactionDiffusion | ConservationSystem | HamiltonianChain


def system_dim(sys: System) -> int:
    return sys.d


def conserved_components(sys: System) -> list[int]:
    """Component indices whose profile residual has identically zero mean.

    These rows of the collocation system are degenerate by the difference
    structure and get replaced by mass constraints in the Newton solver.
    """
    if sys.kind == "rd":
        return []
    if sys.kind == "mixed":
        return list(range(sys.d1))
    return list(range(sys.d))


def wave_parameters(sys: System) -> list[str]:
    """Continuation parameters of the wave family, ordered as in reports."""
    if sys.kind == "rd":
        return ["k"]
    if sys.kind == "mixed":
        return ["k"] + [f"M{i}" for i in range(sys.d1)]
    return ["k"] + [f"M{i}" for i in range(sys.d)] + ["E"]


# ---------------------------------------------------------------------------
# full lattice vector fields


def _split(sys: ConservationSystem, U: np.ndarray):
    return U[..., : sys.d1], U[..., sys.d1:]


def rhs_ring(sys: System, U: np.ndarray) -> np.ndarray:
    """Vector field on a periodic ring state of shape ``(L, d)``."""
    if sys.kind == "rd":
        lap = np.roll(U, -1, axis=0) - 2 * U + np.roll(U, 1, axis=0)
        return sys.mu * lap + sys.f(U)
    if sys.kind == "mixed":
        eta = sys.eta
        _, W = _split(sys, U)
        fr = sys.f_r(U)
        fw = sys.f_w(U)
        q = np.einsum("jab,jb->ja", sys.B(U), eta * (np.roll(W, -1, axis=0) - W))
        dR = -eta * (np.roll(fr, -1, axis=0) - fr)
        dW = -eta * (fw - np.roll(fw, 1, axis=0)) + eta * (q - np.roll(q, 1, axis=0)) + sys.g(U)
        return np.concatenate([dR, dW], axis=-1)
    dH = variational_derivative_ring(sys, U)
    BdH = dH @ sys.Bmat.T
    return 0.5 * sys.eta * (np.roll(BdH, -1, axis=0) - np.roll(BdH, 1, axis=0))


def variational_derivative_ring(sys: HamiltonianChain, U: np.ndarray) -> np.ndarray:
    eta = sys.eta
    v = eta * (np.roll(U, -1, axis=0) - U)
    gv = sys.H_v(U, v)
    return sys.H_u(U, v) + eta * (np.roll(gv, 1, axis=0) - gv)


def energy_density_flux_ring(sys: HamiltonianChain, U: np.ndarray):
    """Sitewise energy density and flux; ``d/dt density = Dt flux``."""
    eta = sys.eta
    v = eta * (np.roll(U, -1, axis=0) - U)
    dens = sys.H(U, v)
    dH = variational_derivative_ring(sys, U)
    BdH = dH @ sys.Bmat.T
    JdH = 0.5 * eta * (np.roll(BdH, -1, axis=0) - np.roll(BdH, 1, axis=0))
    gv = sys.H_v(U, v)
    flux = 0.5 * np.einsum("ja,ja->j", np.roll(dH, 1, axis=0), BdH) + np.einsum(
        "ja,ja->j", np.roll(gv, 1, axis=0), JdH
    )
    return dens, flux


# ---------------------------------------------------------------------------
# profile residuals (Fourier mode space)


def _grid_of(sys: System, u: np.ndarray):
    K = (u.shape[0] - 1) // 2
    M = fourier.grid_size(K)
    return K, M, fourier.to_grid(u, M).real


def residual_modes(sys: System, u: np.ndarray, k: float, omega: float) -> np.ndarray:
    """Profile equation residual on modes; zero iff u is a wavetrain."""
    if sys.kind == "rd":
        K, M, ug = _grid_of(sys, u)
        lap = fourier.shift(u, k) - 2 * u + fourier.shift(u, -k)
        return -omega * fourier.dz(u) + sys.mu * lap + fourier.from_grid(sys.f(ug), K)
    if sys.kind == "mixed":
        eta = sys.eta
        K, M, ug = _grid_of(sys, u)
        r = u[:, : sys.d1]
        w = u[:, sys.d1:]
        fr = fourier.from_grid(sys.f_r(ug), K)
        fw = fourier.from_grid(sys.f_w(ug), K)
        dw_grid = fourier.to_grid(eta * (fourier.shift(w, k) - w), M)
        q = fourier.from_grid(np.einsum("jab,jb->ja", sys.B(ug), dw_grid), K)
        res_r = -omega * fourier.dz(r) - eta * (fourier.shift(fr, k) - fr)
        res_w = (
            -omega * fourier.dz(w)
            - eta * (fw - fourier.shift(fw, -k))
            + eta * (q - fourier.shift(q, -k))
            + fourier.from_grid(sys.g(ug), K)
        )
        return np.concatenate([res_r, res_w], axis=-1)
    dH = variational_derivative(sys, u, k)
    BdH = dH @ sys.Bmat.T
    wave_op = 0.5 * sys.eta * (fourier.shift(BdH, k) - fourier.shift(BdH, -k))
    return -omega * fourier.dz(u) + wave_op


def variational_derivative(sys: HamiltonianChain, u: np.ndarray, k: float) -> np.ndarray:
    """Modes of ``deltaH[u]`` along the wave (shifts by k replace T)."""
    eta = sys.eta
    K, M, _ = _grid_of(sys, u)
    v = eta * (fourier.shift(u, k) - u)
    ug = fourier.to_grid(u, M).real
    vg = fourier.to_grid(v, M).real
    gu = fourier.from_grid(sys.H_u(ug, vg), K)
    gv = fourier.from_grid(sys.H_v(ug, vg), K)
    return gu + eta * (fourier.shift(gv, -k) - gv)


def energy_mean(sys: HamiltonianChain, u: np.ndarray, k: float) -> float:
    """Average energy density over one period, ``int H(u, v) dzeta``."""
    K = (u.shape[0] - 1) // 2
    M = fourier.grid_size(K)
    ug = fourier.to_grid(u, M).real
    vg = fourier.to_grid(sys.eta * (fourier.shift(u, k) - u), M).real
    return float(np.mean(sys.H(ug, vg)))


def residual_k_explicit(sys: System, u: np.ndarray, k: float, omega: float) -> np.ndarray:
    """Partial k-derivative of the residual holding (u, omega) fixed.

    Shift calculus ``d/dk [u(. + p k)] = p u'(. + p k)`` applied term by
    term; feeds the bordered solves for d/dk of the wave family.
    """
    if sys.kind == "rd":
        up = fourier.dz(u)
        return sys.mu * (fourier.shift(up, k) - fourier.shift(up, -k))
    if sys.kind == "mixed":
        eta = sys.eta
        K, M, ug = _grid_of(sys, u)
        w = u[:, sys.d1:]
        fr = fourier.from_grid(sys.f_r(ug), K)
        fw = fourier.from_grid(sys.f_w(ug), K)
        dw_k = fourier.to_grid(eta * fourier.shift(fourier.dz(w), k), M)
        dq = fourier.from_grid(np.einsum("jab,jb->ja", sys.B(ug), dw_k), K)
        dw_grid = fourier.to_grid(eta * (fourier.shift(w, k) - w), M)
        q = fourier.from_grid(np.einsum("jab,jb->ja", sys.B(ug), dw_grid), K)
        d_r = -eta * fourier.shift(fourier.dz(fr), k)
        d_w = (
            -eta * fourier.shift(fourier.dz(fw), -k)
            + eta * (dq - fourier.shift(dq, -k) + fourier.shift(fourier.dz(q), -k))
        )
        return np.concatenate([d_r, d_w], axis=-1)
    eta = sys.eta
    d_dH = variational_derivative_k_explicit(sys, u, k)
    dH = variational_derivative(sys, u, k)
    BdH = dH @ sys.Bmat.T
    BddH = d_dH @ sys.Bmat.T
    BdHp = fourier.dz(BdH)
    return 0.5 * eta * (
        fourier.shift(BdHp, k)
        + fourier.shift(BdHp, -k)
        + fourier.shift(BddH, k)
        - fourier.shift(BddH, -k)
    )


def variational_derivative_k_explicit(sys: HamiltonianChain, u: np.ndarray, k: float) -> np.ndarray:
    """Partial k-derivative of ``deltaH[u]`` modes holding u fixed."""
    eta = sys.eta
    K, M, ug = _grid_of(sys, u)
    v = eta * (fourier.shift(u, k) - u)
    vg = fourier.to_grid(v, M).real
    dv = fourier.to_grid(eta * fourier.shift(fourier.dz(u), k), M).real
    dgu = fourier.from_grid(np.einsum("jab,jb->ja", sys.H_uv(ug, vg), dv), K)
    dgv = fourier.from_grid(np.einsum("jab,jb->ja", sys.H_vv(ug, vg), dv), K)
    gv = fourier.from_grid(sys.H_v(ug, vg), K)
    return (
        dgu
        + eta * (fourier.shift(dgv, -k) - dgv)
        - eta * fourier.shift(fourier.dz(gv), -k)
    )


def energy_k_explicit(sys: HamiltonianChain, u: np.ndarray, k: float) -> float:
    """Partial k-derivative of the average energy holding u fixed."""
    eta = sys.eta
    K, M, ug = _grid_of(sys, u)
    v = eta * (fourier.shift(u, k) - u)
    vg = fourier.to_grid(v, M).real
    dv = fourier.to_grid(eta * fourier.shift(fourier.dz(u), k), M).real
    gv = sys.H_v(ug, vg)
    return float(np.mean(np.einsum("ja,ja->j", gv, dv)))


# ---------------------------------------------------------------------------
# linearization as shift-multiplier-shift products


@dataclass(frozen=True)
class MultTerm:
    """One product ``C_left . M_phi . C_right`` of the linearization.

    ``phi`` is a Fourier-mode table of the (d x d) multiplier matrix along
    the wave, or None for the identity multiplier.  Mode resolution of phi
    is the dealiased grid's, so composing the dense profile matrices from
    these terms reproduces the pseudospectral residual Jacobian exactly.
    """

    left: ShiftPolynomial
    phi: Optional[np.ndarray]
    right: ShiftPolynomial


def _embed(rows: slice, cols: slice, block: np.ndarray, d: int) -> np.ndarray:
    """Grid table (M, a, b) -> (M, d, d) with the block at [rows, cols]."""
    out = np.zeros(block.shape[:-2] + (d, d))
    out[..., rows, cols] = block
    return out


def _phi_modes(grid_table: np.ndarray, M: int) -> np.ndarray:
    Kphi = (M - 1) // 2
    return fourier.from_grid(grid_table, Kphi)


def linearization_terms(sys: System, u: np.ndarray, k: float) -> list[MultTerm]:
    """Linearize the vector field about the wavetrain ``u``.

    The transport piece ``-omega d/dzeta`` of the profile-side operator is
    not included; it is added by the assembler (on the lattice side there
    is no transport term).
    """
    d = sys.d
    K, M, ug = _grid_of(sys, u)
    I = np.eye(d)
    ident = identity_poly(d)

    if sys.kind == "rd":
        lap = ShiftPolynomial(d, {1: sys.mu * I, 0: -2 * sys.mu * I, -1: sys.mu * I})
        return [
            MultTerm(lap, None, ident),
            MultTerm(ident, _phi_modes(sys.Df(ug), M), ident),
        ]

    if sys.kind == "mixed":
        eta = sys.eta
        d1, d2 = sys.d1, sys.d2
        r_rows = slice(0, d1)
        w_rows = slice(d1, d)
        minus_fwd = ShiftPolynomial(d, {1: -eta * I, 0: eta * I})        # -eta (T - I)
        minus_bwd = ShiftPolynomial(d, {0: -eta * I, -1: eta * I})       # -eta (I - T^{-1})
        plus_bwd = ShiftPolynomial(d, {0: eta * I, -1: -eta * I})        # +eta (I - T^{-1})
        fwd_w = ShiftPolynomial(
            d, {1: eta * _embed(w_rows, w_rows, np.eye(d2), d), 0: -eta * _embed(w_rows, w_rows, np.eye(d2), d)}
        )
        terms = [
            MultTerm(minus_fwd, _phi_modes(_embed(r_rows, slice(0, d), sys.Df_r(ug), d), M), ident),
            MultTerm(minus_bwd, _phi_modes(_embed(w_rows, slice(0, d), sys.Df_w(ug), d), M), ident),
            MultTerm(plus_bwd, _phi_modes(_embed(w_rows, w_rows, sys.B(ug), d), M), fwd_w),
            MultTerm(ident, _phi_modes(_embed(w_rows, slice(0, d), sys.Dg(ug), d), M), ident),
        ]
        if sys.DB is not None:
            w = u[:, d1:]
            dw = fourier.to_grid(eta * (fourier.shift(w, k) - w), M).real
            dB = np.einsum("jabc,jb->jac", sys.DB(ug), dw)
            terms.append(
                MultTerm(plus_bwd, _phi_modes(_embed(w_rows, slice(0, d), dB, d), M), ident)
            )
        return terms

    eta = sys.eta
    DB = ShiftPolynomial(d, {1: 0.5 * eta * sys.Bmat, -1: -0.5 * eta * sys.Bmat})
    fwd = ShiftPolynomial(d, {1: eta * I, 0: -eta * I})                  # Dt
    bwd_adj = ShiftPolynomial(d, {-1: eta * I, 0: -eta * I})             # Dt*
    DB_adj = DB @ bwd_adj
    v = eta * (fourier.shift(u, k) - u)
    vg = fourier.to_grid(v, M).real
    Huu = sys.H_uu(ug, vg)
    Huv = sys.H_uv(ug, vg)
    Hvv = sys.H_vv(ug, vg)
    Hvu = np.swapaxes(Huv, -1, -2)
    return [
        MultTerm(DB, _phi_modes(Huu, M), ident),
        MultTerm(DB, _phi_modes(Huv, M), fwd),
        MultTerm(DB_adj, _phi_modes(Hvu, M), ident),
        MultTerm(DB_adj, _phi_modes(Hvv, M), fwd),
    ]
