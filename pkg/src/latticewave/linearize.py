"""Dense linearized operators about a wavetrain and their adjoint chains.

The linearization in the co-moving profile variable is

    L v = -omega v' + sum_terms  C_left M_phi C_right v,

acting on truncated Fourier modes; shift polynomials become diagonal phase
matrices, pointwise multipliers become Toeplitz convolution blocks built
from the same dealiased-grid mode tables the residual uses, so the
assembled matrix is the exact Jacobian of the pseudospectral residual.

Conjugating by ``e^{i xi zeta / k}`` and collecting powers of ``i xi``
gives the long-wavelength expansion ``L_xi = L + (i xi) L1 + (i xi)^2 L2 +
O(xi^3)`` with ``L1 = c Id + (first shift moments)`` and ``L2 = (second
shift moments)``; the transport term is linear in ``i xi`` and contributes
only the wave speed ``c = -omega/k`` to L1.

:func:`wave_derivatives` packages the quantities every downstream module
needs: parameter derivatives of the family from bordered solves on the
converged Newton matrix, and the adjoint null/chain vectors normalized
against them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from . import fourier
from .errors import NormalizationViolated, RankDeficiency, SingularJacobian
from .systems import (
    MultTerm,
    conserved_components,
    energy_k_explicit,
    energy_mean,
    linearization_terms,
    residual_k_explicit,
    residual_modes,
    variational_derivative,
    wave_parameters,
)

__all__ = [
    "assemble_profile_operator",
    "adjoint_operator",
    "apply_operator",
    "real_representation",
    "SolveLayout",
    "newton_jacobian",
    "newton_residual",
    "lift",
    "WaveDerivatives",
    "wave_derivatives",
    "pairing_real",
]


def _conv_matrix(phi: Optional[np.ndarray], K: int, d: int) -> np.ndarray:
    """Toeplitz block matrix of the multiplier: out_n = sum_m phi_{n-m} in_m."""
    dim = (2 * K + 1) * d
    if phi is None:
        return np.eye(dim, dtype=complex)
    Kphi = (phi.shape[0] - 1) // 2
    n = fourier.mode_numbers(K)
    diff = n[:, None] - n[None, :]
    if np.max(np.abs(diff)) > Kphi:
        raise ValueError("multiplier mode table too short for this truncation")
    blocks = phi[diff + Kphi]                       # (2K+1, 2K+1, d, d)
    return blocks.transpose(0, 2, 1, 3).reshape(dim, dim)


def _term_matrix(term: MultTerm, K: int, k: float, lm: int, rm: int) -> np.ndarray:
    d = term.left.d
    left = term.left.moment(lm).profile_matrix(K, k) if lm else term.left.profile_matrix(K, k)
    right = term.right.moment(rm).profile_matrix(K, k) if rm else term.right.profile_matrix(K, k)
    return left @ _conv_matrix(term.phi, K, d) @ right


def assemble_profile_operator(
    sys, u: np.ndarray, k: float, omega: float, order: int = 0,
    terms: Optional[list[MultTerm]] = None,
) -> np.ndarray:
    """Dense operator of the given expansion order on flattened modes."""
    K = (u.shape[0] - 1) // 2
    d = u.shape[1]
    if terms is None:
        terms = linearization_terms(sys, u, k)
    dim = (2 * K + 1) * d
    out = np.zeros((dim, dim), dtype=complex)
    if order == 0:
        dzdiag = 2j * np.pi * fourier.mode_numbers(K)
        out -= omega * np.kron(np.diag(dzdiag), np.eye(d))
        splits = [(0, 0)]
    elif order == 1:
        out += (-omega / k) * np.eye(dim)
        splits = [(1, 0), (0, 1)]
    elif order == 2:
        splits = [(2, 0), (1, 1), (0, 2)]
    else:
        raise ValueError("order must be 0, 1 or 2")
    for term in terms:
        for lm, rm in splits:
            out += _term_matrix(term, K, k, lm, rm)
    return out


def adjoint_operator(L: np.ndarray) -> np.ndarray:
    """L^2(0,1) adjoint; the mode basis is orthonormal."""
    return L.conj().T


def apply_operator(L: np.ndarray, modes: np.ndarray) -> np.ndarray:
    return (L @ modes.ravel()).reshape(modes.shape)


# ---------------------------------------------------------------------------
# real representation of complex operators on Hermitian mode arrays

_pack_cache: dict = {}


def _pack_mats(K: int, d: int):
    """(P, U) with pack(y) = Re(P y) and unpack(x) = U x for real x."""
    key = (K, d)
    if key in _pack_cache:
        return _pack_cache[key]
    n = (2 * K + 1) * d
    U = np.empty((n, n), dtype=complex)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        U[:, j] = fourier.unpack(e, K, d).ravel()
    P = np.zeros((n, n), dtype=complex)
    # pack reads: row 0 of the coefficient table is mode 0 (real part),
    # odd rows are real parts of modes 1..K, even rows their imaginary parts
    for c in range(d):
        P[c, K * d + c] = 1.0
        for m in range(1, K + 1):
            src = (K + m) * d + c
            P[(2 * m - 1) * d + c, src] = 1.0
            P[2 * m * d + c, src] = -1.0j
    _pack_cache[key] = (P, U)
    return P, U


def real_representation(L: np.ndarray, K: int, d: int) -> np.ndarray:
    """Matrix of pack . L . unpack; exact for real-equivariant L."""
    P, U = _pack_mats(K, d)
    return np.real(P @ L @ U)


def pairing_real(a: np.ndarray) -> np.ndarray:
    """Row vector r with r . pack(b) = Re <a, b> for Hermitian a, b."""
    K = (a.shape[0] - 1) // 2
    d = a.shape[1]
    w = np.full(2 * K + 1, 2.0)
    w[0] = 1.0
    tab = fourier.pack(a).reshape(2 * K + 1, d)
    return (tab * w[:, None]).ravel()


# ---------------------------------------------------------------------------
# square Newton-type systems about a wave


@dataclass
class SolveLayout:
    """Index map of the square real system; all row/col indices absolute."""

    K: int
    d: int
    n_modes: int
    mass_rows: list[int] = field(default_factory=list)
    mass_components: list[int] = field(default_factory=list)
    energy_row: Optional[int] = None
    phase_row: Optional[int] = None
    pin_rows: list[int] = field(default_factory=list)
    omega_col: int = -1
    mass_cols: list[int] = field(default_factory=list)
    energy_col: Optional[int] = None
    slack_col: Optional[int] = None
    size: int = 0


def _layout(sys, K: int, pinned: bool) -> SolveLayout:
    d = sys.d
    n = (2 * K + 1) * d
    lay = SolveLayout(K=K, d=d, n_modes=n)
    comps = conserved_components(sys)
    lay.mass_components = comps
    lay.mass_rows = list(comps)  # mode-0 rows sit first in packed order
    row = n
    if sys.kind == "hamiltonian":
        lay.energy_row = row
        row += 1
    if pinned:
        lay.pin_rows = [row, row + 1]
        row += 2
    else:
        lay.phase_row = row
        row += 1
    col = n
    lay.omega_col = col
    col += 1
    if pinned and sys.kind == "mixed":
        lay.mass_cols = list(range(col, col + len(comps)))
        col += len(comps)
    if pinned and sys.kind == "hamiltonian":
        lay.energy_col = col
        col += 1
    if sys.kind == "hamiltonian":
        lay.slack_col = col
        col += 1
    lay.size = col
    if row != col:
        raise RankDeficiency("square system layout mismatch", rows=row, cols=col)
    return lay


def newton_jacobian(
    sys, u: np.ndarray, k: float, omega: float, lay: SolveLayout,
    u_ref: Optional[np.ndarray] = None, slack_dir: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Real Jacobian of the constrained profile system at (u, omega)."""
    K, d, n = lay.K, lay.d, lay.n_modes
    Lc = assemble_profile_operator(sys, u, k, omega, order=0)
    J = np.zeros((lay.size, lay.size))
    J[:n, :n] = real_representation(Lc, K, d)
    J[:n, lay.omega_col] = fourier.pack(-fourier.dz(u))
    if lay.slack_col is not None and slack_dir is not None:
        J[:n, lay.slack_col] = fourier.pack(slack_dir)
    for row, comp in zip(lay.mass_rows, lay.mass_components):
        J[row, :] = 0.0
        J[row, comp] = 1.0  # packed index of mode-0, component comp
    for i, col in zip(range(len(lay.mass_cols)), lay.mass_cols):
        J[lay.mass_rows[i], col] = -1.0
    if lay.energy_row is not None:
        dH = variational_derivative(sys, u, k)
        J[lay.energy_row, :n] = pairing_real(dH)
        if lay.energy_col is not None:
            J[lay.energy_row, lay.energy_col] = -1.0
    if lay.phase_row is not None:
        J[lay.phase_row, :n] = fourier.pack(fourier.dz(u_ref))
    if lay.pin_rows:
        im_row, re_row = lay.pin_rows
        comp = d - 1 if sys.kind == "mixed" else 0
        J[im_row, 2 * d + comp] = 1.0   # Im of mode 1
        J[re_row, d + comp] = 1.0       # Re of mode 1
    return J


def newton_residual(
    sys, u: np.ndarray, k: float, omega: float, lay: SolveLayout,
    mass: Optional[np.ndarray], energy: Optional[float], slack: float,
    slack_dir: Optional[np.ndarray], u_ref: Optional[np.ndarray],
    pin_amplitude: Optional[float],
) -> np.ndarray:
    """Residual vector matching :func:`newton_jacobian`'s layout."""
    K, d, n = lay.K, lay.d, lay.n_modes
    res = residual_modes(sys, u, k, omega)
    if slack_dir is not None:
        res = res + slack * slack_dir
    F = np.zeros(lay.size)
    F[:n] = fourier.pack(res)
    for row, comp in zip(lay.mass_rows, lay.mass_components):
        F[row] = u[K, comp].real - mass[comp if sys.kind == "hamiltonian" else lay.mass_components.index(comp)]
    if lay.energy_row is not None:
        F[lay.energy_row] = energy_mean(sys, u, k) - energy
    if lay.phase_row is not None:
        diff = fourier.pack(u) - fourier.pack(u_ref)
        F[lay.phase_row] = float(np.dot(fourier.pack(fourier.dz(u_ref)), diff))
    if lay.pin_rows:
        comp = d - 1 if sys.kind == "mixed" else 0
        im_row, re_row = lay.pin_rows
        F[im_row] = u[K + 1, comp].imag
        F[re_row] = u[K + 1, comp].real - 0.5 * pin_amplitude
    return F


# ---------------------------------------------------------------------------
# lifts


def lift(modes: np.ndarray, t: float, p: int, N: int, omega: float) -> np.ndarray:
    """Sample a profile-variable function onto one period of lattice sites.

    Returns the flattened complex vector ``v(k j + omega t)`` for
    ``j = 0..N-1``; these are the exact time-dependent solutions and
    coefficient frames of the Bloch evolution at exponent 0.
    """
    j = np.arange(N)
    return fourier.eval_modes(modes, (p / N) * j + omega * t).ravel()


# ---------------------------------------------------------------------------
# derivatives of the wave family and adjoint chains


@dataclass
class WaveDerivatives:
    """Parameter derivatives and adjoint data of a converged wave."""

    params: list[str]
    d_omega: dict
    d_u: dict
    u_ad: np.ndarray
    kernel_dim: int
    cokernel: dict
    chain_residual: float
    pairings: dict

    def __getitem__(self, name: str):
        return self.d_omega[name], self.d_u[name]


def _solve_bordered(J: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.solve(J, rhs)
    except scipy.linalg.LinAlgError as exc:
        raise SingularJacobian("bordered solve failed", detail=str(exc))


def _derivative_rhs(sys, u, k, omega, lay: SolveLayout, name: str) -> np.ndarray:
    n = lay.n_modes
    rhs = np.zeros(lay.size)
    if name == "k":
        rhs[:n] = -fourier.pack(residual_k_explicit(sys, u, k, omega))
        for row in lay.mass_rows:
            rhs[row] = 0.0
        if lay.energy_row is not None:
            rhs[lay.energy_row] = -energy_k_explicit(sys, u, k)
    elif name.startswith("M"):
        i = int(name[1:])
        rhs[lay.mass_rows[i]] = 1.0
    elif name == "E":
        rhs[lay.energy_row] = 1.0
    else:
        raise KeyError(name)
    return rhs


def _hermitian_kernel_vec(vec: np.ndarray, K: int, d: int) -> np.ndarray:
    """Pick the Hermitian representative in a one-complex-dim subspace."""
    m = vec.reshape(2 * K + 1, d)
    h = fourier.hermitify(m)
    if fourier.norm(h) < 0.5 * fourier.norm(m):
        h = fourier.hermitify(1j * m)
    return h / fourier.norm(h)


def wave_derivatives(sys, wave, rank_tol: float = 1e-6) -> WaveDerivatives:
    """Bordered parameter derivatives plus the normalized adjoint vector.

    The adjoint vector ``u_ad`` spans the slow (phase) row of the averaged
    system: it satisfies the chain relation appropriate to the class and
    the biorthogonality ``<u_ad, u'> = 1``, ``<u_ad, d_a u> = 0`` for the
    conserved parameters a.
    """
    u = wave.modes
    k = wave.p / wave.N
    omega = wave.omega
    K = (u.shape[0] - 1) // 2
    d = u.shape[1]
    n = (2 * K + 1) * d
    params = wave_parameters(sys)

    lay = _layout(sys, K, pinned=False)
    slack_dir = variational_derivative(sys, u, k) if sys.kind == "hamiltonian" else None
    J = newton_jacobian(sys, u, k, omega, lay, u_ref=u, slack_dir=slack_dir)

    d_omega: dict = {}
    d_u: dict = {}
    for name in params:
        sol = _solve_bordered(J, _derivative_rhs(sys, u, k, omega, lay, name))
        d_u[name] = fourier.unpack(sol[:n], K, d)
        d_omega[name] = float(sol[lay.omega_col])

    Lc = assemble_profile_operator(sys, u, k, omega, order=0)
    sv = scipy.linalg.svdvals(Lc)
    expected = 2 if sys.kind == "hamiltonian" else 1
    kdim = int(np.sum(sv < rank_tol * sv[0]))
    if kdim != expected:
        raise RankDeficiency(
            "linearization kernel has unexpected dimension",
            found=kdim, expected=expected, smallest=sv[-4:].tolist(),
        )

    up = fourier.dz(u)
    Lstar = adjoint_operator(Lc)
    pairings: dict = {}
    cokernel: dict = {}
    chain_residual = 0.0

    if sys.kind == "rd":
        _, _, vh = scipy.linalg.svd(Lstar)
        u_ad = _hermitian_kernel_vec(vh[-1].conj(), K, d)
        chain_residual = float(np.linalg.norm(Lstar @ u_ad.ravel()))
        scale = fourier.inner(u_ad, up).real
        if abs(scale) < 1e-10:
            raise NormalizationViolated("adjoint kernel orthogonal to translation", scale=scale)
        u_ad = u_ad / scale
    else:
        ones = []
        for comp in conserved_components(sys):
            e = np.zeros((2 * K + 1, d), dtype=complex)
            e[K, comp] = 1.0
            ones.append(e)
        cokernel["constants"] = ones
        if sys.kind == "mixed":
            ker_rows = [ones[0]]
            ker_cols = [up]
            y = ones[0]
        else:
            dH = variational_derivative(sys, u, k)
            cokernel["variational"] = dH
            w0 = d_omega["E"] * d_u[f"M{0}"] - d_omega[f"M{0}"] * d_u["E"]
            if d > 1:
                raise RankDeficiency("hamiltonian adjoint chain implemented for d = 1")
            ker_rows = [ones[0], dH]
            ker_cols = [up, w0]
            y = d_omega["M0"] * ones[0] + d_omega["E"] * dH
        nb = len(ker_rows)
        B = np.zeros((n + nb, n + nb), dtype=complex)
        B[:n, :n] = Lstar
        for i, (r, c) in enumerate(zip(ker_rows, ker_cols)):
            B[:n, n + i] = c.ravel()
            B[n + i, :n] = r.ravel().conj()
        rhs = np.zeros(n + nb, dtype=complex)
        rhs[:n] = y.ravel()
        sol = _solve_bordered(B, rhs)
        z = sol[:n].reshape(2 * K + 1, d)
        z = fourier.hermitify(z)
        chain_residual = float(np.linalg.norm(Lstar @ z.ravel() - y.ravel()))
        denom = fourier.inner(z, up).real
        if sys.kind == "mixed":
            alpha = 1.0 / denom
            beta = -alpha * fourier.inner(z, d_u["M0"]).real
            u_ad = alpha * z + beta * ones[0]
            pairings["z_up"] = denom
        else:
            if abs(denom - 1.0) > 1e-6:
                raise NormalizationViolated(
                    "hamiltonian chain pairing <z, u'> != 1", value=denom
                )
            a = fourier.inner(z, d_u["M0"]).real
            b = fourier.inner(z, d_u["E"]).real
            u_ad = z - a * ones[0] - b * cokernel["variational"]
            pairings["z_up"] = denom

    pairings["uad_up"] = fourier.inner(u_ad, up).real
    for name in params:
        if name != "k":
            pairings[f"uad_{name}"] = fourier.inner(u_ad, d_u[name]).real
    if abs(pairings["uad_up"] - 1.0) > 1e-7:
        raise NormalizationViolated("<u_ad, u'> != 1", value=pairings["uad_up"])
    for name in params:
        if name != "k" and abs(pairings[f"uad_{name}"]) > 1e-7:
            raise NormalizationViolated(
                "adjoint vector not biorthogonal to conserved directions",
                name=name, value=pairings[f"uad_{name}"],
            )

    return WaveDerivatives(
        params=params,
        d_omega=d_omega,
        d_u=d_u,
        u_ad=u_ad,
        kernel_dim=kdim,
        cokernel=cokernel,
        chain_residual=chain_residual,
        pairings=pairings,
    )
