"""Concrete example systems, one per class, plus seed constructions.

* ``lambda_omega``: planar reaction-diffusion with rotational symmetry;
  its wavetrains, frequencies and dispersion quantities have closed forms,
  which the solver uses for seeding and the tests use as oracles.
* ``viscous_balance``: a 1+1 conservation/relaxation pair with nonlinear
  fluxes, constant diffusion and a source balancing the two fields; wave
  families bifurcate from uniform states at a Hopf point of the sitewise
  dispersion relation.
* ``quartic_chain``: a scalar Hamiltonian chain with quartic on-site
  potential; at zero mass and wavenumber 1/6 the cubic term's third
  harmonic is annihilated by the centered-difference symbol and the
  profile is an exact cosine.

All nonlinearities are module-level functions bound with ``partial`` so
system objects stay picklable for the process-pool spectrum stage.
"""

from __future__ import annotations

from functools import partial

import numpy as np

from . import fourier
from .errors import NoConvergence
from .systems import ConservationSystem, HamiltonianChain, ReactionDiffusion

__all__ = [
    "make_system",
    "MODEL_DEFAULTS",
    "lambda_omega_closed_form",
    "lambda_omega_seed",
    "hopf_point",
    "hopf_symbol",
    "mixed_seed",
    "chain_seed",
]

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


# ---------------------------------------------------------------------------
# lambda-omega reaction-diffusion


def _lo_f(U, c0, c1):
    a2 = np.sum(U * U, axis=-1, keepdims=True)
    RU = U @ ROT.T
    return (1.0 - a2) * U + (c0 + c1 * a2) * RU


def _lo_Df(U, c0, c1):
    a2 = np.sum(U * U, axis=-1)[..., None, None]
    outer = U[..., :, None] * U[..., None, :]
    RU = U @ ROT.T
    I = np.eye(2)
    return (
        (1.0 - a2) * I
        - 2.0 * outer
        + (c0 + c1 * a2) * ROT
        + 2.0 * c1 * RU[..., :, None] * U[..., None, :]
    )


def lambda_omega_closed_form(k: float, mu: float, c0: float, c1: float) -> dict:
    """Orbit radius, frequency and dispersion coefficients of the family.

    Returns r2, omega, d_k omega and the effective diffusion d(k); the
    family exists while ``r2 > 0``.
    """
    s = np.sin(2 * np.pi * k)
    c = np.cos(2 * np.pi * k)
    r2 = 1.0 - 2.0 * mu * (1.0 - c)
    omega = (c0 + c1 * r2) / (2 * np.pi)
    dk_omega = -2.0 * mu * c1 * s
    dcoef = -2.0 * mu ** 2 * s * s * (1.0 + c1 ** 2) / r2 + mu * c
    return {"r2": r2, "omega": omega, "dk_omega": dk_omega, "d": dcoef}


def lambda_omega_seed(sys: ReactionDiffusion, p: int, N: int, K: int):
    """Exact rotating-wave modes (profile ``r e^{2 pi zeta R} e1``).

    The profile is always the first harmonic; the rational wavenumber
    ``p/N`` enters through the per-site phase only.
    """
    cf = lambda_omega_closed_form(p / N, sys.mu, *_lo_params(sys))
    if cf["r2"] <= 0:
        raise NoConvergence("lambda-omega family does not exist at this k", r2=cf["r2"])
    r = np.sqrt(cf["r2"])
    u = np.zeros((2 * K + 1, 2), dtype=complex)
    u[K + 1] = 0.5 * r * np.array([1.0, -1.0j])
    u[K - 1] = 0.5 * r * np.array([1.0, 1.0j])
    return u, float(cf["omega"])


def _lo_params(sys: ReactionDiffusion):
    return sys.f.keywords["c0"], sys.f.keywords["c1"]


# ---------------------------------------------------------------------------
# conservation/relaxation pair


def _mx_fr(U):
    return U[..., 1:2]


def _mx_Dfr(U):
    out = np.zeros(U.shape[:-1] + (1, 2))
    out[..., 0, 1] = 1.0
    return out


def _mx_fw(U):
    r = U[..., 0]
    w = U[..., 1]
    return (w * w / r + 0.5 * r * r)[..., None]


def _mx_Dfw(U):
    r = U[..., 0]
    w = U[..., 1]
    out = np.empty(U.shape[:-1] + (1, 2))
    out[..., 0, 0] = -w * w / (r * r) + r
    out[..., 0, 1] = 2.0 * w / r
    return out


def _mx_g(U):
    r = U[..., 0]
    w = U[..., 1]
    return (r - w * np.abs(w) / r)[..., None]


def _mx_Dg(U):
    r = U[..., 0]
    w = U[..., 1]
    out = np.empty(U.shape[:-1] + (1, 2))
    out[..., 0, 0] = 1.0 + w * np.abs(w) / (r * r)
    out[..., 0, 1] = -2.0 * np.abs(w) / r
    return out


def _mx_B(U, nu):
    out = np.zeros(U.shape[:-1] + (1, 1))
    out[..., 0, 0] = nu
    return out


def hopf_symbol(theta: float, m: float, eta: float, nu: float) -> np.ndarray:
    """Sitewise dispersion matrix of the pair about the uniform state (m, m)."""
    ep = np.exp(1j * theta)
    em = np.exp(-1j * theta)
    dfw_r = m - 1.0
    dfw_w = 2.0
    dg_r = 2.0
    dg_w = -2.0
    a12 = -eta * (ep - 1.0)
    a21 = -eta * (1.0 - em) * dfw_r + dg_r
    a22 = -eta * (1.0 - em) * dfw_w - 2.0 * nu * eta * eta * (1.0 - np.cos(theta)) + dg_w
    return np.array([[0.0, a12], [a21, a22]])


def hopf_point(eta: float, nu: float, k: float, bracket=(1.0, 3.0)) -> tuple[float, float, np.ndarray]:
    """Mass m_c where the mode-k pair crosses the imaginary axis.

    Returns (m_c, omega_c, eigenvector); omega_c is the per-profile
    frequency of the bifurcating wavetrain (eigenvalue imag part / 2 pi
    carries the e^{2 pi i zeta} normalization used by the seeds).
    """
    theta = 2 * np.pi * k

    def crossing(m):
        lam = np.linalg.eigvals(hopf_symbol(theta, m, eta, nu))
        i = np.argmax(lam.real)
        return lam[i].real

    lo, hi = bracket
    flo, fhi = crossing(lo), crossing(hi)
    if flo * fhi > 0:
        raise NoConvergence("no Hopf crossing in bracket", bracket=bracket)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = crossing(mid)
        if flo * fm <= 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        if hi - lo < 1e-13:
            break
    m_c = 0.5 * (lo + hi)
    lam, vecs = np.linalg.eig(hopf_symbol(theta, m_c, eta, nu))
    i = np.argmax(lam.real)
    if lam[i].imag > 0:
        # the branch with negative rotation is the one the solver continues
        i = int(np.argmin(np.abs(lam - np.conj(lam[i]))))
    omega_c = lam[i].imag / (2 * np.pi)
    v = vecs[:, i]
    v = v / v[1]  # normalize the w component real positive
    return float(m_c), float(omega_c), v


def mixed_seed(sys: ConservationSystem, p: int, N: int, K: int, amplitude: float):
    """Linear Hopf seed: uniform state plus the critical mode at given amplitude."""
    m_c, omega_c, v = hopf_point(sys.eta, _mx_nu(sys), p / N)
    u = np.zeros((2 * K + 1, 2), dtype=complex)
    u[K] = [m_c, m_c]
    u[K + 1] = 0.5 * amplitude * v
    u[K - 1] = np.conj(u[K + 1])
    return u, omega_c, np.array([m_c])


def _mx_nu(sys: ConservationSystem):
    return sys.B.keywords["nu"]


# ---------------------------------------------------------------------------
# quartic Hamiltonian chain


def _qc_W(u, a2, a4):
    return a2 * u * u + a4 * u ** 4


def _qc_H(U, V, a2, a4):
    u = U[..., 0]
    v = V[..., 0]
    return 0.5 * v * v + _qc_W(u, a2, a4)


def _qc_Hu(U, V, a2, a4):
    u = U[..., 0]
    return (2 * a2 * u + 4 * a4 * u ** 3)[..., None]


def _qc_Hv(U, V):
    return V.copy()


def _qc_Huu(U, V, a2, a4):
    u = U[..., 0]
    return (2 * a2 + 12 * a4 * u * u)[..., None, None]


def _qc_Huv(U, V):
    return np.zeros(U.shape[:-1] + (1, 1))


def _qc_Hvv(U, V):
    return np.ones(U.shape[:-1] + (1, 1))


def chain_seed(sys: HamiltonianChain, p: int, N: int, K: int, mass: float, amplitude: float):
    """Cosine seed about mean ``mass`` with linear frequency of the chain."""
    k = p / N
    a2 = sys.H.keywords["a2"]
    a4 = sys.H.keywords["a4"]
    wpp = 2 * a2 + 12 * a4 * mass * mass
    s = np.sin(2 * np.pi * k)
    c = np.cos(2 * np.pi * k)
    omega0 = sys.eta * s * (wpp + 2 * sys.eta ** 2 * (1 - c)) / (2 * np.pi)
    u = np.zeros((2 * K + 1, 1), dtype=complex)
    u[K] = mass
    u[K + 1] = 0.5 * amplitude
    u[K - 1] = 0.5 * amplitude
    return u, float(omega0), np.array([mass])


# ---------------------------------------------------------------------------
# registry

MODEL_DEFAULTS = {
    "lambda_omega": {"mu": 0.5, "c0": 1.0, "c1": -1.0},
    "viscous_balance": {"eta": 1.0, "nu": 0.5},
    "quartic_chain": {"eta": 0.8, "a2": 0.5, "a4": 0.25},
}


def make_system(name: str, **params):
    """Build a registered example system; unknown params raise KeyError."""
    if name not in MODEL_DEFAULTS:
        raise KeyError(f"unknown model {name!r}; known: {sorted(MODEL_DEFAULTS)}")
    full = dict(MODEL_DEFAULTS[name])
    for key, val in params.items():
        if key not in full:
            raise KeyError(f"model {name!r} has no parameter {key!r}")
        full[key] = float(val)
    if name == "lambda_omega":
        return ReactionDiffusion(
            d=2,
            mu=full["mu"],
            f=partial(_lo_f, c0=full["c0"], c1=full["c1"]),
            Df=partial(_lo_Df, c0=full["c0"], c1=full["c1"]),
            name=name,
        )
    if name == "viscous_balance":
        return ConservationSystem(
            d1=1,
            d2=1,
            eta=full["eta"],
            f_r=_mx_fr,
            Df_r=_mx_Dfr,
            f_w=_mx_fw,
            Df_w=_mx_Dfw,
            g=_mx_g,
            Dg=_mx_Dg,
            B=partial(_mx_B, nu=full["nu"]),
            name=name,
        )
    return HamiltonianChain(
        d=1,
        eta=full["eta"],
        Bmat=np.eye(1),
        H=partial(_qc_H, a2=full["a2"], a4=full["a4"]),
        H_u=partial(_qc_Hu, a2=full["a2"], a4=full["a4"]),
        H_v=_qc_Hv,
        H_uu=partial(_qc_Huu, a2=full["a2"], a4=full["a4"]),
        H_uv=_qc_Huv,
        H_vv=_qc_Hvv,
        name=name,
    )
