"""Independent reference computations for the tests.

Everything here is derived directly from the model definitions with its
own arithmetic: closed-form dispersion relations, trapezoid averages on
explicit cosine profiles, matrix exponentials of circulants, and a
finite-difference ring monodromy that never touches the package's
linearization or symbol code.  Frozen decimal constants were computed
once from these routines and are asserted as literals so regressions
cannot drift silently.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from latticewave import fourier
from latticewave.systems import rhs_ring


# ---------------------------------------------------------------------------
# lambda-omega closed forms (plane-wave ansatz in the complexified plane)


def lo_closed(k: float, mu: float, c0: float, c1: float) -> dict:
    th = 2 * np.pi * k
    r2 = 1.0 - 2.0 * mu * (1.0 - np.cos(th))
    return {
        "r2": r2,
        "omega": (c0 + c1 * r2) / (2 * np.pi),
        "group_velocity": -2.0 * mu * c1 * np.sin(th),
        "diffusion": mu * np.cos(th)
        - 2.0 * mu * mu * np.sin(th) ** 2 * (1.0 + c1 * c1) / r2,
    }


# ---------------------------------------------------------------------------
# quadratic chain (a4 = 0): exact cosine family, trapezoid averages


def chain_omega(k: float, eta: float, a2: float) -> float:
    th = 2 * np.pi * k
    return eta * np.sin(th) * (2 * a2 + 2 * eta * eta * (1 - np.cos(th))) / (2 * np.pi)


def quad_chain_observables(k: float, m: float, A: float, eta: float, a2: float,
                           M: int = 4096) -> dict:
    """Trapezoid averages over the explicit profile u = m + A cos(2 pi z)."""
    z = np.arange(M) / M
    u = m + A * np.cos(2 * np.pi * z)
    v = eta * (m + A * np.cos(2 * np.pi * (z + k)) - u)
    dens = 0.5 * v * v + a2 * u * u
    return {
        "omega": chain_omega(k, eta, a2),
        "E": float(np.mean(dens)),
        "F": float(eta * np.mean(2 * a2 * u)),
    }


# ---------------------------------------------------------------------------
# exact solution of the linear reaction-diffusion ring (f(u) = -u)


def linear_rd_solution(mu: float, U0: np.ndarray, t: float) -> np.ndarray:
    L = U0.shape[0]
    C = -2.0 * np.eye(L) + np.eye(L, k=1) + np.eye(L, k=-1)
    C[0, -1] += 1.0
    C[-1, 0] += 1.0
    G = expm(t * (mu * C - np.eye(L)))
    return np.einsum("ij,jd->id", G, U0)


# ---------------------------------------------------------------------------
# ring monodromy through finite differences of the nonlinear field


def ring_monodromy_fd(sys, wave, ring_periods: int, tol: float = 1e-10,
                      h: float = 1e-6) -> np.ndarray:
    """Multipliers of the full ring linearization about the exact wave.

    The Jacobian action is a centered difference of the nonlinear ring
    field, so this path shares no code with the package's operator
    assembly; it integrates the (L d)^2 fundamental system forward over
    one temporal period 1/|omega|.
    """
    p, N = wave.require_rational()
    L = N * ring_periods
    j = np.arange(L)
    dim = L * wave.d

    def base(t):
        return fourier.eval_modes(wave.modes, wave.k * j + wave.omega * t).real

    def rhs(t, y):
        U = base(t)
        M = y.reshape(dim, dim)
        out = np.empty_like(M)
        for c in range(dim):
            v = M[:, c].reshape(L, wave.d)
            s = np.max(np.abs(v))
            if s == 0.0:
                out[:, c] = 0.0
                continue
            step = h / s
            df = rhs_ring(sys, U + step * v) - rhs_ring(sys, U - step * v)
            out[:, c] = (df / (2 * step)).ravel()
        return out.ravel()

    T = 1.0 / abs(wave.omega)
    sol = solve_ivp(rhs, (0.0, T), np.eye(dim).ravel(), method="DOP853",
                    rtol=tol, atol=tol)
    return np.linalg.eigvals(sol.y[:, -1].reshape(dim, dim))


def match_sets(a: np.ndarray, b: np.ndarray) -> float:
    """Greedy bipartite matching; returns the worst matched distance."""
    a = list(np.asarray(a, dtype=complex))
    b = list(np.asarray(b, dtype=complex))
    assert len(a) == len(b)
    worst = 0.0
    for x in a:
        i = int(np.argmin(np.abs(np.array(b) - x)))
        worst = max(worst, abs(b[i] - x))
        b.pop(i)
    return worst
