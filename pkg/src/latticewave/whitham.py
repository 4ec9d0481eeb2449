"""Averaged modulation quantities of wavetrains and their Jacobians.

Slow modulations of a wavetrain family obey first-order averaged systems
in the local wave parameters: the wavenumber alone (reaction-diffusion),
wavenumber plus conserved means (conservation pairs), or wavenumber,
means and energy (Hamiltonian chains).  This module computes the flux
averages of those systems along a solved profile, differentiates them in
the wave parameters by two independent routes (integrand calculus through
the bordered family derivatives, and Richardson finite differences over
fresh continuation solves), assembles the linearized modulation matrix G,
and classifies its hyperbolicity.

Characteristic speeds are reported in the multiplier convention
``lambda(xi) ~ exp(i xi a / |omega|)``: eigenvalues of G are directly the
zero-exponent limits of the critical branch velocities.

The Hamiltonian mass row carries a sign ambiguity between the averaged
conservation law and the linearized pencil; both candidate Jacobians are
produced and the spectral comparison adjudicates, so no sign is guessed
here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import fourier
from .branches import eig_dense
from .errors import DerivativeUnavailable, NormalizationViolated
from .linearize import wave_derivatives
from .profiles import solve_wave
from .systems import variational_derivative, wave_parameters

__all__ = [
    "rd_group_velocity",
    "rd_diffusion",
    "averaged_fluxes",
    "flux_derivatives",
    "flux_derivatives_fd",
    "WhithamJacobian",
    "whitham_jacobian",
    "char_speeds",
]


def _grid(modes):
    K = (modes.shape[0] - 1) // 2
    M = fourier.grid_size(K)
    return fourier.to_grid(modes, M)


def _mean_dot(a_modes, b_modes) -> float:
    """Mean over one period of the pointwise dot product, dealiased."""
    prod = np.einsum("ja,ja->j", _grid(a_modes), _grid(b_modes))
    return float(np.mean(prod).real)


# ---------------------------------------------------------------------------
# reaction-diffusion: group velocity and diffusion coefficient


def rd_group_velocity(sys, wave, wd=None) -> float:
    """Group velocity ``<u_ad, mu[u'(.+k) - u'(.-k)]>`` by exact pairing."""
    if wd is None:
        wd = wave_derivatives(sys, wave)
    up = wave.uprime()
    m1 = sys.mu * (fourier.shift(up, wave.k) - fourier.shift(up, -wave.k))
    return float(fourier.inner(wd.u_ad, m1).real)


def rd_diffusion(sys, wave, wd=None) -> float:
    """Diffusion coefficient of the second-order modulation expansion.

    ``d(k) = <u_ad, mu[dku(.+k) - dku(.-k)] + mu/2 [u'(.+k) + u'(.-k)]>``
    with dku re-gauged so that <u_ad, dku> = 0.
    """
    if wd is None:
        wd = wave_derivatives(sys, wave)
    up = wave.uprime()
    dku = wd.d_u["k"]
    dku = dku - fourier.inner(wd.u_ad, dku) * up
    gauge = abs(fourier.inner(wd.u_ad, dku))
    if gauge > 1e-9:
        raise NormalizationViolated("projected dku still pairs with u_ad", value=gauge)
    k = wave.k
    m1 = sys.mu * (fourier.shift(dku, k) - fourier.shift(dku, -k))
    m2 = 0.5 * sys.mu * (fourier.shift(up, k) + fourier.shift(up, -k))
    return float(fourier.inner(wd.u_ad, m1 + m2).real)


# ---------------------------------------------------------------------------
# averaged fluxes (Mixed and Hamiltonian classes)


def averaged_fluxes(sys, wave) -> dict:
    """Averages entering the modulation system: mass flux F, energy flux S."""
    u = wave.modes
    k = wave.k
    if sys.kind == "rd":
        return {"F": None, "S": None}
    eta = sys.eta
    if sys.kind == "mixed":
        fr = sys.f_r(_grid(u).real)
        return {"F": eta * np.mean(fr, axis=0), "S": None}
    v = eta * (fourier.shift(u, k) - u)
    ug, vg = _grid(u).real, _grid(v).real
    F = eta * np.mean(sys.H_u(ug, vg), axis=0)

    dH = variational_derivative(sys, u, k)
    BdH = dH @ sys.Bmat.T
    gv = fourier.from_grid(sys.H_v(ug, vg), (u.shape[0] - 1) // 2)
    JBdH = 0.5 * eta * (fourier.shift(BdH, k) - fourier.shift(BdH, -k))
    S = eta * (
        0.5 * _mean_dot(fourier.shift(dH, -k), BdH)
        + _mean_dot(fourier.shift(gv, -k), JBdH)
    )
    return {"F": F, "S": float(S)}


def _ham_dH_directional(sys, u, k, w, explicit_k: bool):
    """Directional derivative of (deltaH, grad_vH) along profile direction w.

    With explicit_k, adds the partial k-derivative of every shift at fixed
    profile, so the result is the total parameter derivative for w = dku.
    """
    eta = sys.eta
    K = (u.shape[0] - 1) // 2
    v = eta * (fourier.shift(u, k) - u)
    ug, vg = _grid(u).real, _grid(v).real
    Huu = sys.H_uu(ug, vg)
    Huv = sys.H_uv(ug, vg)
    Hvv = sys.H_vv(ug, vg)

    dv = eta * (fourier.shift(w, k) - w)
    if explicit_k:
        dv = dv + eta * fourier.shift(fourier.dz(u), k)
    wg, dvg = _grid(w).real, _grid(dv).real
    dgu = fourier.from_grid(
        np.einsum("jab,jb->ja", Huu, wg) + np.einsum("jab,jb->ja", Huv, dvg), K
    )
    dgv = fourier.from_grid(
        np.einsum("jba,jb->ja", Huv, wg) + np.einsum("jab,jb->ja", Hvv, dvg), K
    )
    ddH = dgu + eta * (fourier.shift(dgv, -k) - dgv)
    if explicit_k:
        gv = fourier.from_grid(sys.H_v(ug, vg), K)
        ddH = ddH - eta * fourier.shift(fourier.dz(gv), -k)
    return ddH, dgv


def flux_derivatives(sys, wave, wd=None) -> dict:
    """Parameter derivatives of (omega, F, S) by integrand calculus.

    Differentiates the flux averages through the bordered family
    derivatives; for the wavenumber this includes the explicit shift
    derivatives of every ``T_{pk}`` in the integrands.
    """
    if wd is None:
        wd = wave_derivatives(sys, wave)
    u, k = wave.modes, wave.k
    K = (u.shape[0] - 1) // 2
    out: dict = {}
    if sys.kind == "rd":
        for name in wd.params:
            out[name] = {"omega": wd.d_omega[name]}
        return out
    eta = sys.eta
    if sys.kind == "mixed":
        ug = _grid(u).real
        Dfr = sys.Df_r(ug)
        for name in wd.params:
            wg = _grid(wd.d_u[name]).real
            dF = eta * np.mean(np.einsum("jab,jb->ja", Dfr, wg), axis=0)
            out[name] = {"omega": wd.d_omega[name], "F": dF}
        return out

    v = eta * (fourier.shift(u, k) - u)
    ug, vg = _grid(u).real, _grid(v).real
    Huu = sys.H_uu(ug, vg)
    Huv = sys.H_uv(ug, vg)
    dH = variational_derivative(sys, u, k)
    BdH = dH @ sys.Bmat.T
    gv = fourier.from_grid(sys.H_v(ug, vg), K)
    JBdH = 0.5 * eta * (fourier.shift(BdH, k) - fourier.shift(BdH, -k))
    up = wave.uprime()

    for name in wd.params:
        w = wd.d_u[name]
        explicit = name == "k"
        dv = eta * (fourier.shift(w, k) - w)
        if explicit:
            dv = dv + eta * fourier.shift(fourier.dz(u), k)
        wg, dvg = _grid(w).real, _grid(dv).real
        dF = eta * np.mean(
            np.einsum("jab,jb->ja", Huu, wg) + np.einsum("jab,jb->ja", Huv, dvg),
            axis=0,
        )

        ddH, dgv = _ham_dH_directional(sys, u, k, w, explicit)
        BddH = ddH @ sys.Bmat.T
        JBddH = 0.5 * eta * (fourier.shift(BddH, k) - fourier.shift(BddH, -k))
        dS = (
            0.5 * _mean_dot(fourier.shift(ddH, -k), BdH)
            + 0.5 * _mean_dot(fourier.shift(dH, -k), BddH)
            + _mean_dot(fourier.shift(dgv, -k), JBdH)
            + _mean_dot(fourier.shift(gv, -k), JBddH)
        )
        if explicit:
            BdHp = fourier.dz(BdH)
            dJ_expl = 0.5 * eta * (fourier.shift(BdHp, k) + fourier.shift(BdHp, -k))
            dS += (
                -0.5 * _mean_dot(fourier.shift(fourier.dz(dH), -k), BdH)
                - _mean_dot(fourier.shift(fourier.dz(gv), -k), JBdH)
                + _mean_dot(fourier.shift(gv, -k), dJ_expl)
            )
        out[name] = {"omega": wd.d_omega[name], "F": dF, "S": eta * float(dS)}
    return out


# ---------------------------------------------------------------------------
# finite-difference route over fresh continuation solves


def _wave_at(sys, wave, name: str, delta: Fraction | float):
    if name == "k":
        p, N = wave.require_rational()
        q = Fraction(p, N) + delta
        kw = {}
        if wave.mass is not None:
            kw["mass"] = wave.mass
        if wave.energy is not None:
            kw["energy"] = wave.energy
        return solve_wave(
            sys, (q.numerator, q.denominator),
            seed=wave.modes, omega_seed=wave.omega, **kw,
        )
    kw = {"mass": None if wave.mass is None else wave.mass.copy(),
          "energy": wave.energy}
    if name.startswith("M"):
        i = int(name[1:])
        kw["mass"] = kw["mass"].copy()
        kw["mass"][i] += float(delta)
    elif name == "E":
        kw["energy"] = kw["energy"] + float(delta)
    kw = {a: b for a, b in kw.items() if b is not None}
    return solve_wave(sys, (wave.p, wave.N), seed=wave.modes, omega_seed=wave.omega, **kw)


def _observables(sys, wave) -> dict:
    fx = averaged_fluxes(sys, wave)
    obs = {"omega": wave.omega}
    if fx["F"] is not None:
        obs["F"] = fx["F"]
    if fx["S"] is not None:
        obs["S"] = fx["S"]
    return obs


def flux_derivatives_fd(sys, wave, h: float = 1e-3) -> tuple[dict, dict]:
    """Richardson finite differences of (omega, F, S) over fresh solves.

    Returns (derivatives, step_disagreement); the latter records
    ``|D(h) - D(h/2)|`` per entry for consistency reporting.
    """
    out: dict = {}
    spread: dict = {}

    def central(name, step):
        if name == "k":
            delta = Fraction(step).limit_denominator(1 << 16)
            lo = _wave_at(sys, wave, name, -delta)
            hi = _wave_at(sys, wave, name, +delta)
            dd = float(delta)
        else:
            lo = _wave_at(sys, wave, name, -step)
            hi = _wave_at(sys, wave, name, +step)
            dd = step
        o_lo, o_hi = _observables(sys, lo), _observables(sys, hi)
        return {q: (o_hi[q] - o_lo[q]) / (2 * dd) for q in o_hi}

    for name in wave_parameters(sys):
        d1 = central(name, h)
        d2 = central(name, h / 2)
        out[name] = {q: (4 * d2[q] - d1[q]) / 3 for q in d1}
        spread[name] = {q: float(np.max(np.abs(d1[q] - d2[q]))) for q in d1}
    return out, spread


# ---------------------------------------------------------------------------
# modulation Jacobian assembly and hyperbolicity


@dataclass
class WhithamJacobian:
    """Linearized modulation matrix, its speeds, and the hyperbolicity verdict."""

    params: list[str]
    G: np.ndarray
    speeds: np.ndarray
    verdict: str
    sign_variant: Optional[int] = None
    diagnostics: dict = field(default_factory=dict)


def char_speeds(G: np.ndarray) -> tuple[np.ndarray, str]:
    """Eigenvalues of G and the hyperbolicity verdict."""
    lams, _ = eig_dense(np.asarray(G, dtype=complex))
    lams = lams[np.argsort(lams.real)]
    scale = np.maximum(1.0, np.abs(lams))
    if np.any(np.abs(lams.imag) > 1e-6 * scale):
        return lams, "non-hyperbolic"
    real = np.all(np.abs(lams.imag) <= 1e-8)
    sep = np.min(np.abs(np.subtract.outer(lams, lams))[~np.eye(len(lams), dtype=bool)]) if len(lams) > 1 else np.inf
    distinct = sep > 1e-8 * max(1.0, float(np.max(np.abs(lams))))
    if real and distinct:
        return lams, "strict"
    return lams, "weak"


def _assemble(sys, derivs: dict, params: list[str], sign: int = -1):
    """Rows: [d omega]; [sign * B dF]; [dS] (last two where present)."""
    n = len(params)
    G = np.zeros((n, n))
    G[0] = [derivs[p]["omega"] for p in params]
    if sys.kind == "rd":
        return G
    if sys.kind == "mixed":
        for i in range(sys.d1):
            G[1 + i] = [-derivs[p]["F"][i] for p in params]
        return G
    dF = np.array([derivs[p]["F"] for p in params]).T
    G[1:1 + sys.d] = sign * (sys.Bmat @ dF)
    G[-1] = [derivs[p]["S"] for p in params]
    return G


def whitham_jacobian(sys, wave, wd=None, *, derivatives=None, fd_check: bool = True):
    """Assemble the modulation Jacobian(s) with two-route derivative audit.

    Returns one WhithamJacobian for RD/Mixed; a list of two (sign variants
    -1 and +1 on the mass-flux row) for Hamiltonian chains.  Route
    agreement between integrand calculus and Richardson continuation
    differences is recorded in diagnostics.
    """
    params = wave_parameters(sys)
    if derivatives is None:
        derivatives = flux_derivatives(sys, wave, wd=wd)
    diag: dict = {"route": "integrand"}
    if fd_check:
        fd, spread = flux_derivatives_fd(sys, wave)
        worst = 0.0
        for p in params:
            for q, val in derivatives[p].items():
                ref = np.asarray(fd[p][q])
                err = np.max(np.abs(np.asarray(val) - ref))
                rel = err / max(1.0, float(np.max(np.abs(ref))))
                worst = max(worst, rel)
        diag["fd_agreement"] = worst
        diag["fd_step_spread"] = max(
            v for per in spread.values() for v in per.values()
        )
    missing = [p for p in params if p not in derivatives]
    if missing:
        raise DerivativeUnavailable("no derivatives for parameters", missing=missing)

    if sys.kind in ("rd", "mixed"):
        G = _assemble(sys, derivatives, params)
        speeds, verdict = char_speeds(G)
        return WhithamJacobian(params, G, speeds, verdict, diagnostics=diag)
    out = []
    for sign in (-1, +1):
        G = _assemble(sys, derivatives, params, sign=sign)
        speeds, verdict = char_speeds(G)
        out.append(
            WhithamJacobian(params, G, speeds, verdict, sign_variant=sign,
                            diagnostics=dict(diag))
        )
    return out
