"""Wavetrain profiles: Newton solution, continuation, rational wavenumbers.

A wavetrain ``U_j(t) = u(k j + omega t)`` is determined by its profile
modes and frequency together with the class-specific parameters (mass
averages for the conservative components, energy for Hamiltonian chains).
The collocation system is square once the degenerate mean rows are
replaced by the conserved-quantity constraints and the phase is pinned;
see the layout builder in :mod:`latticewave.linearize`.

Two solve modes:

* standard: wavenumber plus conserved quantities given, find (u, omega);
* pinned: wavenumber plus a first-harmonic amplitude pin given, find the
  conserved quantities along with the wave (used to step off a bifurcation
  point where the target mass/energy is not known in advance).

Wavenumbers are exact rationals p/N; floats are accepted only when they
convert exactly (dyadics like 0.25) or when ``allow_irrational`` is set,
in which case lattice-side operations are unavailable for the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
import scipy.linalg

from . import fourier
from .errors import (
    IrrationalWavenumber,
    NoConvergence,
    NonFiniteState,
    NormalizationViolated,
    SingularJacobian,
    StepUnderflow,
)
from .linearize import SolveLayout, _layout, newton_jacobian, newton_residual
from .systems import (
    conserved_components,
    energy_mean,
    residual_modes,
    variational_derivative,
)

__all__ = ["WaveProfile", "as_rational", "solve_wave", "continue_family", "residual_sup_norm"]

MAX_EXACT_DENOMINATOR = 1 << 20


def as_rational(wavenumber) -> tuple[int, int]:
    """Normalize a wavenumber to coprime (p, N) with N > 0.

    Accepts (p, N) pairs, Fractions, strings like "1/6", and floats that
    are exactly dyadic rationals; anything else raises
    IrrationalWavenumber.
    """
    if isinstance(wavenumber, tuple):
        frac = Fraction(int(wavenumber[0]), int(wavenumber[1]))
    elif isinstance(wavenumber, Fraction):
        frac = wavenumber
    elif isinstance(wavenumber, str):
        frac = Fraction(wavenumber)
    elif isinstance(wavenumber, int):
        frac = Fraction(wavenumber)
    elif isinstance(wavenumber, float):
        frac = Fraction(wavenumber)
        if frac.denominator > MAX_EXACT_DENOMINATOR:
            raise IrrationalWavenumber(
                "float wavenumber is not an exact small rational; pass (p, N)",
                value=wavenumber,
            )
    else:
        raise IrrationalWavenumber("unsupported wavenumber type", value=repr(wavenumber))
    if frac == 0:
        raise IrrationalWavenumber("wavenumber must be nonzero")
    return frac.numerator, frac.denominator


@dataclass
class WaveProfile:
    """Converged wavetrain: modes, frequency, and conserved parameters."""

    k: float
    modes: np.ndarray
    omega: float
    p: Optional[int] = None
    N: Optional[int] = None
    mass: Optional[np.ndarray] = None
    energy: Optional[float] = None
    residual_sup: float = float("nan")
    iterations: int = 0
    slack: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return (self.modes.shape[0] - 1) // 2

    @property
    def d(self) -> int:
        return self.modes.shape[1]

    @property
    def speed(self) -> float:
        return -self.omega / self.k

    def require_rational(self) -> tuple[int, int]:
        if self.p is None or self.N is None:
            raise IrrationalWavenumber(
                "lattice-side operation needs an exact rational wavenumber",
                k=self.k,
            )
        return self.p, self.N

    def uprime(self) -> np.ndarray:
        return fourier.dz(self.modes)

    def on_grid(self, M: Optional[int] = None) -> np.ndarray:
        if M is None:
            M = fourier.grid_size(self.K)
        return fourier.to_grid(self.modes, M).real


def residual_sup_norm(sys, u: np.ndarray, k: float, omega: float) -> float:
    """Sup norm of the profile residual on the dealiased grid."""
    K = (u.shape[0] - 1) // 2
    res = residual_modes(sys, u, k, omega)
    return float(np.max(np.abs(fourier.to_grid(res, fourier.grid_size(K)))))


class _Iterate:
    """Mutable unknown set mapped onto the layout's solution vector."""

    def __init__(self, lay: SolveLayout, u, omega, mass, energy, slack):
        self.lay = lay
        self.u = u
        self.omega = omega
        self.mass = mass
        self.energy = energy
        self.slack = slack

    def step(self, dx: np.ndarray, scale: float) -> "_Iterate":
        lay = self.lay
        K, d = lay.K, lay.d
        u = self.u + scale * fourier.unpack(dx[: lay.n_modes], K, d)
        u = fourier.hermitify(u)
        omega = self.omega + scale * dx[lay.omega_col]
        mass = None if self.mass is None else self.mass.copy()
        for i, col in enumerate(lay.mass_cols):
            mass[i] = mass[i] + scale * dx[col]
        energy = self.energy
        if lay.energy_col is not None:
            energy = energy + scale * dx[lay.energy_col]
        slack = self.slack
        if lay.slack_col is not None:
            slack = slack + scale * dx[lay.slack_col]
        return _Iterate(lay, u, omega, mass, energy, slack)


def solve_wave(
    sys,
    wavenumber,
    *,
    seed: np.ndarray,
    omega_seed: float,
    mass: Optional[np.ndarray] = None,
    energy: Optional[float] = None,
    amplitude: Optional[float] = None,
    tol: float = 1e-10,
    max_iter: int = 25,
    allow_irrational: bool = False,
) -> WaveProfile:
    """Newton-solve the profile system; see the module docstring for modes."""
    if allow_irrational and isinstance(wavenumber, float):
        p = N = None
        k = float(wavenumber)
    else:
        p, N = as_rational(wavenumber)
        k = p / N
    K = (seed.shape[0] - 1) // 2
    d = seed.shape[1]
    pinned = amplitude is not None
    lay = _layout(sys, K, pinned)

    u0 = fourier.hermitify(np.asarray(seed, dtype=complex))
    if sys.kind == "rd":
        mass_arr = None
    else:
        want = sys.d if sys.kind == "hamiltonian" else sys.d1
        if mass is None:
            if not (pinned and sys.kind == "mixed"):
                raise NoConvergence("mass parameters required for this class")
            mass_arr = np.array([u0[K, c].real for c in conserved_components(sys)])
        else:
            mass_arr = np.array(mass, dtype=float).reshape(want)
    energy_val = energy
    if sys.kind == "hamiltonian" and energy_val is None:
        if not pinned:
            raise NoConvergence("energy parameter required for this class")
        energy_val = energy_mean(sys, u0, k)

    u_ref = u0.copy()
    it = _Iterate(lay, u0, float(omega_seed), mass_arr, energy_val, 0.0)

    def residual(itr: _Iterate):
        slack_dir = (
            variational_derivative(sys, itr.u, k)
            if sys.kind == "hamiltonian"
            else None
        )
        F = newton_residual(
            sys, itr.u, k, itr.omega, lay,
            mass=itr.mass, energy=itr.energy, slack=itr.slack,
            slack_dir=slack_dir, u_ref=u_ref, pin_amplitude=amplitude,
        )
        return F, slack_dir

    F, slack_dir = residual(it)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        if not np.all(np.isfinite(F)):
            raise NonFiniteState("residual has non-finite entries", iteration=n_iter)
        nF = float(np.max(np.abs(F)))
        if nF <= tol:
            break
        J = newton_jacobian(sys, it.u, k, it.omega, lay, u_ref=u_ref, slack_dir=slack_dir)
        try:
            dx = scipy.linalg.solve(J, -F)
        except scipy.linalg.LinAlgError as exc:
            raise SingularJacobian("Newton linear solve failed", iteration=n_iter, detail=str(exc))
        scale = 1.0
        while True:
            trial = it.step(dx, scale)
            Ft, sd = residual(trial)
            if np.all(np.isfinite(Ft)) and float(np.max(np.abs(Ft))) < nF:
                it, F, slack_dir = trial, Ft, sd
                break
            scale *= 0.5
            if scale < 2 ** -12:
                raise NoConvergence(
                    "Newton line search stalled", iteration=n_iter, residual=nF
                )
    else:
        raise NoConvergence(
            "Newton did not reach tolerance",
            iterations=max_iter, residual=float(np.max(np.abs(F))),
        )

    if sys.kind == "hamiltonian" and abs(it.slack) > 1e-8:
        raise NormalizationViolated(
            "energy-slack failed to vanish at convergence", slack=it.slack
        )
    # Newton can fall onto the trivial (mean-only) branch past a fold; the
    # phase condition does not exclude it, so compare oscillation to the seed.
    osc_seed = _oscillation(u0)
    osc = _oscillation(it.u)
    if osc_seed > 0 and osc < 1e-6 * osc_seed:
        raise NoConvergence(
            "profile collapsed to the trivial state",
            oscillation=osc, seed_oscillation=osc_seed,
        )
    rsup = residual_sup_norm(sys, it.u, k, it.omega)
    tail = _tail_fraction(it.u)
    return WaveProfile(
        k=k, modes=it.u, omega=float(it.omega), p=p, N=N,
        mass=None if it.mass is None else np.asarray(it.mass, dtype=float),
        energy=None if it.energy is None else float(it.energy),
        residual_sup=rsup, iterations=n_iter, slack=float(it.slack),
        meta={"K": K, "d": d, "tail_fraction": tail},
    )


def _tail_fraction(u: np.ndarray) -> float:
    K = (u.shape[0] - 1) // 2
    band = max(1, (3 * K) // 4)
    peak = float(np.max(np.abs(u)))
    tail = float(np.max(np.abs(u[K + band:]))) if K + band <= 2 * K else 0.0
    return tail / peak if peak > 0 else 0.0


def _oscillation(u: np.ndarray) -> float:
    """Sup of the non-mean modes; zero only for constant profiles."""
    K = (u.shape[0] - 1) // 2
    osc = u.copy()
    osc[K] = 0.0
    return float(np.max(np.abs(osc)))


def continue_family(
    sys,
    wave: WaveProfile,
    parameter: str,
    values,
    *,
    tol: float = 1e-10,
    max_iter: int = 25,
    max_bisect: int = 6,
) -> list[WaveProfile]:
    """Natural continuation of a converged wave along one parameter.

    ``parameter`` is "k" (values are rationals or floats; floats give
    profile-only waves), one of the mass components "M0", "M1", ..., or
    "E".  On a failed step for a continuous parameter the step is
    bisected up to ``max_bisect`` times; exhaustion raises StepUnderflow
    carrying the partial family in ``exc.diagnostics['partial']``.
    """
    out: list[WaveProfile] = []
    current = wave

    def solve_at(value, seed_wave: WaveProfile) -> WaveProfile:
        kwargs = dict(
            seed=seed_wave.modes, omega_seed=seed_wave.omega,
            tol=tol, max_iter=max_iter,
        )
        mass = None if seed_wave.mass is None else seed_wave.mass.copy()
        energy = seed_wave.energy
        wn = (seed_wave.p, seed_wave.N) if seed_wave.p is not None else seed_wave.k
        allow = False
        if parameter == "k":
            wn = value
            allow = isinstance(value, float)
        elif parameter.startswith("M"):
            mass[int(parameter[1:])] = value
        elif parameter == "E":
            energy = value
        else:
            raise KeyError(f"unknown continuation parameter {parameter!r}")
        return solve_wave(
            sys, wn, mass=mass, energy=energy, allow_irrational=allow, **kwargs
        )

    for value in values:
        stack = [value]
        depth = 0
        while stack:
            target = stack[-1]
            try:
                nxt = solve_at(target, current)
            except (NoConvergence, SingularJacobian) as exc:
                if parameter == "k" or depth >= max_bisect:
                    raise StepUnderflow(
                        "continuation step failed",
                        parameter=parameter, value=target,
                        partial=out, cause=str(exc),
                    )
                prev = _param_value(current, parameter)
                stack.append(0.5 * (prev + target))
                depth += 1
                continue
            stack.pop()
            current = nxt
        out.append(current)
    return out


def _param_value(wave: WaveProfile, parameter: str) -> float:
    if parameter == "k":
        return wave.k
    if parameter.startswith("M"):
        return float(wave.mass[int(parameter[1:])])
    return float(wave.energy)
