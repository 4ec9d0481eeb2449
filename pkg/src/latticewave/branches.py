"""Critical spectral branches of the Bloch monodromy family.

Near exponent zero the monodromy has a cluster of multipliers at 1 whose
size equals the number of wave parameters (translation plus conserved
quantities).  This module tracks those multipliers over an exponent grid
with eigenvector-overlap continuation, and isolates the cluster with a
Riesz contour projector to expose the finite pencil driving the
long-wavelength expansion.

Branch identity near a defective origin cannot be decided by eigenvalue
distance: sublattice symmetries can park a non-critical multiplier
exactly at 1 (wavenumber 1/4 does).  Selection therefore scores
eigenvectors against the adjoint-kernel lifts, which are biorthogonal
to every non-critical eigenvector, and continuation matches vectors.
Labels within the selected cluster follow velocity continuity: the
conjugate-pair eigenvectors of an unstable cluster collapse onto the
same real subspace as the exponent shrinks, so overlaps alone swap
labels at noise-level margins while the velocities stay far apart.

The Riesz basis is gauge-fixed in the Kato style: columns are projected
continuations of the lifted tangent vectors (the phase column carries the
``i xi`` tilt of the wavenumber derivative), dual rows are projected
adjoint lifts biorthonormalized through their Gram matrix, so every
scale ambiguity cancels in the reported pencil.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import (
    BranchCountMismatch,
    ContourTooClose,
    MatchingAmbiguity,
    NoConvergence,
    ProjectorRankMismatch,
)
from .linearize import lift, wave_derivatives
from .monodromy import monodromy, symbol_generator
from .systems import wave_parameters

__all__ = [
    "eig_dense",
    "SpectralBranch",
    "TrackResult",
    "track_branches",
    "auto_eps0",
    "RieszBlock",
    "riesz_block",
]


def eig_dense(S: np.ndarray, residual_tol: float = 1e-9):
    """Eigendecomposition with a per-pair residual contract.

    Raises NoConvergence if LAPACK fails or any pair's residual exceeds
    ``residual_tol * max(1, ||S||_2)``.
    """
    try:
        lams, vecs = scipy.linalg.eig(S)
    except scipy.linalg.LinAlgError as exc:
        raise NoConvergence("dense eigensolve failed", detail=str(exc))
    scale = max(1.0, float(np.linalg.norm(S, 2)))
    resid = np.linalg.norm(S @ vecs - vecs * lams[None, :], axis=0)
    worst = float(np.max(resid))
    if worst > residual_tol * scale:
        raise NoConvergence("eigenpair residual above contract", residual=worst)
    return lams, vecs


@dataclass
class SpectralBranch:
    """One tracked multiplier branch on one sign side of the exponent grid."""

    label: int
    side: int
    xis: np.ndarray
    multipliers: np.ndarray
    vectors: np.ndarray
    overlaps: np.ndarray

    def velocities(self, omega: float) -> np.ndarray:
        """Branch velocities ``|omega| Log lam / (i xi)`` (forward period)."""
        return abs(omega) * np.log(self.multipliers) / (1j * self.xis)


@dataclass
class TrackResult:
    branches: list[SpectralBranch]
    n_cluster: int
    liouville_max: float
    monodromies: dict = field(default_factory=dict)
    refined_points: int = 0


def _mono_worker(payload):
    sys, wave, xi, tol = payload
    gen = symbol_generator(sys, wave, xi)
    m = monodromy(gen, tol=tol)
    return xi, m


def _subspace_scores(Q: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    return np.linalg.norm(Q.conj().T @ vecs, axis=0)


def track_branches(
    sys,
    wave,
    xis,
    *,
    tol: float = 1e-10,
    n_branches: Optional[int] = None,
    anchors: Optional[np.ndarray] = None,
    wd=None,
    overlap_threshold: float = 0.7,
    cluster_radius: float = 0.9,
    max_refine: int = 6,
    jobs: int = 1,
) -> TrackResult:
    """Track the critical multiplier cluster over the exponent grid.

    ``xis`` may mix signs; each sign side is continued outward from zero
    independently.  Returns one branch per (cluster index, side).
    """
    p, N = wave.require_rational()
    n = n_branches or len(wave_parameters(sys))
    if anchors is None:
        # adjoint-kernel lifts: right eigenvectors of non-critical
        # multipliers are biorthogonal to these, so their scores vanish
        # as xi -> 0 while the critical cluster scores stay O(1); the
        # right-kernel lifts cannot separate the two in the non-normal
        # regimes (internal modes align with the Jordan cluster)
        if wd is None:
            wd = wave_derivatives(sys, wave)
        cols = [lift(wd.u_ad, 0.0, p, N, wave.omega)]
        for e in wd.cokernel.get("constants", []):
            cols.append(lift(e, 0.0, p, N, wave.omega))
        if "variational" in wd.cokernel:
            cols.append(lift(wd.cokernel["variational"], 0.0, p, N, wave.omega))
        anchors = np.stack(cols, axis=1)
    Q, _ = np.linalg.qr(anchors)

    xis = sorted(set(float(x) for x in xis), key=abs)
    if any(x == 0.0 for x in xis):
        raise ValueError("exponent grid must not contain 0; the cluster is defective there")

    cache: dict[float, tuple] = {}

    def get(xi: float):
        if xi not in cache:
            gen = symbol_generator(sys, wave, xi)
            m = monodromy(gen, tol=tol)
            lams, vecs = eig_dense(m.S)
            cache[xi] = (m, lams, vecs / np.linalg.norm(vecs, axis=0))
        return cache[xi]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            for xi, m in ex.map(_mono_worker, [(sys, wave, x, tol) for x in xis]):
                lams, vecs = eig_dense(m.S)
                cache[xi] = (m, lams, vecs / np.linalg.norm(vecs, axis=0))

    refined = 0
    branches: list[SpectralBranch] = []
    for side in (1, -1):
        side_xis = [x for x in xis if np.sign(x) == side]
        if not side_xis:
            continue
        side_xis.sort(key=abs)

        aom = abs(wave.omega)

        def velocities_of(lams_sel: np.ndarray, xi: float) -> np.ndarray:
            return aom * np.log(lams_sel) / (1j * xi)

        def cluster_at(xi: float, prev):
            """Select the n cluster pairs at xi given the previous point.

            All eigenpairs are candidates: at outer grid points the
            critical multipliers drift far from 1, so proximity cannot
            gate the selection, only the eigenvector overlap can.
            Membership is decided by overlap; labels within the selected
            set are then re-assigned by velocity continuity.
            """
            _, lams, vecs = get(xi)
            if prev is None:
                scores = _subspace_scores(Q, vecs)
                order = np.argsort(scores)[::-1]
                chosen = order[:n]
                got = scores[order[n - 1]]
                # biorthogonality separates cluster from rest: accept a
                # clean bipartition even when the absolute score is low
                runner_up = scores[order[n]] if len(order) > n else 0.0
                if got < overlap_threshold and got < 2.0 * runner_up:
                    return None, float(got)
                ovl = scores[chosen]
            else:
                prev_vecs, prev_lams, prev_xi = prev
                chosen = np.empty(n, dtype=int)
                ovl = np.empty(n)
                taken: set[int] = set()
                for b in range(n):
                    o = np.abs(vecs.conj().T @ prev_vecs[:, b])
                    for i in np.argsort(o)[::-1]:
                        if i not in taken:
                            break
                    chosen[b] = i
                    taken.add(int(i))
                    ovl[b] = o[i]
                if np.min(ovl) < overlap_threshold:
                    return None, float(np.min(ovl))
                v_prev = velocities_of(prev_lams, prev_xi)
                v_new = velocities_of(lams[chosen], xi)
                best = min(
                    permutations(range(n)),
                    key=lambda perm: float(
                        np.sum(np.abs(v_new[list(perm)] - v_prev))
                    ),
                )
                chosen = chosen[list(best)]
                ovl = ovl[list(best)]
            return (lams[chosen], vecs[:, chosen]), float(np.min(ovl))

        # count sanity at the innermost point: the critical cluster must
        # supply at least n multipliers within cluster_radius of 1 there
        _, lams0, _ = get(side_xis[0])
        found = int(np.sum(np.abs(lams0 - 1.0) <= cluster_radius))
        if found < n:
            raise BranchCountMismatch(
                "too few multipliers near 1 at the innermost exponent",
                xi=side_xis[0], found=found, expected=n,
            )

        # walk outward with on-demand midpoint refinement
        rows: list[tuple[float, np.ndarray, np.ndarray, float]] = []
        prev = None
        prev_xi = 0.0
        for target in side_xis:
            pending = [target]
            depth = 0
            while pending:
                xi = pending[-1]
                got, score = cluster_at(xi, prev)
                if got is None:
                    depth += 1
                    refined += 1
                    if depth > max_refine:
                        raise MatchingAmbiguity(
                            "branch continuation lost identity",
                            xi=xi, overlap=score, threshold=overlap_threshold,
                        )
                    pending.append(0.5 * (prev_xi + xi))
                    continue
                pending.pop()
                lams_sel, vecs_sel = got
                prev = (vecs_sel, lams_sel, xi)
                prev_xi = xi
                if xi == target:
                    rows.append((xi, lams_sel, vecs_sel, score))
        for b in range(n):
            branches.append(
                SpectralBranch(
                    label=b,
                    side=side,
                    xis=np.array([r[0] for r in rows]),
                    multipliers=np.array([r[1][b] for r in rows]),
                    vectors=np.stack([r[2][:, b] for r in rows]),
                    overlaps=np.array([r[3] for r in rows]),
                )
            )

    liouville_max = max(m.liouville_rel_error for m, _, _ in cache.values())
    return TrackResult(
        branches=branches,
        n_cluster=n,
        liouville_max=float(liouville_max),
        monodromies={xi: m for xi, (m, _, _) in cache.items()},
        refined_points=refined,
    )


def auto_eps0(lams: np.ndarray, n: int) -> float:
    """Half the gap from 1 to the nearest non-cluster multiplier."""
    dist = np.sort(np.abs(lams - 1.0))
    if len(dist) <= n:
        raise BranchCountMismatch("no non-cluster multiplier to set the contour by")
    return 0.5 * float(dist[n])


@dataclass
class RieszBlock:
    """Finite pencil of the critical cluster at one exponent."""

    xi: float
    eps0: float
    basis: np.ndarray
    duals: np.ndarray
    Omega: np.ndarray
    Omega_tilde: np.ndarray
    projector_trace: complex
    contour_points: int
    cluster_multipliers: np.ndarray


def riesz_block(
    sys,
    wave,
    xi: float,
    eps0: Optional[float] = None,
    *,
    wd=None,
    S_xi: Optional[np.ndarray] = None,
    tol: float = 1e-10,
    contour_start: int = 32,
    contour_tol: float = 1e-9,
    contour_cap: int = 512,
) -> RieszBlock:
    """Riesz projector onto the critical cluster and the scaled pencil.

    The pencil is ``Omega = <dual_a, (S_xi - I) q_b>`` in the gauge-fixed
    basis; ``Omega_tilde = Sigma^{-1} Omega Sigma / (i xi)`` with
    ``Sigma = diag(1/(i xi), 1, ..., 1)`` converges to the averaged
    modulation matrix over the frequency as xi -> 0.
    """
    p, N = wave.require_rational()
    if wd is None:
        wd = wave_derivatives(sys, wave)
    n = len(wd.params)
    if S_xi is None:
        S_xi = monodromy(symbol_generator(sys, wave, xi), tol=tol).S
    dim = S_xi.shape[0]
    lams = scipy.linalg.eigvals(S_xi)
    if eps0 is None:
        eps0 = auto_eps0(lams, n)
    dist = np.abs(lams - 1.0)
    ring_gap = np.min(np.abs(dist - eps0))
    if ring_gap < 0.1 * eps0:
        raise ContourTooClose(
            "a multiplier sits within 10% of the contour radius",
            eps0=eps0, gap=float(ring_gap),
        )
    inside = np.nonzero(dist < eps0)[0]
    if inside.size != n:
        raise BranchCountMismatch(
            "cluster count inside contour is off",
            found=int(inside.size), expected=n, eps0=eps0,
        )

    eye = np.eye(dim, dtype=complex)

    def projector(m_points: int) -> np.ndarray:
        phis = 2 * np.pi * np.arange(m_points) / m_points
        acc = np.zeros((dim, dim), dtype=complex)
        for phi in phis:
            z = 1.0 + eps0 * np.exp(1j * phi)
            acc += eps0 * np.exp(1j * phi) * np.linalg.solve(z * eye - S_xi, eye)
        return acc / m_points

    m_points = contour_start
    P = projector(m_points)
    while True:
        if 2 * m_points > contour_cap:
            raise NoConvergence(
                "contour quadrature failed to settle", points=m_points
            )
        P2 = projector(2 * m_points)
        m_points *= 2
        settled = np.linalg.norm(P2 - P) <= contour_tol
        P = P2
        if settled:
            break

    tr = complex(np.trace(P))
    if abs(tr - n) > 1e-6:
        raise ProjectorRankMismatch(
            "projector trace far from cluster size", trace=tr, expected=n
        )

    up_lift = lift(wave.uprime(), 0.0, p, N, wave.omega)
    dk_lift = lift(wd.d_u["k"], 0.0, p, N, wave.omega)
    cols = [P @ (up_lift + 1j * xi * dk_lift)]
    for name in wd.params:
        if name != "k":
            cols.append(P @ lift(wd.d_u[name], 0.0, p, N, wave.omega))
    Qb = np.stack(cols, axis=1)

    raw = [lift(wd.u_ad, 0.0, p, N, wave.omega)]
    for e in wd.cokernel.get("constants", []):
        raw.append(lift(e, 0.0, p, N, wave.omega))
    if "variational" in wd.cokernel:
        raw.append(lift(wd.cokernel["variational"], 0.0, p, N, wave.omega))
    D = P.conj().T @ np.stack(raw, axis=1)
    gram = D.conj().T @ Qb
    try:
        D = D @ np.linalg.inv(gram).conj().T
    except np.linalg.LinAlgError:
        raise ProjectorRankMismatch("dual/basis Gram matrix is singular")

    Omega = D.conj().T @ (S_xi - eye) @ Qb
    sig = np.ones(n, dtype=complex)
    sig[0] = 1.0 / (1j * xi)
    Omega_tilde = (Omega * sig[None, :] / sig[:, None]) / (1j * xi)
    return RieszBlock(
        xi=xi, eps0=float(eps0), basis=Qb, duals=D, Omega=Omega,
        Omega_tilde=Omega_tilde, projector_trace=tr,
        contour_points=m_points, cluster_multipliers=lams[inside],
    )
