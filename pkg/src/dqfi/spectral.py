"""Biorthogonal eigensystem of the Liouvillian and exceptional-point tools.

The supermatrix L is non-Hermitian, so its right eigenvectors |phi_n>>
(L phi = L_n phi) and left eigenvectors |chi_n>> (L^dag chi = L_n* chi)
are paired by conjugate eigenvalue matching and rescaled so that
<<chi_n|phi_m>> = delta_nm.  At a Liouvillian exceptional point (LEP) two
eigenvalues and their eigenvectors coalesce, the basis becomes defective,
and an order-2 Jordan chain restores completeness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .linalg import SingularMatrixError, as_cmatrix, eig_general, pinv, solve
from .model import LiouvillianMatrix

DEFAULT_VEC_TOL = 1e-4
COALESCENCE_WARN = 0.99
CONDITION_WARN = 1e6


class SpectralError(RuntimeError):
    """Pairing or conditioning failure in the biorthogonal construction."""


@dataclass(frozen=True)
class EpCluster:
    """A group of coalescing eigenvalues (order >= 2)."""

    indices: tuple[int, ...]
    value: complex
    order: int
    coalescence: float
    jordan_chain: Optional[tuple[np.ndarray, ...]] = None


@dataclass(frozen=True)
class BiorthogonalSpectrum:
    """Eigenvalues with paired right/left eigenvectors of a Liouvillian.

    values are sorted by descending real part (ties: ascending imaginary
    part), so the steady state sits first.  right[:, n] has unit Euclidean
    norm; left[:, n] is scaled so <<chi_n|phi_m>> = delta_nm away from EPs.
    """

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    dim: int
    condition: float
    ep_clusters: tuple[EpCluster, ...] = ()
    ill_conditioned: bool = False

    @property
    def size(self) -> int:
        return self.values.size

    def x(self) -> np.ndarray:
        """Real parts of the eigenvalues."""
        return self.values.real.copy()

    def y(self) -> np.ndarray:
        """Imaginary parts of the eigenvalues."""
        return self.values.imag.copy()

    def upsilon(self, n: int, m: int) -> float:
        """x_n - x_m."""
        return float(self.values[n].real - self.values[m].real)

    def beta(self, n: int, m: int) -> float:
        """y_n - y_m."""
        return float(self.values[n].imag - self.values[m].imag)

    def left_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.left) ** 2, axis=0))

    def steady_state(self) -> np.ndarray:
        """Unit-norm right eigenvector of the zero eigenvalue."""
        if abs(self.values[0]) > 1e-6 * max(1.0, float(np.max(np.abs(self.values)))):
            raise SpectralError("leading eigenvalue is not zero; no steady state")
        return self.right[:, 0].copy()

    def has_ep(self) -> bool:
        return bool(self.ep_clusters)


def _sort_order(values: np.ndarray) -> np.ndarray:
    """Descending real part; near-ties resolved by ascending imaginary part."""
    order = list(np.lexsort((values.imag, -values.real)))
    tol = 1e-9 * max(1.0, float(np.max(np.abs(values))) if values.size else 0.0)
    start = 0
    while start < len(order):
        stop = start + 1
        while (stop < len(order)
               and values[order[stop]].real >= values[order[start]].real - tol):
            stop += 1
        order[start:stop] = sorted(order[start:stop], key=lambda i: values[i].imag)
        start = stop
    return np.array(order)


def _angle_sine(u: np.ndarray, v: np.ndarray) -> float:
    """Sine of the principal angle between two unit vectors."""
    ov = abs(np.vdot(u, v))
    return float(math.sqrt(max(0.0, 1.0 - min(1.0, ov) ** 2)))


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    """Group indices of (sorted) values within tol of a chain neighbor."""
    groups: list[list[int]] = []
    for i in range(values.size):
        if groups and abs(values[i] - values[groups[-1][-1]]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def detect_eps(spectrum: "BiorthogonalSpectrum", eig_tol: Optional[float] = None,
               vec_tol: float = DEFAULT_VEC_TOL) -> list[EpCluster]:
    """Find clusters of equal eigenvalues whose eigenvectors coalesce.

    Degenerate but diagonalizable clusters (independent eigenvectors) are
    not exceptional points and are not reported.
    """
    values, right = spectrum.values, spectrum.right
    scale = max(float(np.max(np.abs(values))), 1e-30)
    tol = eig_tol if eig_tol is not None else 1e-7 * scale
    out = []
    for group in _cluster(values, tol):
        if len(group) < 2:
            continue
        sines = [_angle_sine(right[:, i], right[:, j])
                 for a, i in enumerate(group) for j in group[a + 1:]]
        if min(sines) < vec_tol:
            out.append(EpCluster(
                indices=tuple(group),
                value=complex(np.mean(values[group])),
                order=len(group),
                coalescence=1.0 - min(sines),
            ))
    return out


def biorthogonal_spectrum(liou, eig_tol: Optional[float] = None,
                          vec_tol: float = DEFAULT_VEC_TOL) -> BiorthogonalSpectrum:
    """Construct the full biorthogonal eigensystem of a Liouvillian.

    Right vectors come from the eigendecomposition of L, left vectors from
    L^dag; clusters are paired by conjugate eigenvalue matching and the
    left block of each cluster is rescaled so <<chi_n|phi_m>> = delta_nm.
    EP clusters are flagged and left unnormalized (the chain machinery
    takes over there).
    """
    lmat = liou.matrix if isinstance(liou, LiouvillianMatrix) else as_cmatrix(liou, square=True)
    n = lmat.shape[0]
    res_r = eig_general(lmat)
    res_l = eig_general(lmat.conj().T)

    order_r = _sort_order(res_r.values)
    values = res_r.values[order_r]
    right = res_r.right_vectors[:, order_r]
    # left eigenvalues approximate conj(values); sort with the same key
    lvals_conj = np.conj(res_l.values)
    order_l = _sort_order(lvals_conj)
    lvals = lvals_conj[order_l]
    left = res_l.right_vectors[:, order_l]

    scale = max(float(np.max(np.abs(values))), 1e-30)
    tol = eig_tol if eig_tol is not None else 1e-7 * scale
    pair_dev = float(np.max(np.abs(values - lvals)))
    if pair_dev > 100 * tol:
        raise SpectralError(
            f"left/right eigenvalue pairing failed (max deviation {pair_dev:.2e})")

    groups = _cluster(values, tol)
    probe = BiorthogonalSpectrum(values=values, right=right, left=left,
                                 dim=int(round(math.sqrt(n))), condition=0.0)
    clusters = {tuple(g.indices): g for g in
                (detect_eps(probe, eig_tol=eig_tol, vec_tol=vec_tol))}
    flagged: set[int] = set()
    for cl in clusters.values():
        flagged.update(cl.indices)

    left_scaled = left.astype(complex).copy()
    for group in groups:
        if any(i in flagged for i in group):
            continue  # EP cluster: biorthogonalization is singular there
        idx = np.array(group)
        overlap = left[:, idx].conj().T @ right[:, idx]
        try:
            # want X' = X (S^dag)^-1 so that X'^dag Phi = I on the cluster
            corr = solve(overlap.conj().T, np.eye(len(group), dtype=complex))
        except SingularMatrixError as exc:
            raise SpectralError(
                f"near-singular eigenvector cluster at {values[idx[0]]:.6g}; "
                "treat as an exceptional point") from exc
        left_scaled[:, idx] = left[:, idx] @ corr

    cond = float(np.max(np.sqrt(np.sum(np.abs(left_scaled) ** 2, axis=0))))
    ill = cond > CONDITION_WARN
    # near-EP conditioning check: almost-coalescing vectors escape the EP
    # eigenvalue clustering but leave gigantic left vectors behind
    for i in range(n):
        for j in range(i + 1, n):
            if i in flagged and j in flagged:
                continue
            if 1.0 - _angle_sine(right[:, i], right[:, j]) > COALESCENCE_WARN:
                ill = True
    return BiorthogonalSpectrum(
        values=values, right=right, left=left_scaled,
        dim=int(round(math.sqrt(n))), condition=cond,
        ep_clusters=tuple(clusters.values()), ill_conditioned=ill,
    )


def jordan_chain(lmat, cluster: EpCluster) -> EpCluster:
    """Build the order-2 Jordan chain {phi, phi'} of a defective pair.

    phi spans the (one-dimensional) null space of (L - lambda I) and phi'
    solves (L - lambda I) phi' = phi in the least-squares sense.
    """
    lmat = lmat.matrix if isinstance(lmat, LiouvillianMatrix) else as_cmatrix(lmat, square=True)
    if cluster.order != 2:
        raise SpectralError(f"only order-2 chains are supported, got order {cluster.order}")
    n = lmat.shape[0]
    lam = cluster.value
    shifted = lmat - lam * np.eye(n, dtype=complex)
    scale = max(float(np.max(np.abs(shifted))), 1e-30)
    if cluster.coalescence < COALESCENCE_WARN:
        raise SpectralError("cluster is not defective; no Jordan chain needed")
    # inverse iteration refines the null direction far beyond the raw
    # eigenvector accuracy (defective pairs carry O(sqrt(eps)) errors)
    # regularization dominating the defective O(eps^2) singular value of
    # A^dag A while staying far below the next one (O(scale^2))
    reg = 1e-13 * scale ** 2
    gram = shifted.conj().T @ shifted + reg * np.eye(n, dtype=complex)

    def _null_vector(seed: np.ndarray) -> np.ndarray:
        v = seed / np.sqrt(np.real(np.vdot(seed, seed)))
        for _ in range(3):
            v = solve(gram, v)
            v = v / np.sqrt(np.real(np.vdot(v, v)))
        return v

    phi = _null_vector(np.ones(n, dtype=complex))
    if float(np.max(np.abs(shifted @ phi))) > 1e-7 * scale:
        for k in range(n):  # the all-ones seed was (nearly) null-orthogonal
            phi = _null_vector(np.eye(n, dtype=complex)[:, k])
            if float(np.max(np.abs(shifted @ phi))) <= 1e-7 * scale:
                break
        else:
            raise SpectralError("could not isolate the null direction of (L - lambda I)")
    i = int(np.argmax(np.abs(phi)))
    phi = phi / (phi[i] / abs(phi[i]))
    gen = pinv(shifted, reg) @ phi
    residual = float(np.max(np.abs(shifted @ gen - phi)))
    if residual > 1e-6 * max(1.0, float(np.max(np.abs(gen)))):
        raise SpectralError(
            f"(L - lambda) x = phi is inconsistent (residual {residual:.2e}); "
            "the cluster does not carry an order-2 chain")
    # gauge freedom phi' -> phi' + c*phi: fix by orthogonality to phi
    gen = gen - np.vdot(phi, gen) * phi
    return replace(cluster, jordan_chain=(phi, gen))


def attach_chains(spectrum: BiorthogonalSpectrum, lmat) -> BiorthogonalSpectrum:
    """Return a spectrum whose EP clusters all carry Jordan chains."""
    chains = tuple(jordan_chain(lmat, c) if c.jordan_chain is None else c
                   for c in spectrum.ep_clusters)
    return replace(spectrum, ep_clusters=chains)


def chain_completed_basis(spectrum: BiorthogonalSpectrum):
    """Chain-completed transformation S (columns), its inverse, and blocks.

    Returns (s, s_inv, blocks) where blocks is a list of
    (eigenvalue, start_column, size); size 2 marks a Jordan block.  The
    rows of s_inv are the matching left vectors, so completeness holds by
    construction.
    """
    n = spectrum.size
    in_cluster = {}
    for cl in spectrum.ep_clusters:
        if cl.jordan_chain is None:
            raise SpectralError("EP cluster lacks a Jordan chain; call jordan_chain first")
        for i in cl.indices:
            in_cluster[i] = cl
    s = np.zeros((n, n), dtype=complex)
    blocks = []
    col = 0
    seen: set[int] = set()
    for i in range(n):
        if i in seen:
            continue
        cl = in_cluster.get(i)
        if cl is None:
            s[:, col] = spectrum.right[:, i]
            blocks.append((complex(spectrum.values[i]), col, 1))
            col += 1
        else:
            phi, gen = cl.jordan_chain
            s[:, col] = phi
            s[:, col + 1] = gen
            blocks.append((complex(cl.value), col, 2))
            col += 2
            seen.update(cl.indices)
    s_inv = solve(s, np.eye(n, dtype=complex))
    return s, s_inv, blocks


def splitting_susceptibility(omega: float, gamma_x: float) -> tuple[complex, float]:
    """Dissipative spectral splitting 2*sqrt(gx^2-w^2) and |d splitting/dw|.

    The susceptibility diverges at the LEP gamma_x = omega; the divergence
    is returned as math.inf rather than raised.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if gamma_x < 0:
        raise ValueError("gamma_x must be non-negative")
    disc = complex(gamma_x ** 2 - omega ** 2)
    root = np.sqrt(disc)
    splitting = 2.0 * root
    if abs(root) == 0.0:
        return complex(splitting), math.inf
    return complex(splitting), float(abs(2.0 * omega / root))


def pi_eigenmatrix(spectrum: BiorthogonalSpectrum, n: int, m: int):
    """Eigenmatrix |phi_n>><<chi_m| of the commutator superoperator.

    Its eigenvalue under Y -> [L, Y] is L_n - L_m.
    """
    if not (0 <= n < spectrum.size and 0 <= m < spectrum.size):
        raise IndexError("eigenmatrix indices out of range")
    mat = np.outer(spectrum.right[:, n], spectrum.left[:, m].conj())
    return mat, complex(spectrum.values[n] - spectrum.values[m])
