"""Quantum Fisher information in Liouville space and in Hilbert space.

The dissipative QFI (DQFI) of a purity-normalized coherence vector
|rho>>_N is 4 Cov(Xi^dag, Xi); its Hilbert-space counterpart (CQFI) comes
from the symmetric logarithmic derivative.  Spectral-decomposition forms
of both, the steady-state limits, the Hermitian-split identity and the
Cramer-Rao bounds live here.

Sign conventions: rho eigenvalues p_k are counted in-support when
p_k > 1e-12 * max(p); elements of the SLD with both indices outside the
support are set to zero (they never contribute to either Fisher value).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .linalg import as_cmatrix, as_cvector, eig_hermitian, kron
from .model import (LiouvilleState, OpenSystemModel, build_liouvillian,
                    d_liouvillian, devectorize, propagate, purity_normalize)
from .spectral import BiorthogonalSpectrum
from .generator import GeneratorPair

SUPPORT_RTOL = 1e-12
IMAG_RESIDUE_TOL = 1e-10
_DEGENERACY_TOL = 1e-8
_EPS = np.finfo(float).eps


class FisherError(RuntimeError):
    """Numerical-health failure in a Fisher-information evaluation."""


@dataclass(frozen=True)
class FisherResult:
    """DQFI (plus diagnostics) at one (theta, t) point."""

    t: float
    dqfi: float
    purity: float
    cqfi: Optional[float] = None
    bound: Optional[float] = None
    route: str = ""
    diagnostics: dict = field(default_factory=dict)
    var_bound: float = math.inf


@dataclass(frozen=True)
class SldPair:
    """Symmetric logarithmic derivatives: Liouville-space and Hilbert-space."""

    dsld: Optional[np.ndarray] = None
    csld: Optional[np.ndarray] = None


def _real_checked(z: complex, context: str) -> float:
    tol = IMAG_RESIDUE_TOL * (1.0 + abs(z))
    if abs(z.imag) > tol:
        raise FisherError(f"{context}: imaginary residue {z.imag:.3e} exceeds tolerance")
    return float(z.real)


def dqfi_covariance(state: LiouvilleState, g: GeneratorPair) -> float:
    """4 [<Xi^dag Xi> - <Xi^dag><Xi>] in a purity-normalized state.

    Evaluated as 4 ||(Xi - <Xi>) v||^2, which is the same covariance but
    dodges the cancellation between the two huge expectation values when
    Xi carries exponentially grown entries (late times, strong damping).
    """
    if not state.normalized:
        raise ValueError("dqfi_covariance expects a purity-normalized state")
    v = state.vector
    w = g.xi @ v
    mean = np.vdot(v, w)
    centered = w - mean * v
    val = 4.0 * float(np.real(np.vdot(centered, centered)))
    # cross-check the literal form; its imaginary part measures rounding health
    direct = 4.0 * (np.vdot(v, g.xi_dag @ w) - np.vdot(v, g.xi_dag @ v) * mean)
    norm_xi = float(np.max(np.abs(g.xi)))
    tol = IMAG_RESIDUE_TOL * (1.0 + abs(val)) + 1e-6 * _EPS * norm_xi ** 2
    if abs(direct.imag) > tol:
        raise FisherError(
            f"dqfi_covariance: imaginary residue {direct.imag:.3e} exceeds tolerance")
    return val


def dqfi_derivative(state: LiouvilleState, dstate) -> float:
    """Fidelity-susceptibility form 4(<d|d> - |<v|d>|^2), normalized gauge."""
    if not state.normalized:
        raise ValueError("dqfi_derivative expects a purity-normalized state")
    d = as_cvector(dstate)
    v = state.vector
    gauge = float(np.real(np.vdot(v, d)))
    if abs(gauge) > 1e-6 * max(1.0, float(np.sqrt(np.real(np.vdot(d, d))))):
        raise ValueError("dstate is not in the normalized gauge (Re<v|dv> != 0)")
    val = 4.0 * (np.real(np.vdot(d, d)) - abs(np.vdot(v, d)) ** 2)
    return float(val)


def normalized_state_derivative(model: OpenSystemModel, theta: float,
                                rho0: LiouvilleState, t: float,
                                h: Optional[float] = None) -> np.ndarray:
    """Central-difference derivative of the purity-normalized state vector."""
    step = h if h is not None else 1e-6 * max(1.0, abs(theta))
    vp = purity_normalize(propagate(build_liouvillian(model, theta + step), rho0, t)).vector
    vm = purity_normalize(propagate(build_liouvillian(model, theta - step), rho0, t)).vector
    return (vp - vm) / (2.0 * step)


def dqfi_via_derivative(model: OpenSystemModel, theta: float, rho0: LiouvilleState,
                        t: float, h: Optional[float] = None) -> float:
    """Pipeline DQFI from propagated states, with an h-halving noise check."""
    step = h if h is not None else 1e-6 * max(1.0, abs(theta))
    state = purity_normalize(propagate(build_liouvillian(model, theta), rho0, t))
    coarse = dqfi_derivative(state, normalized_state_derivative(model, theta, rho0, t, step))
    fine = dqfi_derivative(state, normalized_state_derivative(model, theta, rho0, t, step / 2))
    if abs(coarse - fine) > 1e-5 * max(1.0, abs(fine)):
        raise FisherError(
            f"finite-difference noise {abs(coarse - fine):.3e} above tolerance; "
            "shrink h or use the covariance route")
    # Richardson step: the h and h/2 values are in hand anyway
    return (4.0 * fine - coarse) / 3.0


def dqfi_overall_factor(l_base, state: LiouvilleState, theta: float, t: float) -> float:
    """4 t^2 Cov(L^dag, L) for families L(theta) = theta * L_base."""
    if not state.normalized:
        raise ValueError("dqfi_overall_factor expects a purity-normalized state")
    lb = l_base.matrix if hasattr(l_base, "matrix") else as_cmatrix(l_base, square=True)
    v = state.vector
    second = np.vdot(v, lb.conj().T @ (lb @ v))
    first = np.vdot(v, lb.conj().T @ v) * np.vdot(v, lb @ v)
    return 4.0 * t * t * _real_checked(second - first, "dqfi_overall_factor")


def _steady_coefficients(spectrum: BiorthogonalSpectrum, dl: np.ndarray):
    if spectrum.has_ep():
        raise FisherError("steady-state formulas require an EP-free spectrum")
    vals = spectrum.values
    phi = spectrum.right
    w1 = spectrum.left.conj().T @ as_cmatrix(dl, square=True) @ phi[:, 0]
    scale = max(float(np.max(np.abs(vals))), 1e-30)
    coeffs = np.zeros(vals.size, dtype=complex)
    for n in range(1, vals.size):
        if abs(vals[n]) < 1e-12 * scale:
            raise FisherError("degenerate steady subspace; the steady-state sums do not apply")
        coeffs[n] = w1[n] / vals[n]
    overlaps = phi.conj().T @ phi          # <<phi_n|phi_k>>
    s1 = overlaps[:, 0]                    # <<phi_n|phi_1>>
    gram = overlaps - np.outer(s1, np.conj(s1))
    return vals, coeffs, gram


def dqfi_steady_series(spectrum: BiorthogonalSpectrum, dl, t: float) -> float:
    """DQFI double sum evaluated in the steady state at finite time t."""
    vals, coeffs, gram = _steady_coefficients(spectrum, dl)
    n = vals.size
    acc = 0.0 + 0.0j
    for a in range(1, n):
        ca = (np.exp(np.conj(vals[a]) * t) - 1.0) * np.conj(coeffs[a])
        for b in range(1, n):
            cb = (np.exp(vals[b] * t) - 1.0) * coeffs[b]
            acc += ca * cb * gram[a, b]
    return _real_checked(4.0 * acc, "dqfi_steady_series")


def dqfi_steady_limit(spectrum: BiorthogonalSpectrum, dl) -> float:
    """t -> infinity limit of the steady-state DQFI double sum."""
    vals, coeffs, gram = _steady_coefficients(spectrum, dl)
    n = vals.size
    acc = 0.0 + 0.0j
    for a in range(1, n):
        for b in range(1, n):
            acc += np.conj(coeffs[a]) * coeffs[b] * gram[a, b]
    return _real_checked(4.0 * acc, "dqfi_steady_limit")


# ---------------------------------------------------------------------------
# Hilbert-space spectral decompositions


def _spectral_data(rho: np.ndarray, drho: np.ndarray):
    """Eigen-data of (rho, drho): p, dp, eigenbasis V, and D_kj = <k|d psi_j>.

    Degenerate eigenspaces are rotated so drho is diagonal inside each
    block (the smooth perturbation-theory basis); the eigenvector-derivative
    matrix D uses the zero phase gauge D_kk = 0.
    """
    rho = as_cmatrix(rho, square=True)
    drho = as_cmatrix(drho, square=True)
    res = eig_hermitian(rho)
    p = res.values.real.copy()
    v = res.right_vectors.copy()
    d = p.size
    dr = v.conj().T @ drho @ v
    # rotate inside degenerate clusters
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and abs(p[stop] - p[start]) <= _DEGENERACY_TOL:
            stop += 1
        if stop - start > 1:
            block = (dr[start:stop, start:stop] + dr[start:stop, start:stop].conj().T) / 2.0
            rot = eig_hermitian(block).right_vectors
            v[:, start:stop] = v[:, start:stop] @ rot
        start = stop
    dr = v.conj().T @ drho @ v
    dp = np.real(np.diag(dr)).copy()
    dmat = np.zeros((d, d), dtype=complex)
    for k in range(d):
        for j in range(d):
            if k != j and abs(p[j] - p[k]) > _DEGENERACY_TOL:
                dmat[k, j] = dr[k, j] / (p[j] - p[k])
    support = p > SUPPORT_RTOL * max(float(np.max(p)), 1e-300)
    return p, dp, v, dmat, support


def csld(rho, drho) -> SldPair:
    """Hilbert-space SLD built element-wise in the rho eigenbasis."""
    drho = as_cmatrix(drho, square=True)
    if abs(np.trace(drho)) > 1e-8 * max(1.0, float(np.max(np.abs(drho)))):
        raise ValueError("drho must be traceless")
    p, dp, v, dmat, support = _spectral_data(rho, drho)
    d = p.size
    m_eig = np.zeros((d, d), dtype=complex)
    for k in range(d):
        for j in range(d):
            if not (support[k] or support[j]):
                continue  # spec convention: both-outside elements are zero
            if k == j:
                m_eig[k, k] = dp[k] / p[k]
            else:
                denom = p[k] + p[j]
                if denom <= SUPPORT_RTOL * max(float(np.max(p)), 1e-300):
                    raise FisherError("support misdetection: p_k + p_j vanishes inside support")
                m_eig[k, j] = -2.0 * (p[k] - p[j]) / denom * dmat[k, j]
    m_hat = v @ m_eig @ v.conj().T
    m_hat = (m_hat + m_hat.conj().T) / 2.0
    return SldPair(csld=m_hat)


def cqfi_spectral(rho, drho) -> float:
    """CQFI from the rho spectral decomposition (arbitrary rank)."""
    p, dp, _, dmat, support = _spectral_data(rho, drho)
    d = p.size
    f = 0.0
    for k in range(d):
        if support[k]:
            f += dp[k] ** 2 / p[k]
    for k in range(d):
        if support[k]:
            dpsi2 = float(np.sum(np.abs(dmat[:, k]) ** 2))
            f += 4.0 * p[k] * dpsi2
    for k in range(d):
        for j in range(d):
            if support[k] and support[j]:
                f -= 8.0 * p[k] * p[j] / (p[k] + p[j]) * abs(dmat[k, j]) ** 2
    return float(f)


def dqfi_spectral_mixed(rho, drho) -> float:
    """DQFI from the rho spectral decomposition (Liouville-space value)."""
    p, dp, _, dmat, support = _spectral_data(rho, drho)
    d = p.size
    p2 = float(np.sum(p[support] ** 2))
    f = 4.0 * float(np.sum(dp[support] ** 2)) / p2
    for k in range(d):
        if support[k]:
            dpsi2 = float(np.sum(np.abs(dmat[:, k]) ** 2))
            f += 8.0 * p[k] ** 2 * dpsi2 / p2
    for k in range(d):
        for j in range(d):
            if support[k] and support[j]:
                f -= 8.0 * p[k] * p[j] * abs(dmat[k, j]) ** 2 / p2
    f -= 4.0 * float(np.sum(p[support] * dp[support])) ** 2 / p2 ** 2
    return float(f)


def dsld(state: LiouvilleState, dstate) -> SldPair:
    """Liouville-space SLD of the rank-one projector onto |rho>>_N."""
    if not state.normalized:
        raise ValueError("dsld expects a purity-normalized state")
    d = as_cvector(dstate)
    v = state.vector
    m = 2.0 * (np.outer(d, v.conj()) + np.outer(v, d.conj()))
    return SldPair(dsld=m)


def dsld_spectral(rho, drho) -> SldPair:
    """DSLD assembled from the Hilbert-space SLD: M (x) 1 + 1 (x) M^T - shift."""
    rho = as_cmatrix(rho, square=True)
    p, dp, _, _, support = _spectral_data(rho, drho)
    pair = csld(rho, drho)
    m_hat = pair.csld
    d = rho.shape[0]
    ident = np.eye(d, dtype=complex)
    shift = 2.0 * float(np.sum(p[support] * dp[support])) / float(np.sum(p[support] ** 2))
    m_tilde = kron(m_hat, ident) + kron(ident, m_hat.T) - shift * np.eye(d * d, dtype=complex)
    return SldPair(dsld=m_tilde, csld=m_hat)


# ---------------------------------------------------------------------------
# Closed-system helpers and bounds


def conventional_generator(u_family: Callable[[float], np.ndarray], theta: float,
                           h: float = 1e-6) -> np.ndarray:
    """h_theta = i (dU/dtheta) U^dag for a unitary family, by central FD."""
    if h <= 0:
        raise ValueError("h must be positive")
    us = {s: as_cmatrix(u_family(theta + s), square=True) for s in (-h, 0.0, h)}
    n = us[0.0].shape[0]
    for s, u in us.items():
        dev = float(np.max(np.abs(u @ u.conj().T - np.eye(n))))
        if dev > 1e-10:
            raise ValueError(f"family is not unitary at theta={theta + s} (deviation {dev:.2e})")
    du = (us[h] - us[-h]) / (2.0 * h)
    gen = 1j * du @ us[0.0].conj().T
    anti = float(np.max(np.abs(gen - gen.conj().T)))
    if anti > 1e-5 * max(1.0, float(np.max(np.abs(gen)))):
        raise ValueError("generator is far from Hermitian; family is not smooth/unitary")
    return (gen + gen.conj().T) / 2.0


def cqfi_closed_helpers(h_gen, psi) -> tuple[float, float, np.ndarray]:
    """Pure-state CQFI in psi, its probe-optimal bound, and the optimal probe."""
    h_gen = as_cmatrix(h_gen, square=True)
    psi = as_cvector(psi)
    psi = psi / np.sqrt(np.real(np.vdot(psi, psi)))
    hpsi = h_gen @ psi
    f_pure = 4.0 * (np.real(np.vdot(hpsi, hpsi)) - np.real(np.vdot(psi, hpsi)) ** 2)
    res = eig_hermitian(h_gen)
    eta = res.values.real
    f_max = float((eta[-1] - eta[0]) ** 2)
    probe = (res.right_vectors[:, -1] + res.right_vectors[:, 0]) / math.sqrt(2.0)
    return float(f_pure), f_max, probe


def crb_bounds(f: float, n: int = 1) -> float:
    """Cramer-Rao variance bound 1/(n F); infinite for F = 0."""
    if n < 1:
        raise ValueError("the protocol count n must be >= 1")
    if f < 0:
        raise ValueError("Fisher information cannot be negative")
    if f == 0:
        return math.inf
    return 1.0 / (n * f)


def evaluate_point(model: OpenSystemModel, theta: float, rho0: LiouvilleState,
                   t: float, n: int = 1, route: str = "auto",
                   with_cqfi: bool = True, with_bound: bool = True) -> FisherResult:
    """Full DQFI/CQFI evaluation at one (theta, t) with route bookkeeping.

    The covariance route is preferred; when the generator norm signals
    precision loss (eps * ||Xi|| above ~1e-9) the state-derivative route
    takes over, which stays well conditioned at long times.
    """
    from .generator import (generator_auto, generator_propagator_fd,
                            generator_quadrature, generator_spectral,
                            dqfi_upper_bound)
    from .spectral import biorthogonal_spectrum

    liou = build_liouvillian(model, theta)
    mode = "analytic" if model.has_analytic_derivatives else "central-fd"
    dl = d_liouvillian(model, theta, mode=mode)
    state_raw = propagate(liou, rho0, t)
    state = purity_normalize(state_raw)

    if route == "auto":
        g = generator_auto(liou, dl, t, spectrum=biorthogonal_spectrum(liou))
    elif route == "spectral":
        g = generator_spectral(biorthogonal_spectrum(liou), dl, t)
    elif route == "quadrature":
        g = generator_quadrature(liou, dl, t)
    elif route == "fd":
        g = generator_propagator_fd(model, theta, t)
    else:
        raise ValueError(f"unknown route {route!r}")

    diagnostics: dict = {}
    value = dqfi_covariance(state, g)
    route_tag = g.route
    err_est = 50.0 * _EPS * float(np.max(np.abs(g.xi)))
    diagnostics["cov_err_est"] = err_est
    if route == "auto" and err_est > 1e-9:
        fd_value = dqfi_via_derivative(model, theta, rho0, t)
        diagnostics["cov_vs_fd"] = abs(value - fd_value)
        value = fd_value
        route_tag = g.route + "+state-fd"

    cq = None
    if with_cqfi:
        h = 1e-6 * max(1.0, abs(theta))
        vp = propagate(build_liouvillian(model, theta + h), rho0, t).vector
        vm = propagate(build_liouvillian(model, theta - h), rho0, t).vector
        drho = devectorize((vp - vm) / (2.0 * h), model.dim)
        drho = (drho + drho.conj().T) / 2.0
        cq = cqfi_spectral(state_raw.density(), drho)

    bound = dqfi_upper_bound(g) if with_bound else None
    return FisherResult(t=float(t), dqfi=value, purity=state.purity, cqfi=cq,
                        bound=bound, route=route_tag, diagnostics=diagnostics,
                        var_bound=crb_bounds(value, n) if value > 0 else math.inf)


def split_identity_value(state: LiouvilleState, g: GeneratorPair) -> float:
    """4[<dTheta^2> + <dLambda^2> + <i[Lambda, Theta]>] (equals the DQFI)."""
    if not state.normalized:
        raise ValueError("split_identity_value expects a purity-normalized state")
    v = state.vector
    th, lam = g.theta_herm, g.lambda_herm

    def _var(op):
        mean = np.real(np.vdot(v, op @ v))
        return np.real(np.vdot(v, op @ (op @ v))) - mean ** 2

    comm = 1j * (lam @ th - th @ lam)
    return float(4.0 * (_var(th) + _var(lam) + np.real(np.vdot(v, comm @ v))))
