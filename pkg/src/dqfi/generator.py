"""Dissipative generator of parameter translations in Liouville space.

The generator Xi_theta = i (dU/dtheta) U^-1 of the propagator family
U = e^{L(theta) t} is computed by three independent routes:

* spectral     -- double sum over the biorthogonal eigensystem of L,
* quadrature   -- adaptive Gauss-Legendre integration of
                  i * int_0^t e^{mu L} (dL/dtheta) e^{-mu L} dmu,
* propagator-fd -- central difference of the propagator itself, with the
                  regularized pseudoinverse supplying U^-1.

A fourth route (ep-jordan) evaluates the same double sum over a Jordan
chain-completed basis, which stays finite at Liouvillian exceptional
points where the plain spectral route necessarily blows up.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .linalg import ExpOverflowError, as_cmatrix, eig_general, eig_hermitian, matexp, pinv, solve
from .model import LiouvillianMatrix, OpenSystemModel, build_liouvillian, d_liouvillian
from .spectral import BiorthogonalSpectrum, SpectralError, attach_chains, chain_completed_basis

QUAD_ORDER = 16
MAX_PANELS = 2 ** 14
QUAD_TOL = 1e-11
OVERFLOW_GUARD = 300.0
CONDITION_FALLBACK = 1e6


class GeneratorError(RuntimeError):
    """A generator route refused or failed to converge."""


@dataclass(frozen=True)
class GeneratorPair:
    """Xi, its adjoint, and the Hermitian split Xi = Theta - i Lambda."""

    xi: np.ndarray
    xi_dag: np.ndarray
    theta_herm: np.ndarray
    lambda_herm: np.ndarray
    route: str
    t: float
    residual_vs_alternate: Optional[float] = None


def _make_pair(xi: np.ndarray, route: str, t: float) -> GeneratorPair:
    xi_dag = xi.conj().T.copy()
    theta_h = (xi + xi_dag) / 2.0
    lambda_h = 1j * (xi - xi_dag) / 2.0
    return GeneratorPair(xi=xi, xi_dag=xi_dag, theta_herm=theta_h,
                         lambda_herm=lambda_h, route=route, t=float(t))


def hermitian_split(g: GeneratorPair) -> GeneratorPair:
    """(Re)compute Theta = (Xi + Xi^dag)/2 and Lambda = i(Xi - Xi^dag)/2."""
    theta_h = (g.xi + g.xi_dag) / 2.0
    lambda_h = 1j * (g.xi - g.xi_dag) / 2.0
    return replace(g, theta_herm=theta_h, lambda_herm=lambda_h)


def _exp_integrals(delta: complex, t: float, order: int) -> complex:
    """int_0^t mu^p e^{mu*delta} dmu for p = order in {0, 1, 2}.

    Series evaluation below |delta*t| = 0.5 avoids the catastrophic
    cancellation of the closed forms near coalescing eigenvalues.
    """
    x = delta * t
    if abs(x) < 0.5:
        total = 0.0 + 0.0j
        term = 1.0 + 0.0j  # x^k / k!
        for k in range(0, 30):
            total += term / (k + order + 1)
            term *= x / (k + 1)
            if abs(term) < 1e-20 * max(1.0, abs(total)):
                break
        return t ** (order + 1) * total
    e = np.exp(x)
    if order == 0:
        return (e - 1.0) / delta
    if order == 1:
        return (e * (x - 1.0) + 1.0) / delta ** 2
    if order == 2:
        return (e * (x * x - 2.0 * x + 2.0) - 2.0) / delta ** 3
    raise ValueError("only orders 0..2 are supported")


def generator_spectral(spectrum: BiorthogonalSpectrum, dl: np.ndarray, t: float) -> GeneratorPair:
    """Xi from the eigenvalue/eigenvector double sum (no EPs allowed).

    Diagonal terms contribute i t <<chi_n|dL|phi_n>> |phi_n>><<chi_n| and
    off-diagonal ones i (e^{(L_n-L_m)t}-1)/(L_n-L_m) <<chi_n|dL|phi_m>>
    |phi_n>><<chi_m|; coinciding (diagonalizable) eigenvalues fall back to
    the t-linear limit of the same coefficient.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if spectrum.has_ep():
        raise GeneratorError("spectrum carries exceptional points; "
                             "use generator_ep or generator_quadrature")
    if spectrum.ill_conditioned:
        raise GeneratorError("eigenbasis is ill-conditioned (near-EP); "
                             "use generator_quadrature")
    dl = as_cmatrix(dl, square=True)
    vals = spectrum.values
    w = spectrum.left.conj().T @ dl @ spectrum.right
    n = vals.size
    coef = np.empty((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            coef[a, b] = _exp_integrals(vals[a] - vals[b], t, 0)
    xi = 1j * (spectrum.right @ (coef * w) @ spectrum.left.conj().T)
    return _make_pair(xi, "spectral", t)


def generator_ep(spectrum: BiorthogonalSpectrum, dl: np.ndarray, t: float) -> GeneratorPair:
    """Xi over the Jordan chain-completed basis (finite at order-2 LEPs).

    With S holding eigenvectors and chains, W = S^-1 dL S and nilpotent
    shifts N per block, the integrand e^{mu J} W e^{-mu J} expands into
    mu-polynomial times exponential terms whose integrals are evaluated
    exactly; Xi = i S [sum] S^-1.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if any(c.jordan_chain is None for c in spectrum.ep_clusters):
        raise GeneratorError("EP clusters lack Jordan chains; call jordan_chain/attach_chains")
    if any(c.order != 2 for c in spectrum.ep_clusters):
        raise GeneratorError("only order-2 exceptional points are supported")
    dl = as_cmatrix(dl, square=True)
    s, s_inv, blocks = chain_completed_basis(spectrum)
    w = s_inv @ dl @ s
    n = s.shape[0]
    integral = np.zeros((n, n), dtype=complex)
    for lam_a, col_a, size_a in blocks:
        for lam_b, col_b, size_b in blocks:
            delta = lam_a - lam_b
            wab = w[col_a:col_a + size_a, col_b:col_b + size_b]
            e0 = _exp_integrals(delta, t, 0)
            term = e0 * wab
            if size_a == 2 or size_b == 2:
                e1 = _exp_integrals(delta, t, 1)
                na = np.array([[0, 1], [0, 0]]) if size_a == 2 else np.zeros((size_a, size_a))
                nb = np.array([[0, 1], [0, 0]]) if size_b == 2 else np.zeros((size_b, size_b))
                term = term + e1 * (na @ wab - wab @ nb)
                if size_a == 2 and size_b == 2:
                    e2 = _exp_integrals(delta, t, 2)
                    term = term - e2 * (na @ wab @ nb)
            integral[col_a:col_a + size_a, col_b:col_b + size_b] = term
    xi = 1j * (s @ integral @ s_inv)
    return _make_pair(xi, "ep-jordan", t)


def generator_quadrature(lmat, dl: np.ndarray, t: float, panels: int = 1) -> GeneratorPair:
    """Xi by adaptive Gauss-Legendre quadrature of the Wilcox integral.

    Dyadic panel refinement proceeds until two successive estimates agree
    in max-norm; the iteration refuses upfront when e^{-mu L} would exceed
    the double range (t * max|Re L_n| > 300).
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if panels < 1:
        raise ValueError("panels must be >= 1")
    lmat = lmat.matrix if isinstance(lmat, LiouvillianMatrix) else as_cmatrix(lmat, square=True)
    dl = as_cmatrix(dl, square=True)
    n = lmat.shape[0]
    if t == 0:
        return _make_pair(np.zeros((n, n), dtype=complex), "quadrature", 0.0)
    abscissa = float(np.max(np.abs(eig_general(lmat).values.real)))
    if t * abscissa > OVERFLOW_GUARD:
        raise GeneratorError(
            f"t * max|Re L_n| = {t * abscissa:.3g} exceeds the overflow guard "
            f"({OVERFLOW_GUARD:g}); e^(-mu L) would overflow")
    nodes, weights = np.polynomial.legendre.leggauss(QUAD_ORDER)

    def integrand(mu: float) -> np.ndarray:
        try:
            fwd = matexp(lmat, mu)
            bwd = matexp(lmat, -mu)
        except ExpOverflowError as exc:
            raise GeneratorError(f"matrix exponential overflow at mu = {mu:.6g}") from exc
        return fwd @ dl @ bwd

    def estimate(k: int) -> np.ndarray:
        total = np.zeros((n, n), dtype=complex)
        edges = np.linspace(0.0, t, k + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            half = (b - a) / 2.0
            mid = (a + b) / 2.0
            for x, wgt in zip(nodes, weights):
                total += (wgt * half) * integrand(mid + half * x)
        return total

    k = panels
    prev = estimate(k)
    while k * 2 <= MAX_PANELS:
        k *= 2
        cur = estimate(k)
        if float(np.max(np.abs(cur - prev))) < QUAD_TOL * max(1.0, float(np.max(np.abs(cur)))):
            return _make_pair(1j * cur, "quadrature", t)
        prev = cur
    raise GeneratorError(f"quadrature did not converge within {MAX_PANELS} panels")


def generator_propagator_fd(model: OpenSystemModel, theta: float, t: float,
                            h: float = 1e-5) -> GeneratorPair:
    """Xi = i (dU/dtheta) U^-1 with a central-difference propagator derivative."""
    if h <= 0:
        raise ValueError("h must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    u_plus = matexp(build_liouvillian(model, theta + h).matrix, t)
    u_minus = matexp(build_liouvillian(model, theta - h).matrix, t)
    u = matexp(build_liouvillian(model, theta).matrix, t)
    du = (u_plus - u_minus) / (2.0 * h)
    xi = 1j * (du @ pinv(u))
    return _make_pair(xi, "propagator-fd", t)


def generator_auto(lmat, dl: np.ndarray, t: float,
                   spectrum: Optional[BiorthogonalSpectrum] = None) -> GeneratorPair:
    """Route policy: spectral by default, quadrature near/at EPs."""
    from .spectral import biorthogonal_spectrum
    if spectrum is None:
        spectrum = biorthogonal_spectrum(lmat)
    if spectrum.has_ep():
        try:
            return generator_ep(attach_chains(spectrum, lmat), dl, t)
        except (SpectralError, GeneratorError):
            return generator_quadrature(lmat, dl, t)
    if spectrum.ill_conditioned or spectrum.condition > CONDITION_FALLBACK:
        return generator_quadrature(lmat, dl, t)
    return generator_spectral(spectrum, dl, t)


def dqfi_upper_bound(g: GeneratorPair) -> float:
    """[(max eig Theta + max eig Lambda) - (min eig Theta + min eig Lambda)]^2."""
    th = eig_hermitian(g.theta_herm).values.real
    lam = eig_hermitian(g.lambda_herm).values.real
    width = (th[-1] + lam[-1]) - (th[0] + lam[0])
    return float(width ** 2)
