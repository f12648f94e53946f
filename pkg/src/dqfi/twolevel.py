"""Closed forms for the dissipative two-level spin-flip benchmark.

H = omega sigma_z / 2 with a sigma_x jump channel at rate gamma_x admits a
complete analytic solution: Liouvillian spectrum, dissipative generator,
evolved state, DQFI and CQFI.  Everything is expressed through the entire
functions of s = gamma_x^2 - omega^2

    f = cosh(sqrt(s) tau),   g = sinh(sqrt(s) tau)/sqrt(s),
    q = (f - 1)/s,           h = (g - tau)/s,

so every formula stays finite and smooth across the exceptional point
s = 0 (critical damping), where the generator picks up its t^3 terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fisher import dqfi_covariance
from .generator import GeneratorPair, _make_pair
from .model import (JumpChannel, LiouvilleState, OpenSystemModel, sigma_x,
                    sigma_z)
from .spectral import BiorthogonalSpectrum, EpCluster, _sort_order

LEP_RTOL = 1e-9
_SERIES_CUT = 0.25
_FIG_RATES = (0.05, 0.3, 0.5, 1.0, 2.0)
# rates for the paired DQFI/CQFI figure: DQFI dominates CQFI throughout the
# displayed window only up to critical damping (at gamma_x = 2 the CQFI
# crosses above for t in [0.4, 1.6], so that panel is not part of the set)
_FIG3_RATES = (0.05, 0.3, 0.5, 1.0)


@dataclass(frozen=True)
class TwoLevelParams:
    """Spin-flip benchmark parameters; Omega = sqrt(gx^2 - w^2)."""

    omega: float
    gamma_x: float

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.gamma_x < 0:
            raise ValueError("gamma_x must be non-negative")

    @property
    def s(self) -> float:
        return self.gamma_x ** 2 - self.omega ** 2

    @property
    def Omega(self) -> complex:
        return complex(np.sqrt(complex(self.s)))

    @property
    def is_lep(self) -> bool:
        return abs(self.gamma_x - self.omega) < LEP_RTOL * self.omega


@dataclass(frozen=True)
class AnalyticCurve:
    """One sampled closed-form curve for the figure pipelines."""

    grid: np.ndarray
    values: np.ndarray
    label: str
    name: str

    def __post_init__(self):
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("curve grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("curve values must be finite")


def spin_flip_model(gamma_x: float) -> OpenSystemModel:
    """Generic-pipeline model with theta = omega, fixed spin-flip rate."""
    return OpenSystemModel(
        dim=2,
        hamiltonian_at=lambda w: 0.5 * w * sigma_z,
        d_hamiltonian_at=lambda w: 0.5 * sigma_z,
        jumps=(JumpChannel(operator=sigma_x,
                           rate_at=lambda w: gamma_x,
                           drate_at=lambda w: 0.0),),
    )


def probe_state() -> LiouvilleState:
    """The paper-fixed probe (|e> + |g>)/sqrt(2) as a Liouville vector."""
    rho = 0.5 * np.ones((2, 2), dtype=complex)
    return LiouvilleState.from_density(rho)


# --- entire functions of s = Omega^2 ---------------------------------------

def _fg(s: complex, tau: float) -> tuple[complex, complex]:
    """cosh(sqrt(s) tau) and sinh(sqrt(s) tau)/sqrt(s)."""
    if abs(s) * tau * tau < _SERIES_CUT:
        f = 1.0 + 0.0j
        g = tau + 0.0j
        pow_s = 1.0 + 0.0j
        for k in range(1, 24):
            pow_s *= s
            f += pow_s * tau ** (2 * k) / math.factorial(2 * k)
            g += pow_s * tau ** (2 * k + 1) / math.factorial(2 * k + 1)
        return f, g
    rt = np.sqrt(complex(s))
    return complex(np.cosh(rt * tau)), complex(np.sinh(rt * tau) / rt)


def _fg_prime(s: complex, tau: float) -> tuple[complex, complex]:
    """d/ds of cosh(sqrt(s) tau) and of sinh(sqrt(s) tau)/sqrt(s)."""
    if abs(s) * tau * tau < _SERIES_CUT:
        fp = 0.0 + 0.0j
        gp = 0.0 + 0.0j
        pow_s = 1.0 + 0.0j
        for k in range(1, 24):
            fp += k * pow_s * tau ** (2 * k) / math.factorial(2 * k)
            gp += k * pow_s * tau ** (2 * k + 1) / math.factorial(2 * k + 1)
            pow_s *= s
        return fp, gp
    f, g = _fg(s, tau)
    return tau * g / 2.0, (tau * f - g) / (2.0 * s)


def _qh(s: complex, tau: float) -> tuple[complex, complex]:
    """q = (cosh(sqrt(s)tau) - 1)/s and h = (sinh(sqrt(s)tau)/sqrt(s) - tau)/s."""
    if abs(s) * tau * tau < _SERIES_CUT:
        q = 0.0 + 0.0j
        h = 0.0 + 0.0j
        pow_s = 1.0 + 0.0j
        for k in range(1, 24):
            q += pow_s * tau ** (2 * k) / math.factorial(2 * k)
            h += pow_s * tau ** (2 * k + 1) / math.factorial(2 * k + 1)
            pow_s *= s
        return q, h
    f, g = _fg(s, tau)
    return (f - 1.0) / s, (g - tau) / s


# --- closed forms -----------------------------------------------------------

def wp_value(p: TwoLevelParams, t: float) -> complex:
    """Coherence amplitude of the evolved probe (off-diagonal of rho)."""
    f, g = _fg(p.s, t)
    return np.exp(-p.gamma_x * t) / 2.0 * (f + (p.gamma_x - 1j * p.omega) * g)


def wp_domega(p: TwoLevelParams, t: float) -> complex:
    """Exact d wp / d omega at fixed gamma_x."""
    f, g = _fg(p.s, t)
    fp, gp = _fg_prime(p.s, t)
    w = p.omega
    return np.exp(-p.gamma_x * t) / 2.0 * (
        -2.0 * w * fp + (p.gamma_x - 1j * w) * (-2.0 * w) * gp - 1j * g)


def analytic_state(p: TwoLevelParams, t: float) -> tuple[LiouvilleState, complex]:
    """Purity-normalized evolved probe [1/2, wp, wp*, 1/2]/sqrt(1/2+2|wp|^2)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    wp = wp_value(p, t)
    raw = np.array([0.5, wp, np.conj(wp), 0.5], dtype=complex)
    n2 = 0.5 + 2.0 * abs(wp) ** 2
    state = LiouvilleState(vector=raw / math.sqrt(n2), dim=2,
                           normalized=True, purity=float(n2))
    return state, complex(wp)


def analytic_generator(p: TwoLevelParams, t: float) -> GeneratorPair:
    """Closed-form dissipative generator; finite and smooth at the LEP.

    The t-linear diagonal comes from the parameter dependence of the
    eigenvalue pair; at critical damping the remaining entries reduce to
    the t^2/t^3 polynomials of the series expansion.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    q2, h2 = _qh(p.s, 2.0 * t)
    g, w = p.gamma_x, p.omega
    xi = np.zeros((4, 4), dtype=complex)
    xi[1, 1] = t + 0.5 * g * g * h2
    xi[2, 2] = -xi[1, 1]
    xi[1, 2] = 0.5 * g * (1j * w * h2 - q2)
    xi[2, 1] = 0.5 * g * (q2 + 1j * w * h2)
    return _make_pair(xi, "analytic", t)


def analytic_dqfi(p: TwoLevelParams, t: float) -> float:
    """DQFI of the spin-flip probe; covariance route at the LEP."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if p.is_lep:
        state, _ = analytic_state(p, t)
        return dqfi_covariance(state, analytic_generator(p, t))
    wp = wp_value(p, t)
    dwp = wp_domega(p, t)
    n2 = 0.5 + 2.0 * abs(wp) ** 2
    dabs2 = 2.0 * np.real(np.conj(wp) * dwp)
    return float(4.0 / n2 * (2.0 * abs(dwp) ** 2 - dabs2 ** 2 / n2))


def analytic_cqfi(p: TwoLevelParams, t: float) -> float:
    """Basis-independent single-qubit CQFI; pure-state limit by continuity."""
    if t < 0:
        raise ValueError("t must be non-negative")
    wp = wp_value(p, t)
    dwp = wp_domega(p, t)
    den = 1.0 - 4.0 * abs(wp) ** 2
    if den < 1e-9:
        return float(4.0 * abs(dwp) ** 2)
    num = (4.0 * (wp * np.conj(dwp)) ** 2 + 4.0 * (np.conj(wp) * dwp) ** 2
           + 2.0 * abs(dwp) ** 2)
    val = 2.0 * abs(dwp) ** 2 + num / den
    if abs(val.imag) > 1e-10 * (1.0 + abs(val)):
        raise ArithmeticError(f"CQFI came out complex ({val.imag:.3e})")
    return float(val.real)


def analytic_spectrum(p: TwoLevelParams) -> BiorthogonalSpectrum:
    """Printed eigensystem of the spin-flip Liouvillian, LEP-aware.

    At the LEP the 3/4 pair coalesces: the coalesced vector is returned in
    both slots, the cluster is flagged, and no left normalization is
    attempted inside it.
    """
    g, w, om = p.gamma_x, p.omega, p.Omega
    values = np.array([0.0, -2.0 * g, -g - om, -g + om], dtype=complex)
    sq2 = math.sqrt(2.0)
    phi = np.zeros((4, 4), dtype=complex)
    chi = np.zeros((4, 4), dtype=complex)
    phi[:, 0] = np.array([1, 0, 0, 1]) / sq2
    phi[:, 1] = np.array([-1, 0, 0, 1]) / sq2
    chi[:, 0] = phi[:, 0]
    chi[:, 1] = phi[:, 1]
    clusters: tuple[EpCluster, ...] = ()
    ill = False
    if p.is_lep:
        coalesced = np.array([0, -1j * w, g, 0], dtype=complex)
        coalesced = coalesced / np.sqrt(np.real(np.vdot(coalesced, coalesced)))
        phi[:, 2] = coalesced
        phi[:, 3] = coalesced
        chi[:, 2] = coalesced
        chi[:, 3] = coalesced
        condition = math.inf
        ill = True
    else:
        a1 = 1.0 / np.sqrt((om + 1j * w) * (np.conj(om) - 1j * w) + g * g)
        a2 = 1.0 / np.sqrt((om - 1j * w) * (np.conj(om) + 1j * w) + g * g)
        b1 = np.sqrt((om + 1j * w) * (np.conj(om) - 1j * w) + g * g) \
            / ((np.conj(om) - 1j * w) ** 2 + g * g)
        b2 = np.sqrt((om - 1j * w) * (np.conj(om) + 1j * w) + g * g) \
            / ((np.conj(om) + 1j * w) ** 2 + g * g)
        phi[:, 2] = a1 * np.array([0, -1j * w - om, g, 0])
        phi[:, 3] = a2 * np.array([0, -1j * w + om, g, 0])
        chi[:, 2] = b1 * np.array([0, 1j * w - np.conj(om), g, 0])
        chi[:, 3] = b2 * np.array([0, 1j * w + np.conj(om), g, 0])
        condition = float(np.max(np.sqrt(np.sum(np.abs(chi) ** 2, axis=0))))
        ill = condition > 1e6

    order = _sort_order(values)
    values = values[order]
    phi = phi[:, order]
    chi = chi[:, order]
    if p.is_lep:
        pos = [int(np.where(order == k)[0][0]) for k in (2, 3)]
        clusters = (EpCluster(indices=tuple(sorted(pos)), value=complex(-g),
                              order=2, coalescence=1.0),)
    return BiorthogonalSpectrum(values=values, right=phi, left=chi, dim=2,
                                condition=condition, ep_clusters=clusters,
                                ill_conditioned=ill)


def figure_data(which: str, rates: Sequence[float] = (),
                t_max: float = 120.0, points: int = 1201,
                ratio_max: float = 2.5, ratio_points: int = 251,
                omega: float = 1.0) -> list[AnalyticCurve]:
    """Closed-form curves behind the three benchmark figures.

    fig1: Re/Im of the four eigenvalues against gamma_x/omega.
    fig2: DQFI against time for each decay rate (LEP curve included).
    fig3: paired DQFI and CQFI curves, rates up to critical damping.
    """
    if not rates:
        rates = _FIG3_RATES if which == "fig3" else _FIG_RATES
    if which == "fig1":
        ratios = np.linspace(0.0, ratio_max, ratio_points)
        eigs = np.empty((4, ratios.size), dtype=complex)
        for i, r in enumerate(ratios):
            g = r * omega
            om = complex(np.sqrt(complex(g * g - omega * omega)))
            eigs[:, i] = (0.0, -2.0 * g, -g - om, -g + om)
        curves = []
        for k in range(4):
            curves.append(AnalyticCurve(grid=ratios, values=eigs[k].real.copy(),
                                        label="eig-real", name=f"L{k + 1}"))
        for k in range(4):
            curves.append(AnalyticCurve(grid=ratios, values=eigs[k].imag.copy(),
                                        label="eig-imag", name=f"L{k + 1}"))
        return curves
    if which in ("fig2", "fig3"):
        ts = np.linspace(0.0, t_max, points)
        curves = []
        for g in rates:
            p = TwoLevelParams(omega=omega, gamma_x=g)
            dq = np.array([analytic_dqfi(p, t) for t in ts])
            curves.append(AnalyticCurve(grid=ts, values=dq, label="dqfi",
                                        name=f"gamma_x={g:g}"))
            if which == "fig3":
                cq = np.array([analytic_cqfi(p, t) for t in ts])
                curves.append(AnalyticCurve(grid=ts, values=cq, label="cqfi",
                                            name=f"gamma_x={g:g}"))
        return curves
    raise ValueError(f"unknown figure kind {which!r}")
