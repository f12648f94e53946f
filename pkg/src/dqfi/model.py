"""Parameterized open-system models and their vectorized Lindblad dynamics.

A model is a Hamiltonian family H(theta) plus jump channels (Gamma_k,
gamma_k(theta)).  Density matrices are row-stacked into Liouville-space
vectors, the master equation becomes d|rho>>/dt = L(theta)|rho>> with the
supermatrix

    L = -i(H (x) 1 - 1 (x) H^T)
        + sum_k gamma_k [G_k (x) G_k* - (G_k^dag G_k (x) 1 + 1 (x) G_k^T G_k*)/2]

and states are propagated with the kernel's matrix exponential.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .linalg import as_cmatrix, as_cvector, matexp

__all__ = [
    "OpenSystemModel", "JumpChannel", "LiouvillianMatrix", "LiouvilleState",
    "ModelError", "StateError", "vectorize", "devectorize",
    "build_liouvillian", "d_liouvillian", "dissipator_supermatrix",
    "propagate", "purity_normalize",
    "sigma_x", "sigma_y", "sigma_z", "sigma_plus", "sigma_minus",
]

VECTORIZATION_CONVENTION = "row-major-stacking"

_HERM_TOL = 1e-12
_STATE_TOL = 1e-9

sigma_x = np.array([[0, 1], [1, 0]], dtype=complex)
sigma_y = np.array([[0, -1j], [1j, 0]], dtype=complex)
sigma_z = np.array([[1, 0], [0, -1]], dtype=complex)
sigma_plus = np.array([[0, 1], [0, 0]], dtype=complex)
sigma_minus = np.array([[0, 0], [1, 0]], dtype=complex)


class ModelError(ValueError):
    """A model violates its physical constraints (Hermiticity, rates...)."""


class StateError(RuntimeError):
    """A propagated state failed its Hermiticity/trace checks."""


def vectorize(rho) -> np.ndarray:
    """Row-stack an MxM matrix into an M^2 vector: out[i*M+j] = rho[i,j]."""
    rho = as_cmatrix(rho, square=True)
    return rho.reshape(-1).copy()


def devectorize(v, m: int) -> np.ndarray:
    """Inverse of vectorize; v must hold exactly m^2 entries."""
    v = as_cvector(v)
    if v.size != m * m:
        raise ValueError(f"vector of length {v.size} is not {m}x{m}")
    return v.reshape(m, m).copy()


@dataclass(frozen=True)
class JumpChannel:
    """One dissipation channel: jump operator and its rate law."""

    operator: np.ndarray
    rate_at: Callable[[float], float]
    drate_at: Optional[Callable[[float], float]] = None


@dataclass(frozen=True)
class OpenSystemModel:
    """Physics input: dim, Hamiltonian family, jump channels (hbar = 1)."""

    dim: int
    hamiltonian_at: Callable[[float], np.ndarray]
    jumps: tuple[JumpChannel, ...] = ()
    d_hamiltonian_at: Optional[Callable[[float], np.ndarray]] = None

    @property
    def has_analytic_derivatives(self) -> bool:
        return (self.d_hamiltonian_at is not None
                and all(j.drate_at is not None for j in self.jumps))

    def hamiltonian(self, theta: float) -> np.ndarray:
        h = as_cmatrix(self.hamiltonian_at(theta), square=True)
        if h.shape[0] != self.dim:
            raise ModelError(f"H({theta}) has dimension {h.shape[0]}, expected {self.dim}")
        dev = float(np.max(np.abs(h - h.conj().T)))
        if dev > _HERM_TOL * max(1.0, float(np.max(np.abs(h)))):
            raise ModelError(f"H({theta}) is not Hermitian (deviation {dev:.2e})")
        return h

    def rates(self, theta: float) -> list[float]:
        out = []
        for k, j in enumerate(self.jumps):
            g = float(j.rate_at(theta))
            if g < 0:
                raise ModelError(f"negative rate {g} for jump operator {k} at theta={theta}")
            out.append(g)
        return out


@dataclass(frozen=True)
class LiouvillianMatrix:
    """Vectorized Lindblad generator L(theta), an M^2 x M^2 complex matrix."""

    matrix: np.ndarray
    theta: float
    dim: int
    convention: str = VECTORIZATION_CONVENTION


@dataclass(frozen=True)
class LiouvilleState:
    """Row-stacked density matrix; purity = Tr[rho^2] of the physical state."""

    vector: np.ndarray
    dim: int
    normalized: bool = False
    purity: float = field(default=0.0)

    @classmethod
    def from_density(cls, rho) -> "LiouvilleState":
        rho = as_cmatrix(rho, square=True)
        m = rho.shape[0]
        _check_physical(rho)
        v = vectorize(rho)
        return cls(vector=v, dim=m, normalized=False,
                   purity=float(np.real(np.trace(rho @ rho))))

    def density(self) -> np.ndarray:
        rho = devectorize(self.vector, self.dim)
        if self.normalized:
            rho = rho / np.trace(rho)
        return rho


def _check_physical(rho: np.ndarray, tol: float = _STATE_TOL) -> None:
    scale = max(1.0, float(np.max(np.abs(rho))))
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > tol * scale:
        raise StateError(f"state is not Hermitian (deviation {herm:.2e})")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > tol * scale:
        raise StateError(f"state trace {tr} differs from 1")


def dissipator_supermatrix(gamma_op: np.ndarray) -> np.ndarray:
    """Vectorized single-channel dissipator at unit rate."""
    g = as_cmatrix(gamma_op, square=True)
    m = g.shape[0]
    im = np.eye(m, dtype=complex)
    gg = g.conj().T @ g
    return (np.kron(g, g.conj())
            - 0.5 * (np.kron(gg, im) + np.kron(im, g.T @ g.conj())))


def build_liouvillian(model: OpenSystemModel, theta: float) -> LiouvillianMatrix:
    """Assemble the supermatrix L(theta) for a model."""
    h = model.hamiltonian(theta)
    m = model.dim
    im = np.eye(m, dtype=complex)
    lmat = -1j * (np.kron(h, im) - np.kron(im, h.T))
    for gamma, jump in zip(model.rates(theta), model.jumps):
        g = as_cmatrix(jump.operator, square=True)
        if g.shape[0] != m:
            raise ModelError("jump operator dimension mismatch")
        gg = g.conj().T @ g
        lmat = lmat + gamma * (np.kron(g, g.conj())
                               - 0.5 * (np.kron(gg, im) + np.kron(im, g.T @ g.conj())))
    _check_trace_preserving(lmat, m)
    return LiouvillianMatrix(matrix=lmat, theta=float(theta), dim=m)


def _check_trace_preserving(lmat: np.ndarray, m: int, tol: float = 1e-10) -> None:
    vec_id = np.eye(m, dtype=complex).reshape(-1)
    leak = float(np.max(np.abs(vec_id @ lmat)))
    if leak > tol * max(1.0, float(np.max(np.abs(lmat)))):
        raise ModelError(f"Liouvillian does not preserve trace (leak {leak:.2e})")


def d_liouvillian(model: OpenSystemModel, theta: float, mode: str = "analytic",
                  h: Optional[float] = None) -> np.ndarray:
    """Parameter derivative dL/dtheta, analytically or by central difference."""
    if mode == "analytic":
        if not model.has_analytic_derivatives:
            raise ModelError("model does not carry analytic derivatives")
        m = model.dim
        im = np.eye(m, dtype=complex)
        dh = as_cmatrix(model.d_hamiltonian_at(theta), square=True)
        out = -1j * (np.kron(dh, im) - np.kron(im, dh.T))
        for jump in model.jumps:
            dg = float(jump.drate_at(theta))
            if dg == 0.0:
                continue
            g = as_cmatrix(jump.operator, square=True)
            gg = g.conj().T @ g
            out = out + dg * (np.kron(g, g.conj())
                              - 0.5 * (np.kron(gg, im) + np.kron(im, g.T @ g.conj())))
        return out
    if mode == "central-fd":
        step = h if h is not None else 1e-6 * max(1.0, abs(theta))
        lp = build_liouvillian(model, theta + step).matrix
        lm = build_liouvillian(model, theta - step).matrix
        return (lp - lm) / (2.0 * step)
    raise ValueError(f"unknown mode {mode!r}")


def propagate(liou: LiouvillianMatrix, state: LiouvilleState, t: float) -> LiouvilleState:
    """Evolve |rho>> for time t >= 0 under e^{L t}."""
    if t < 0:
        raise ValueError("propagation time must be non-negative")
    if state.normalized:
        raise ValueError("propagate expects a raw (trace-1) state, not a purity-normalized one")
    v = matexp(liou.matrix, t) @ state.vector
    rho = devectorize(v, liou.dim)
    _check_physical(rho)
    return LiouvilleState(vector=v, dim=liou.dim, normalized=False,
                          purity=float(np.real(np.trace(rho @ rho))))


def purity_normalize(state: LiouvilleState) -> LiouvilleState:
    """Divide |rho>> by sqrt(Tr[rho^2]) so it is a unit Liouville vector."""
    norm = float(np.sqrt(np.real(np.vdot(state.vector, state.vector))))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero state")
    purity = state.purity if state.normalized else norm ** 2
    return replace(state, vector=state.vector / norm, normalized=True, purity=purity)
