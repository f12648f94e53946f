import numpy as np
import pytest

from dqfi.model import JumpChannel, LiouvilleState, OpenSystemModel, sigma_minus, sigma_plus, sigma_z


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_hermitian(rng, n):
    a = random_complex(rng, n, n)
    return (a + a.conj().T) / 2


def random_density(rng, n):
    a = random_complex(rng, n, n)
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def thermal_qubit_model():
    """Unique steady state that depends on the estimated parameter."""
    return OpenSystemModel(
        dim=2,
        hamiltonian_at=lambda th: 0.5 * sigma_z,
        d_hamiltonian_at=lambda th: np.zeros((2, 2), dtype=complex),
        jumps=(JumpChannel(sigma_minus, lambda th: 1.0 + th, lambda th: 1.0),
               JumpChannel(sigma_plus, lambda th: th, lambda th: 1.0)),
    )


def random_three_level_model(seed=7):
    """Fixed random 3-level model with analytic derivatives, EP-free."""
    r = np.random.default_rng(seed)
    a = r.standard_normal((3, 3)) + 1j * r.standard_normal((3, 3))
    h0 = (a + a.conj().T) / 2
    b = r.standard_normal((3, 3)) + 1j * r.standard_normal((3, 3))
    h1 = (b + b.conj().T) / 2
    g1 = r.standard_normal((3, 3)) + 1j * r.standard_normal((3, 3))
    g2 = np.diag(r.standard_normal(3)).astype(complex)
    return OpenSystemModel(
        dim=3,
        hamiltonian_at=lambda th: h0 + th * h1,
        d_hamiltonian_at=lambda th: h1,
        jumps=(JumpChannel(g1, lambda th: 0.35, lambda th: 0.0),
               JumpChannel(g2, lambda th: 0.15 + 0.05 * th, lambda th: 0.05)),
    )


def assert_values_match(got, expected, tol):
    """Set-wise eigenvalue comparison: greedy nearest matching."""
    got = list(np.asarray(got, dtype=complex))
    for e in np.asarray(expected, dtype=complex):
        dists = [abs(g - e) for g in got]
        k = int(np.argmin(dists))
        assert dists[k] < tol, f"no match for {e} (closest {got[k]}, dist {dists[k]:.3e})"
        got.pop(k)


def mixed_probe(dim):
    """Full-rank probe with coherences, valid for any dimension."""
    psi = np.ones(dim, dtype=complex) / np.sqrt(dim)
    rho = 0.75 * np.outer(psi, psi.conj()) + 0.25 * np.eye(dim) / dim
    return LiouvilleState.from_density(rho)
