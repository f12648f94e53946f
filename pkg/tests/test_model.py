import numpy as np
import pytest

from dqfi.linalg import eig_general, kron
from dqfi.model import (JumpChannel, LiouvilleState, LiouvillianMatrix,
                        ModelError, OpenSystemModel, StateError,
                        build_liouvillian, d_liouvillian, devectorize,
                        propagate, purity_normalize, sigma_x, sigma_z,
                        vectorize)
from dqfi.twolevel import TwoLevelParams, probe_state, spin_flip_model, wp_value

from conftest import random_complex, random_density, thermal_qubit_model


def lindblad_rhs(h, jumps, rho):
    """Master-equation superoperator action, straight from its definition."""
    out = -1j * (h @ rho - rho @ h)
    for gamma, g in jumps:
        gg = g.conj().T @ g
        out = out + gamma * (g @ rho @ g.conj().T - 0.5 * (gg @ rho + rho @ gg))
    return out


class TestVectorize:
    def test_row_stacking_worked_example(self):
        rho = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(vectorize(rho), [1, 2, 3, 4])

    def test_maximally_mixed(self):
        assert np.array_equal(vectorize(np.eye(2) / 2), [0.5, 0, 0, 0.5])

    def test_superposition_probe(self):
        psi = np.array([1.0, 1.0]) / np.sqrt(2)
        rho = np.outer(psi, psi)
        assert np.allclose(vectorize(rho), [0.5, 0.5, 0.5, 0.5])

    def test_devectorize_worked_example(self):
        assert np.array_equal(devectorize(np.array([1, 2, 3, 4]), 2),
                              [[1, 2], [3, 4]])

    def test_round_trip(self, rng):
        rho = random_complex(rng, 3, 3)
        assert np.array_equal(devectorize(vectorize(rho), 3), rho)

    def test_devectorize_mixed(self):
        assert np.allclose(devectorize(np.array([0.5, 0, 0, 0.5]), 2), np.eye(2) / 2)

    def test_devectorize_length_check(self):
        with pytest.raises(ValueError):
            devectorize(np.ones(5), 2)


class TestVectorizationIdentities:
    def test_inner_product_is_trace(self, rng):
        for n in (2, 3):
            a, b = random_complex(rng, n, n), random_complex(rng, n, n)
            lhs = np.vdot(vectorize(a), vectorize(b))
            rhs = np.trace(a.conj().T @ b)
            assert abs(lhs - rhs) < 1e-12 * max(1, abs(rhs))

    def test_abc_identity(self, rng):
        for n in (2, 3):
            a, b, c = (random_complex(rng, n, n) for _ in range(3))
            lhs = vectorize(a @ b @ c)
            rhs = kron(a, c.T) @ vectorize(b)
            assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1, np.max(np.abs(lhs)))

    def test_commutator_identity(self, rng):
        for n in (2, 3):
            a, b = random_complex(rng, n, n), random_complex(rng, n, n)
            lhs = vectorize(a @ b - b @ a)
            rhs = (kron(a, np.eye(n)) - kron(np.eye(n), a.T)) @ vectorize(b)
            assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1, np.max(np.abs(lhs)))


class TestBuildLiouvillian:
    def test_spin_flip_matrix(self):
        # the 4x4 supermatrix of the benchmark model, entry by entry
        g, w = 0.7, 1.3
        lmat = build_liouvillian(spin_flip_model(g), w).matrix
        expected = np.array([
            [-g, 0, 0, g],
            [0, -g - 1j * w, g, 0],
            [0, g, -g + 1j * w, 0],
            [g, 0, 0, -g],
        ])
        assert np.max(np.abs(lmat - expected)) < 1e-14

    def test_closed_system_anti_hermitian(self):
        lmat = build_liouvillian(spin_flip_model(0.0), 1.0).matrix
        assert np.max(np.abs(lmat + lmat.conj().T)) < 1e-14

    def test_action_matches_master_equation(self, rng):
        model = thermal_qubit_model()
        theta = 0.6
        lmat = build_liouvillian(model, theta).matrix
        h = model.hamiltonian_at(theta)
        jumps = [(j.rate_at(theta), j.operator) for j in model.jumps]
        for _ in range(5):
            rho = random_complex(rng, 2, 2)
            lhs = devectorize(lmat @ vectorize(rho), 2)
            rhs = lindblad_rhs(h, jumps, rho)
            assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1, np.max(np.abs(rhs)))

    def test_trace_preservation(self):
        for theta in (0.1, 0.5, 2.0):
            lmat = build_liouvillian(thermal_qubit_model(), theta).matrix
            vec_id = np.eye(2, dtype=complex).reshape(-1)
            assert np.max(np.abs(vec_id @ lmat)) < 1e-10

    def test_spectrum_nonpositive_real(self):
        for gamma in (0.2, 1.0, 3.0):
            lmat = build_liouvillian(spin_flip_model(gamma), 1.0).matrix
            vals = eig_general(lmat).values
            assert np.max(vals.real) < 1e-9
            assert np.min(np.abs(vals)) < 1e-9  # steady state exists

    def test_negative_rate_rejected(self):
        model = OpenSystemModel(
            dim=2, hamiltonian_at=lambda th: 0.5 * sigma_z,
            jumps=(JumpChannel(sigma_x, lambda th: -0.1),))
        with pytest.raises(ModelError):
            build_liouvillian(model, 1.0)

    def test_non_hermitian_hamiltonian_rejected(self):
        model = OpenSystemModel(dim=2,
                                hamiltonian_at=lambda th: np.array([[0, 1], [0, 0]]))
        with pytest.raises(ModelError):
            build_liouvillian(model, 1.0)


class TestDLiouvillian:
    def test_spin_flip_analytic(self):
        dl = d_liouvillian(spin_flip_model(0.5), 1.0, mode="analytic")
        dh = 0.5 * sigma_z
        expected = -1j * (kron(dh, np.eye(2)) - kron(np.eye(2), dh.T))
        assert np.max(np.abs(dl - expected)) < 1e-14

    def test_fd_matches_analytic(self):
        model = thermal_qubit_model()
        da = d_liouvillian(model, 0.7, mode="analytic")
        df = d_liouvillian(model, 0.7, mode="central-fd", h=1e-5)
        assert np.max(np.abs(da - df)) < 1e-8

    def test_theta_independent_model(self):
        model = OpenSystemModel(
            dim=2, hamiltonian_at=lambda th: 0.5 * sigma_z,
            d_hamiltonian_at=lambda th: np.zeros((2, 2), dtype=complex),
            jumps=(JumpChannel(sigma_x, lambda th: 0.4, lambda th: 0.0),))
        assert np.max(np.abs(d_liouvillian(model, 1.0, mode="analytic"))) == 0.0
        assert np.max(np.abs(d_liouvillian(model, 1.0, mode="central-fd"))) < 1e-10

    def test_analytic_requires_derivatives(self):
        model = OpenSystemModel(dim=2, hamiltonian_at=lambda th: th * sigma_z)
        with pytest.raises(ModelError):
            d_liouvillian(model, 1.0, mode="analytic")


class TestPropagate:
    def test_zero_time_identity(self):
        liou = build_liouvillian(spin_flip_model(0.5), 1.0)
        state = probe_state()
        out = propagate(liou, state, 0.0)
        assert np.max(np.abs(out.vector - state.vector)) < 1e-14

    def test_matches_closed_form_coherence(self):
        for gamma in (0.05, 0.5, 1.0, 2.0):
            liou = build_liouvillian(spin_flip_model(gamma), 1.0)
            out = propagate(liou, probe_state(), 1.3)
            wp = wp_value(TwoLevelParams(omega=1.0, gamma_x=gamma), 1.3)
            assert np.max(np.abs(out.vector - [0.5, wp, np.conj(wp), 0.5])) < 1e-12

    def test_long_time_maximally_mixed(self):
        liou = build_liouvillian(spin_flip_model(0.5), 1.0)
        out = propagate(liou, probe_state(), 60.0)
        assert np.max(np.abs(out.vector - [0.5, 0, 0, 0.5])) < 1e-10

    def test_hermiticity_and_trace_kept(self, rng):
        liou = build_liouvillian(thermal_qubit_model(), 0.4)
        state = LiouvilleState.from_density(random_density(rng, 2))
        for t in (0.1, 1.0, 7.0):
            rho = propagate(liou, state, t).density()
            assert np.max(np.abs(rho - rho.conj().T)) < 1e-9
            assert abs(np.trace(rho) - 1.0) < 1e-9

    def test_bad_liouvillian_flagged(self):
        # a generator that leaks trace must be caught at propagation time
        bad = LiouvillianMatrix(matrix=np.diag([-1.0, 0, 0, -0.5]).astype(complex),
                                theta=0.0, dim=2)
        with pytest.raises(StateError):
            propagate(bad, probe_state(), 1.0)

    def test_negative_time_rejected(self):
        liou = build_liouvillian(spin_flip_model(0.5), 1.0)
        with pytest.raises(ValueError):
            propagate(liou, probe_state(), -0.1)


class TestPurityNormalize:
    def test_pure_state_unchanged(self):
        state = probe_state()
        out = purity_normalize(state)
        assert abs(out.purity - 1.0) < 1e-12
        assert np.max(np.abs(out.vector - state.vector)) < 1e-12

    def test_maximally_mixed_scaling(self):
        state = LiouvilleState.from_density(np.eye(2) / 2)
        out = purity_normalize(state)
        assert abs(out.purity - 0.5) < 1e-14
        assert np.allclose(out.vector, np.sqrt(2) * state.vector)

    def test_evolved_state_prefactor(self):
        liou = build_liouvillian(spin_flip_model(0.5), 1.0)
        out = purity_normalize(propagate(liou, probe_state(), 1.0))
        wp = wp_value(TwoLevelParams(omega=1.0, gamma_x=0.5), 1.0)
        prefactor = 1.0 / np.sqrt(0.5 + 2 * abs(wp) ** 2)
        assert np.max(np.abs(out.vector - prefactor * np.array(
            [0.5, wp, np.conj(wp), 0.5]))) < 1e-12
        assert abs(np.linalg.norm(out.vector) - 1.0) < 1e-12

    def test_zero_vector_rejected(self):
        state = LiouvilleState(vector=np.zeros(4, dtype=complex), dim=2)
        with pytest.raises(ValueError):
            purity_normalize(state)
