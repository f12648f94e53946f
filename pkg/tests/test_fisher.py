import math

import numpy as np
import pytest

from dqfi.fisher import (FisherError, cqfi_closed_helpers, cqfi_spectral,
                         conventional_generator, crb_bounds, csld,
                         dqfi_covariance, dqfi_derivative, dqfi_overall_factor,
                         dqfi_spectral_mixed, dqfi_steady_limit,
                         dqfi_steady_series, dqfi_via_derivative, dsld,
                         dsld_spectral, evaluate_point,
                         normalized_state_derivative, split_identity_value)
from dqfi.generator import generator_spectral
from dqfi.linalg import matexp
from dqfi.model import (JumpChannel, LiouvilleState, OpenSystemModel,
                        build_liouvillian, d_liouvillian, propagate,
                        purity_normalize, sigma_x, sigma_z)
from dqfi.spectral import biorthogonal_spectrum
from dqfi.twolevel import (TwoLevelParams, analytic_cqfi, analytic_dqfi,
                           probe_state, spin_flip_model, wp_domega, wp_value)

from conftest import mixed_probe, random_three_level_model, thermal_qubit_model


def evolved_state(gamma, omega, t):
    liou = build_liouvillian(spin_flip_model(gamma), omega)
    return purity_normalize(propagate(liou, probe_state(), t))


def spectral_generator(gamma, omega, t):
    model = spin_flip_model(gamma)
    liou = build_liouvillian(model, omega)
    dl = d_liouvillian(model, omega, mode="analytic")
    return generator_spectral(biorthogonal_spectrum(liou), dl, t)


def qubit_rho_drho(gamma, t, omega=1.0):
    p = TwoLevelParams(omega=omega, gamma_x=gamma)
    wp = wp_value(p, t)
    dwp = wp_domega(p, t)
    rho = np.array([[0.5, wp], [np.conj(wp), 0.5]])
    drho = np.array([[0.0, dwp], [np.conj(dwp), 0.0]])
    return rho, drho


class TestDqfiCovariance:
    def test_matches_closed_form(self):
        got = dqfi_covariance(evolved_state(0.5, 1.0, 1.0), spectral_generator(0.5, 1.0, 1.0))
        ref = analytic_dqfi(TwoLevelParams(omega=1.0, gamma_x=0.5), 1.0)
        assert abs(got - ref) < 1e-8

    def test_zero_at_t0(self):
        assert dqfi_covariance(evolved_state(0.5, 1.0, 0.0),
                               spectral_generator(0.5, 1.0, 0.0)) == 0.0

    def test_vanishes_at_long_times(self):
        got = dqfi_covariance(evolved_state(0.5, 1.0, 40.0),
                              spectral_generator(0.5, 1.0, 40.0))
        assert got < 1e-8

    def test_requires_normalized_state(self):
        raw = propagate(build_liouvillian(spin_flip_model(0.5), 1.0), probe_state(), 1.0)
        with pytest.raises(ValueError):
            dqfi_covariance(raw, spectral_generator(0.5, 1.0, 1.0))


class TestDqfiDerivative:
    @pytest.mark.parametrize("gamma,t", [(0.3, 0.7), (0.5, 2.0), (2.0, 1.0)])
    def test_agrees_with_covariance(self, gamma, t):
        model = spin_flip_model(gamma)
        f_fd = dqfi_via_derivative(model, 1.0, probe_state(), t)
        f_cov = dqfi_covariance(evolved_state(gamma, 1.0, t),
                                spectral_generator(gamma, 1.0, t))
        assert abs(f_fd - f_cov) < 1e-5

    def test_theta_independent_model_zero(self):
        model = OpenSystemModel(
            dim=2, hamiltonian_at=lambda th: 0.5 * sigma_z,
            d_hamiltonian_at=lambda th: np.zeros((2, 2), dtype=complex),
            jumps=(JumpChannel(sigma_x, lambda th: 0.4, lambda th: 0.0),))
        assert dqfi_via_derivative(model, 1.0, probe_state(), 1.0) < 1e-12

    def test_pure_state_doubles_cqfi(self):
        # closed system: the Liouville-space value is twice the Hilbert one
        model = spin_flip_model(0.0)
        f_tilde = dqfi_via_derivative(model, 1.0, probe_state(), 1.3)
        h = 1e-6
        psi0 = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2)

        def psi(w):
            return matexp(-1j * 1.3 * 0.5 * w * sigma_z) @ psi0

        dpsi = (psi(1.0 + h) - psi(1.0 - h)) / (2 * h)
        f_q = 4 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(psi(1.0), dpsi)) ** 2)
        assert abs(f_tilde - 2 * f_q) < 1e-7

    def test_gauge_check(self):
        state = evolved_state(0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            dqfi_derivative(state, state.vector)  # Re<v|dv> = 1, not a derivative


class TestOverallFactor:
    def test_matches_covariance_for_scaled_family(self):
        # L(theta) = theta * L_base: global decay+drive rescaling
        base_model = spin_flip_model(0.5)
        l_base = build_liouvillian(base_model, 1.0).matrix
        theta, t = 0.8, 0.7
        model = OpenSystemModel(
            dim=2, hamiltonian_at=lambda th: 0.5 * th * sigma_z,
            d_hamiltonian_at=lambda th: 0.5 * sigma_z,
            jumps=(JumpChannel(sigma_x, lambda th: 0.5 * th, lambda th: 0.5),))
        liou = build_liouvillian(model, theta)
        assert np.max(np.abs(liou.matrix - theta * l_base)) < 1e-12
        state = purity_normalize(propagate(liou, probe_state(), t))
        shortcut = dqfi_overall_factor(l_base, state, theta, t)
        dl = d_liouvillian(model, theta, mode="analytic")
        g = generator_spectral(biorthogonal_spectrum(liou), dl, t)
        full = dqfi_covariance(state, g)
        assert abs(shortcut - full) < 1e-8

    def test_zero_time(self):
        l_base = build_liouvillian(spin_flip_model(0.5), 1.0).matrix
        state = purity_normalize(probe_state())
        assert dqfi_overall_factor(l_base, state, 1.0, 0.0) == 0.0

    def test_quadratic_growth_closed_system(self):
        l_base = build_liouvillian(spin_flip_model(0.0), 1.0).matrix
        t = 5e-4
        vals = []
        for tt in (t, 2 * t):
            state = purity_normalize(LiouvilleState(
                vector=matexp(l_base, tt) @ probe_state().vector, dim=2))
            vals.append(dqfi_overall_factor(l_base, state, 1.0, tt))
        assert abs(vals[1] / vals[0] - 4.0) < 1e-6


class TestSteadyState:
    def test_spin_flip_vanishes(self):
        model = spin_flip_model(0.5)
        liou = build_liouvillian(model, 1.0)
        dl = d_liouvillian(model, 1.0, mode="analytic")
        s = biorthogonal_spectrum(liou)
        for t in (0.0, 1.0, 5.0):
            assert abs(dqfi_steady_series(s, dl, t)) < 1e-12
        assert abs(dqfi_steady_limit(s, dl)) < 1e-12

    def test_series_converges_to_limit(self):
        model = thermal_qubit_model()
        liou = build_liouvillian(model, 0.4)
        dl = d_liouvillian(model, 0.4, mode="analytic")
        s = biorthogonal_spectrum(liou)
        assert abs(dqfi_steady_series(s, dl, 200.0) - dqfi_steady_limit(s, dl)) < 1e-8
        assert dqfi_steady_series(s, dl, 0.0) == 0.0

    def test_theta_dependent_steady_state_positive(self):
        model = thermal_qubit_model()
        liou = build_liouvillian(model, 0.4)
        dl = d_liouvillian(model, 0.4, mode="analytic")
        s = biorthogonal_spectrum(liou)
        limit = dqfi_steady_limit(s, dl)
        assert limit > 0.1
        # brute-force long-time oracle through the propagation pipeline
        rho0 = LiouvilleState.from_density(np.diag([0.7, 0.3]).astype(complex))
        brute = dqfi_via_derivative(model, 0.4, rho0, 60.0)
        assert abs(limit - brute) < 1e-6

    def test_zero_dl(self):
        model = spin_flip_model(0.5)
        liou = build_liouvillian(model, 1.0)
        s = biorthogonal_spectrum(liou)
        assert dqfi_steady_limit(s, np.zeros((4, 4))) == 0.0


class TestDsld:
    def test_theta_independent_zero(self):
        state = evolved_state(0.5, 1.0, 1.0)
        pair = dsld(state, np.zeros(4, dtype=complex))
        assert np.max(np.abs(pair.dsld)) == 0.0

    def test_fisher_value_from_sld(self):
        model = spin_flip_model(0.5)
        state = evolved_state(0.5, 1.0, 1.2)
        dvec = normalized_state_derivative(model, 1.0, probe_state(), 1.2)
        pair = dsld(state, dvec)
        v = state.vector
        f_sld = float(np.real(np.vdot(v, pair.dsld @ (pair.dsld @ v))))
        f_ref = dqfi_derivative(state, dvec)
        assert abs(f_sld - f_ref) < 1e-8

    def test_rank_at_most_two(self):
        from dqfi.linalg import eig_hermitian
        model = spin_flip_model(0.5)
        state = evolved_state(0.5, 1.0, 1.2)
        dvec = normalized_state_derivative(model, 1.0, probe_state(), 1.2)
        vals = eig_hermitian(dsld(state, dvec).dsld).values.real
        assert np.sum(np.abs(vals) > 1e-9) <= 2

    def test_lyapunov_relation(self):
        model = spin_flip_model(0.5)
        state = evolved_state(0.5, 1.0, 1.2)
        dvec = normalized_state_derivative(model, 1.0, probe_state(), 1.2)
        m = dsld(state, dvec).dsld
        v = state.vector
        rho_t = np.outer(v, v.conj())
        drho_t = np.outer(dvec, v.conj()) + np.outer(v, dvec.conj())
        assert np.max(np.abs(2 * drho_t - (rho_t @ m + m @ rho_t))) < 1e-8


class TestDsldSpectral:
    @pytest.mark.parametrize("t", [0.4, 1.2, 3.0])
    def test_state_action_matches_projector_form(self, t):
        gamma = 0.5
        rho, drho = qubit_rho_drho(gamma, t)
        pair = dsld_spectral(rho, drho)
        model = spin_flip_model(gamma)
        state = evolved_state(gamma, 1.0, t)
        dvec = normalized_state_derivative(model, 1.0, probe_state(), t)
        rank_one = dsld(state, dvec)
        act_spec = pair.dsld @ state.vector
        act_rank = rank_one.dsld @ state.vector
        assert np.max(np.abs(act_spec - act_rank)) < 1e-7
        v = state.vector
        f_spec = float(np.real(np.vdot(v, pair.dsld @ (pair.dsld @ v))))
        f_rank = float(np.real(np.vdot(v, rank_one.dsld @ (rank_one.dsld @ v))))
        assert abs(f_spec - f_rank) < 1e-7

    def test_pure_state_consistency(self):
        rho, drho = qubit_rho_drho(0.0, 0.9)
        pair = dsld_spectral(rho, drho)
        rho_tilde = np.outer(rho.reshape(-1), rho.reshape(-1).conj())
        rho_tilde /= np.trace(rho_tilde)
        f_tilde = float(np.real(np.trace(rho_tilde @ pair.dsld @ pair.dsld)))
        f = analytic_cqfi(TwoLevelParams(omega=1.0, gamma_x=0.0), 0.9)
        assert abs(f_tilde - 2 * f) < 1e-7

    def test_maximally_mixed_stationary(self):
        rho = np.eye(2, dtype=complex) / 2
        pair = dsld_spectral(rho, np.zeros((2, 2), dtype=complex))
        assert np.max(np.abs(pair.dsld)) < 1e-12


class TestCsld:
    def test_qubit_fisher_matches_closed_form(self):
        rho, drho = qubit_rho_drho(0.5, 1.0)
        pair = csld(rho, drho)
        f = float(np.real(np.trace(rho @ pair.csld @ pair.csld)))
        assert abs(f - analytic_cqfi(TwoLevelParams(omega=1.0, gamma_x=0.5), 1.0)) < 1e-8

    def test_diagonal_case(self):
        rho = np.diag([0.7, 0.3]).astype(complex)
        drho = np.diag([0.2, -0.2]).astype(complex)
        pair = csld(rho, drho)
        assert np.max(np.abs(pair.csld - np.diag([0.2 / 0.7, -0.2 / 0.3]))) < 1e-12

    def test_pure_state(self):
        rho, drho = qubit_rho_drho(0.0, 0.8)
        pair = csld(rho, drho)
        f = float(np.real(np.trace(rho @ pair.csld @ pair.csld)))
        assert abs(f - analytic_cqfi(TwoLevelParams(omega=1.0, gamma_x=0.0), 0.8)) < 1e-8

    def test_traceless_drho_required(self):
        rho = np.eye(2) / 2
        with pytest.raises(ValueError):
            csld(rho, np.eye(2, dtype=complex))


class TestSpectralFisherForms:
    @pytest.mark.parametrize("gamma,t", [(0.05, 2.0), (0.5, 1.0), (0.5, 4.0), (2.0, 0.7)])
    def test_cqfi_spectral_matches_closed_form(self, gamma, t):
        rho, drho = qubit_rho_drho(gamma, t)
        got = cqfi_spectral(rho, drho)
        assert abs(got - analytic_cqfi(TwoLevelParams(omega=1.0, gamma_x=gamma), t)) < 1e-8

    def test_cqfi_zero_for_stationary(self):
        rho = np.diag([0.6, 0.4]).astype(complex)
        assert cqfi_spectral(rho, np.zeros((2, 2))) == 0.0

    @pytest.mark.parametrize("gamma,t", [(0.05, 2.0), (0.5, 1.0), (0.5, 4.0), (2.0, 0.7)])
    def test_dqfi_spectral_mixed_matches_covariance(self, gamma, t):
        rho, drho = qubit_rho_drho(gamma, t)
        got = dqfi_spectral_mixed(rho, drho)
        ref = dqfi_covariance(evolved_state(gamma, 1.0, t), spectral_generator(gamma, 1.0, t))
        assert abs(got - ref) < 1e-7

    def test_dqfi_mixed_pure_doubling(self):
        rho, drho = qubit_rho_drho(0.0, 1.1)
        assert abs(dqfi_spectral_mixed(rho, drho) - 2 * cqfi_spectral(rho, drho)) < 1e-8

    def test_dqfi_mixed_maximally_mixed_zero(self):
        rho = np.eye(2, dtype=complex) / 2
        assert dqfi_spectral_mixed(rho, np.zeros((2, 2))) == 0.0

    @pytest.mark.parametrize("case", ["three-level", "thermal", "spin-flip"])
    def test_cross_form_closure(self, case):
        # the pipeline DQFI, its derivative form, and the spectral form agree
        if case == "three-level":
            model, theta, rho0 = random_three_level_model(), 0.8, mixed_probe(3)
        elif case == "thermal":
            model, theta, rho0 = thermal_qubit_model(), 0.4, mixed_probe(2)
        else:
            from dqfi.twolevel import probe_state as _probe
            model, theta, rho0 = spin_flip_model(0.5), 1.0, _probe()
        t = 1.2
        liou = build_liouvillian(model, theta)
        dl = d_liouvillian(model, theta, mode="analytic")
        state = purity_normalize(propagate(liou, rho0, t))
        f_cov = dqfi_covariance(state, generator_spectral(biorthogonal_spectrum(liou), dl, t))
        f_fd = dqfi_via_derivative(model, theta, rho0, t)
        h = 1e-6
        rp = propagate(build_liouvillian(model, theta + h), rho0, t).density()
        rm = propagate(build_liouvillian(model, theta - h), rho0, t).density()
        drho = (rp - rm) / (2 * h)
        drho = (drho + drho.conj().T) / 2
        f_mixed = dqfi_spectral_mixed(propagate(liou, rho0, t).density(), drho)
        assert abs(f_cov - f_fd) < 1e-5 * max(1, f_cov)
        assert abs(f_cov - f_mixed) < 1e-5 * max(1, f_cov)


class TestSplitIdentity:
    @pytest.mark.parametrize("gamma,t", [(0.05, 1.0), (0.5, 1.0), (0.5, 3.0), (1.1, 0.5)])
    def test_split_equals_covariance(self, gamma, t):
        state = evolved_state(gamma, 1.0, t)
        g = spectral_generator(gamma, 1.0, t)
        f = dqfi_covariance(state, g)
        assert abs(split_identity_value(state, g) - f) < 1e-8 * max(1.0, f)


class TestClosedSystemHelpers:
    def test_overall_factor_generator(self):
        h_mat = sigma_z
        t = 0.8

        def family(th):
            return matexp(-1j * th * t * h_mat)

        gen = conventional_generator(family, 0.6)
        assert np.max(np.abs(gen - h_mat * t)) < 1e-6

    def test_theta_independent_family(self):
        u = matexp(1j * sigma_x)
        gen = conventional_generator(lambda th: u, 0.5)
        assert np.max(np.abs(gen)) < 1e-10

    def test_field_angle_max_cqfi(self):
        b, t = 1.0, 0.8

        def family(th):
            return matexp(-1j * t * b * (math.cos(th) * sigma_x + math.sin(th) * sigma_z))

        gen = conventional_generator(family, 0.4)
        _, f_max, probe = cqfi_closed_helpers(gen, np.array([1.0, 0.0]))
        assert abs(f_max - 4 * math.sin(b * t) ** 2) < 1e-6
        f_probe, _, _ = cqfi_closed_helpers(gen, probe)
        assert abs(f_probe - f_max) < 1e-9

    def test_eigenvector_probe_zero(self):
        from dqfi.linalg import eig_hermitian
        gen = sigma_z * 0.7
        psi = eig_hermitian(gen).right_vectors[:, 0]
        f_pure, _, _ = cqfi_closed_helpers(gen, psi)
        assert abs(f_pure) < 1e-12

    def test_sigma_z_time_bound(self):
        _, f_max, _ = cqfi_closed_helpers(sigma_z * 2.0, np.array([1.0, 0.0]))
        assert abs(f_max - 16.0) < 1e-12

    def test_non_unitary_family_rejected(self):
        with pytest.raises(ValueError):
            conventional_generator(lambda th: np.diag([1.0, 2.0]).astype(complex), 0.5)


class TestCrbBounds:
    def test_simple_value(self):
        assert crb_bounds(4.0, 1) == 0.25

    def test_smaller_gamma_smaller_bound(self):
        # the benchmark peak DQFI grows as the decay rate shrinks
        peaks = {}
        for gamma in (0.05, 0.5):
            ts = np.linspace(0.01, 10.0, 120)
            p = TwoLevelParams(omega=1.0, gamma_x=gamma)
            peaks[gamma] = max(analytic_dqfi(p, t) for t in ts)
        assert crb_bounds(peaks[0.05]) < crb_bounds(peaks[0.5])

    def test_divergent_marker(self):
        assert math.isinf(crb_bounds(0.0))

    def test_validation(self):
        with pytest.raises(ValueError):
            crb_bounds(1.0, 0)
        with pytest.raises(ValueError):
            crb_bounds(-1.0, 1)


class TestShortTimeScaling:
    def test_quadratic_regime(self):
        model = spin_flip_model(0.5)
        vals = []
        for t in (2.5e-4, 5e-4, 1e-3):
            f = dqfi_via_derivative(model, 1.0, probe_state(), t)
            vals.append(f / t ** 2)
        assert max(vals) / min(vals) - 1.0 < 0.01


class TestLepContinuity:
    def test_dqfi_brackets_across_lep(self):
        for t in (0.5, 2.0, 5.0):
            f0 = analytic_dqfi(TwoLevelParams(omega=1.0, gamma_x=1.0), t)
            fp = analytic_dqfi(TwoLevelParams(omega=1.0, gamma_x=1.0 + 1e-4), t)
            fm = analytic_dqfi(TwoLevelParams(omega=1.0, gamma_x=1.0 - 1e-4), t)
            assert math.isfinite(f0)
            assert abs(f0 - fp) < 1e-2
            assert abs(f0 - fm) < 1e-2


class TestEvaluatePoint:
    def test_full_result(self):
        r = evaluate_point(spin_flip_model(0.5), 1.0, probe_state(), 1.0)
        assert abs(r.dqfi - analytic_dqfi(TwoLevelParams(omega=1.0, gamma_x=0.5), 1.0)) < 1e-7
        assert abs(r.cqfi - analytic_cqfi(TwoLevelParams(omega=1.0, gamma_x=0.5), 1.0)) < 1e-6
        assert r.dqfi <= r.bound + 1e-8
        assert r.route == "spectral"
        assert abs(r.var_bound - 1.0 / r.dqfi) < 1e-12

    def test_lep_point_uses_fallback_route(self):
        r = evaluate_point(spin_flip_model(1.0), 1.0, probe_state(), 1.0)
        assert r.route.startswith(("ep-jordan", "quadrature"))
        assert abs(r.dqfi - analytic_dqfi(TwoLevelParams(omega=1.0, gamma_x=1.0), 1.0)) < 1e-5

    def test_long_time_precision_fallback(self):
        r = evaluate_point(spin_flip_model(2.0), 1.0, probe_state(), 9.0)
        assert "state-fd" in r.route
        assert abs(r.dqfi - analytic_dqfi(TwoLevelParams(omega=1.0, gamma_x=2.0), 9.0)) < 1e-7
