import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from polariton_bh.fock_space import CavityGraph, enumerate_basis, ladder_operator, state_index
from polariton_bh.open_dynamics import (
    IntegrationError,
    IntegratorControl,
    ValidityWarning,
    evolve,
    initial_mott_state,
    lindblad_derivative,
)
from polariton_bh.polariton_params import (
    PhysicalParams,
    effective_parameters,
    make_ramp,
    toroidal_2005,
)

TRACE_BOUND = 1e-8
HERM_BOUND = 1e-9
EIG_BOUND = -1e-8


def assert_integrity(series):
    assert np.max(np.abs(series.trace - 1.0)) < TRACE_BOUND
    assert np.max(series.hermiticity) < HERM_BOUND
    assert np.min(series.min_eigenvalue) > EIG_BOUND


def lossy_cavity(gamma_c=1e6, g24=0.0, two_omega_alpha=0.0):
    # Omega_L = g so the dark polariton is half photon: Gamma = gamma_c / 2
    return PhysicalParams(g13=1e10, g24=g24, omega_l=1e10, delta_cap=-1e9, delta_small=-1e9,
                          two_omega_alpha=two_omega_alpha, n_atoms=1, gamma_c=gamma_c)


@pytest.fixture(scope="module")
def default_ramp():
    b = enumerate_basis(3, 3)
    rho0 = initial_mott_state(b, (1, 1, 1))
    return evolve(rho0, toroidal_2005(), make_ramp(7.8e10, 1.1e12, 1e-6), CavityGraph.cycle(3), b)


class TestLindbladDerivative:
    def test_two_level_decay_example(self):
        b = enumerate_basis(1, 1)
        a = ladder_operator(b, 0)
        rho = np.diag([0.0, 1.0]).astype(complex)
        d = lindblad_derivative(np.zeros((2, 2)), [(a, 3.0)], rho)
        np.testing.assert_allclose(d, 3.0 * np.diag([1.0, -1.0]), atol=1e-15)

    def test_trace_free_and_hermitian(self):
        rng = np.random.default_rng(1)
        b = enumerate_basis(2, 2)
        x = rng.normal(size=(b.dim, b.dim)) + 1j * rng.normal(size=(b.dim, b.dim))
        rho = x @ x.conj().T
        rho /= np.trace(rho)
        h = rng.normal(size=(b.dim, b.dim))
        h = h + h.T
        d = lindblad_derivative(h, [(ladder_operator(b, i), 0.5 + i) for i in range(2)], rho)
        assert abs(np.trace(d)) < 1e-13
        assert np.max(np.abs(d - d.conj().T)) < 1e-13

    def test_unitary_part(self):
        h = np.array([[0.0, 1.0], [1.0, 0.0]])
        rho = np.diag([1.0, 0.0]).astype(complex)
        np.testing.assert_allclose(lindblad_derivative(h, [], rho), -1j * (h @ rho - rho @ h))

    def test_negative_rate(self):
        b = enumerate_basis(1, 1)
        with pytest.raises(ValueError, match="negative"):
            lindblad_derivative(np.zeros((2, 2)), [(ladder_operator(b, 0), -1.0)], np.eye(2) / 2)


def test_single_site_decay_is_exponential():
    p = lossy_cavity()
    gamma = effective_parameters(p).gamma
    assert gamma == pytest.approx(5e5, rel=1e-14)
    b = enumerate_basis(1, 1)
    ramp = make_ramp(p.omega_l, p.omega_l, 4e-6)
    s = evolve(initial_mott_state(b, (1,)), p, ramp, CavityGraph.cycle(1), b,
               IntegratorControl(samples=41))
    expected = np.exp(-gamma * s.times)
    np.testing.assert_allclose(s.mean_n[:, 0], expected, rtol=1e-6)
    assert s.kappa[0] == 0.0 and s.J[0] == 0.0


def test_fock_two_decays_through_one():
    p = lossy_cavity()
    gamma = effective_parameters(p).gamma
    b = enumerate_basis(1, 2)
    s = evolve(initial_mott_state(b, (2,)), p, make_ramp(1e10, 1e10, 2e-6), CavityGraph.cycle(1), b,
               IntegratorControl(samples=21))
    np.testing.assert_allclose(s.mean_n[:, 0], 2 * np.exp(-gamma * s.times), rtol=1e-6)
    assert_integrity(s)


def test_lossless_fock_state_is_stationary():
    p = lossy_cavity(gamma_c=0.0, g24=1e8)
    b = enumerate_basis(1, 3)
    s = evolve(initial_mott_state(b, (2,)), p, make_ramp(1e10, 3e10, 1e-6), CavityGraph.cycle(1), b,
               IntegratorControl(samples=11))
    np.testing.assert_allclose(s.mean_n[:, 0], 2.0, atol=1e-12)
    np.testing.assert_allclose(s.purity, 1.0, atol=1e-10)


def test_particle_number_conserved_without_loss():
    p = replace(toroidal_2005(), gamma_c=0.0)
    b = enumerate_basis(3, 3)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ValidityWarning)
        s = evolve(initial_mott_state(b, (1, 1, 1)), p, make_ramp(7.8e10, 1.1e12, 3e-7),
                   CavityGraph.cycle(3), b, IntegratorControl(samples=31))
    np.testing.assert_allclose(s.mean_n.sum(axis=1), 3.0, atol=1e-9)
    np.testing.assert_allclose(s.purity, 1.0, atol=1e-8)
    assert_integrity(s)


class TestDefaultRamp:
    def test_integrity(self, default_ramp):
        assert_integrity(default_ramp)

    def test_sample_grid(self, default_ramp):
        assert len(default_ramp) == 200
        assert default_ramp.times[0] == 0.0 and default_ramp.times[-1] == 1e-6
        assert default_ramp.omega_l[-1] == 1.1e12

    def test_occupation_stays_near_one(self, default_ramp):
        n1 = default_ramp.mean_n[:, 0]
        assert np.all((n1 >= 0.9) & (n1 <= 1.02))

    def test_fluctuations_grow(self, default_ramp):
        f1 = default_ramp.fluctuation[:, 0]
        assert f1[0] == 0.0
        assert f1[-1] > 0.5
        assert f1[-1] >= 10 * max(f1[1], 1e-12)

    def test_sites_equivalent(self, default_ramp):
        np.testing.assert_allclose(default_ramp.mean_n[:, 1], default_ramp.mean_n[:, 0], atol=1e-9)
        np.testing.assert_allclose(default_ramp.fluctuation[:, 2], default_ramp.fluctuation[:, 0],
                                   atol=1e-9)

    def test_purity_decreases(self, default_ramp):
        assert np.all(default_ramp.purity <= 1.0 + 1e-12)
        assert np.all(np.diff(default_ramp.purity) < 1e-12)

    def test_columns(self, default_ramp):
        cols = default_ramp.columns()
        assert cols[:5] == ["t", "omega_l", "kappa", "j", "gamma"]
        assert cols[5:] == ["n_1", "n_2", "n_3", "f_1", "f_2", "f_3", "trace", "purity"]
        assert all(len(r) == len(cols) for r in default_ramp.rows())


def test_step_halving_convergence():
    b = enumerate_basis(3, 3)
    rho0 = initial_mott_state(b, (1, 1, 1))
    ramp = make_ramp(7.8e10, 1.1e12, 1e-6)
    coarse = evolve(rho0, toroidal_2005(), ramp, CavityGraph.cycle(3), b,
                    IntegratorControl(samples=21, max_step=2e-9))
    fine = evolve(rho0, toroidal_2005(), ramp, CavityGraph.cycle(3), b,
                  IntegratorControl(samples=21, max_step=1e-9))
    assert np.max(np.abs(coarse.mean_n - fine.mean_n)) < 1e-6
    assert np.max(np.abs(coarse.fluctuation - fine.fluctuation)) < 1e-6


def test_validity_warning_on_resonant_pair():
    b = enumerate_basis(2, 2)
    p = replace(toroidal_2005(), delta_small=0.0)
    with pytest.warns(ValidityWarning, match="pair_resonance"):
        evolve(initial_mott_state(b, (1, 1)), p, make_ramp(7.8e10, 8e10, 1e-8),
               CavityGraph.cycle(2), b, IntegratorControl(samples=2))


class TestInputs:
    def test_mott_state(self):
        b = enumerate_basis(3, 3)
        rho = initial_mott_state(b, (1, 1, 1))
        k = state_index(b, (1, 1, 1))
        assert rho[k, k] == 1.0 and np.count_nonzero(rho) == 1

    def test_mott_state_outside_basis(self):
        with pytest.raises(KeyError):
            initial_mott_state(enumerate_basis(2, 2), (2, 1))

    def test_rejects_bad_trace(self):
        b = enumerate_basis(1, 1)
        with pytest.raises(ValueError, match="trace"):
            evolve(np.eye(2, dtype=complex), lossy_cavity(), make_ramp(1e10, 1e10),
                   CavityGraph.cycle(1), b)

    def test_rejects_one_sample(self):
        b = enumerate_basis(1, 1)
        with pytest.raises(ValueError):
            evolve(initial_mott_state(b, (1,)), lossy_cavity(), make_ramp(1e10, 1e10),
                   CavityGraph.cycle(1), b, IntegratorControl(samples=1))

    def test_step_budget_exhausted(self):
        b = enumerate_basis(1, 1)
        with pytest.raises(IntegrationError, match="steps"):
            evolve(initial_mott_state(b, (1,)), lossy_cavity(), make_ramp(1e10, 1e10, 1e-3),
                   CavityGraph.cycle(1), b, IntegratorControl(samples=2, max_step=1e-9, max_steps=10))


def test_decay_rate_matches_closed_form_units():
    # Gamma (1/s) times the ramp time must be dimensionless and O(1) here
    p = lossy_cavity()
    assert math.isclose(effective_parameters(p).gamma * 4e-6, 2.0)
