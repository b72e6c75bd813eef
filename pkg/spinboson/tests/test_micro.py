import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from spinboson.services import fock, micro
from spinboson.services.exceptions import DimensionMismatchError, GridError, InvalidStateError
from spinboson.services.harness import residual_order
from spinboson.services.linalg import conjugate, trace_norm, unitary_exp

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
GROUND = np.diag([1.0, 0.0]).astype(complex)
PLUS = 0.5 * np.ones((2, 2), dtype=complex)


def standard_model(eps=0.25, regime=micro.NuRegime.STATIONARY, g=1.0, cutoffs=None, z=1.0):
    cutoffs = cutoffs or fock.auto_cutoffs([z], eps)
    return micro.SpinBosonModel(
        S=SIGMA_Z, s_op=SIGMA_X, omega=[1.0], g=[g], nu_regime=regime,
        fock=fock.FockSpace(cutoffs=cutoffs, epsilon=eps),
    )


def coherent_product(model, gamma, z):
    return micro.product_state(gamma, fock.coherent_state(model.fock, [z]), model.epsilon)


class ModelTests(SimpleTestCase):
    def test_regimes(self):
        self.assertEqual(micro.NuRegime.STATIONARY.nu_of(0.25), 1.0)
        self.assertEqual(micro.NuRegime.FREE_FIELD.nu_of(0.25), 4.0)
        self.assertEqual(micro.NuRegime.STATIONARY.nu_limit, 0.0)
        self.assertEqual(micro.NuRegime('free_field').nu_limit, 1.0)

    def test_hamiltonian_is_hermitian_with_joint_dimension(self):
        model = standard_model()
        H = micro.assemble_hamiltonian(model)
        self.assertEqual(H.shape, (2 * model.fock.dimension,) * 2)
        assert_allclose(H, H.conj().T, atol=0)

    def test_rejects_mismatched_spin_operators(self):
        with self.assertRaises(DimensionMismatchError):
            micro.SpinBosonModel(
                S=SIGMA_Z, s_op=np.eye(3), omega=[1.0], g=[1.0], nu_regime='stationary',
                fock=fock.FockSpace(cutoffs=(4,), epsilon=0.5),
            )

    def test_joint_state_requires_unit_trace(self):
        with self.assertRaises(InvalidStateError):
            micro.JointState(rho=np.eye(4), epsilon=0.5)

    def test_positivity_check_rejects_negative_spectrum(self):
        state = micro.JointState(rho=np.diag([1.5, -0.5, 0.0, 0.0]), epsilon=0.5)
        self.assertAlmostEqual(state.min_eigenvalue(), -0.5)
        with self.assertRaises(InvalidStateError):
            state.validate_positive()
        valid = micro.JointState(rho=np.diag([0.5, 0.5, 0.0, 0.0]), epsilon=0.5)
        self.assertIs(valid.validate_positive(), valid)


class EvolutionTests(SimpleTestCase):
    def test_zero_coupling_reduces_to_free_spin_motion(self):
        for regime in micro.NuRegime:
            model = standard_model(g=0.0, regime=regime)
            state = coherent_product(model, PLUS, 1.0)
            for t in (0.5, 2.0):
                reduced = micro.reduced_spin_state(model, micro.evolve(model, state, t))
                expected = conjugate(unitary_exp(SIGMA_Z, -t), PLUS)
                assert_allclose(reduced, expected, atol=1e-10)

    def test_unitarity_preserves_trace_and_spectrum(self):
        model = standard_model()
        state = coherent_product(model, PLUS, 1.0)
        evolved = micro.evolve(model, state, 10.0)
        self.assertAlmostEqual(np.trace(evolved.rho).real, 1.0, places=9)
        assert_allclose(np.linalg.eigvalsh(evolved.rho), np.linalg.eigvalsh(state.rho), atol=1e-9)

    def test_evolution_composes_and_tracks_time(self):
        model = standard_model(regime=micro.NuRegime.FREE_FIELD)
        state = coherent_product(model, GROUND, 1.0)
        stepwise = micro.evolve(model, micro.evolve(model, state, 0.4), 0.7)
        direct = micro.evolve(model, state, 1.1)
        self.assertAlmostEqual(stepwise.time, 1.1)
        assert_allclose(stepwise.rho, direct.rho, atol=1e-10)

    def test_interaction_picture_round_trip(self):
        model = standard_model(regime=micro.NuRegime.FREE_FIELD)
        state = micro.evolve(model, coherent_product(model, GROUND, 1.0), 0.8)
        upsilon = micro.interaction_picture(model, state)
        assert_allclose(micro.from_interaction_picture(model, upsilon).rho, state.rho, atol=1e-12)

    def test_free_unitary_matches_free_hamiltonian(self):
        model = standard_model(regime=micro.NuRegime.FREE_FIELD)
        propagator = micro.propagator_for(model)
        expected = unitary_exp(micro.free_hamiltonian(model), -0.6)
        assert_allclose(propagator.free_unitary(0.6), expected, atol=1e-10)


class MomentTests(SimpleTestCase):
    def test_vacuum_moment_is_one(self):
        model = standard_model(z=0.0)
        state = coherent_product(model, GROUND, 0.0)
        for delta in (0.5, 1.0, 3.0):
            self.assertAlmostEqual(micro.number_moment(model.fock, state, delta), 1.0, places=12)

    def test_coherent_first_moment(self):
        for eps in (0.25, 0.0625):
            model = standard_model(eps=eps)
            state = coherent_product(model, GROUND, 1.0)
            self.assertAlmostEqual(micro.number_moment(model.fock, state, 1.0), 2.0, places=6)

    def test_moment_is_monotone_in_delta(self):
        model = standard_model()
        state = coherent_product(model, GROUND, 1.0)
        moments = [micro.number_moment(model.fock, state, d) for d in (0.5, 1.0, 2.0)]
        self.assertTrue(moments[0] <= moments[1] <= moments[2])

    def test_moments_of_state_and_interaction_picture_coincide(self):
        model = standard_model(regime=micro.NuRegime.FREE_FIELD)
        state = micro.evolve(model, coherent_product(model, GROUND, 1.0), 1.0)
        upsilon = micro.interaction_picture(model, state)
        self.assertAlmostEqual(
            micro.number_moment(model.fock, state, 0.5), micro.number_moment(model.fock, upsilon, 0.5), places=10
        )

    def test_rejects_non_positive_exponent(self):
        model = standard_model()
        with self.assertRaises(InvalidStateError):
            micro.number_moment(model.fock, coherent_product(model, GROUND, 1.0), 0.0)


class QuantumFourierTests(SimpleTestCase):
    def _generous_model(self, eps, z, etas):
        points = [np.array([z])] + [np.array([z]) + 1j * eps * eta for eta in etas]
        cutoffs = fock.auto_cutoffs(points, eps, tail=1e-14, min_cutoff=24)
        return standard_model(eps=eps, cutoffs=cutoffs)

    def test_zero_eta_is_reduced_state(self):
        model = standard_model()
        state = micro.evolve(model, coherent_product(model, PLUS, 1.0), 0.5)
        assert_allclose(micro.quantum_fourier(model, state, [0.0]), micro.reduced_spin_state(model, state), atol=0)

    def test_product_state_matches_coherent_closed_form(self):
        etas = [np.array([e]) for e in (0.5, 2.0, 1j, -1 + 1j)]
        model = self._generous_model(0.125, 1.0, etas)
        state = coherent_product(model, PLUS, 1.0)
        for eta in etas:
            expected = fock.coherent_fourier([1.0], eta, 0.125) * PLUS
            assert_allclose(micro.quantum_fourier(model, state, eta), expected, atol=1e-6)

    def test_trace_norm_is_at_most_one(self):
        rng = np.random.default_rng(17)
        model = standard_model(eps=0.125, regime=micro.NuRegime.FREE_FIELD)
        state = micro.evolve(model, coherent_product(model, PLUS, 1.0), 1.3)
        for _ in range(6):
            eta = rng.normal(size=1) + 1j * rng.normal(size=1)
            self.assertLessEqual(trace_norm(micro.quantum_fourier(model, state, eta)), 1.0 + 1e-10)

    def test_positive_definiteness(self):
        rng = np.random.default_rng(9)
        etas = [np.array([e]) for e in (0.0, 0.4, -0.3j, 0.5 + 0.2j)]
        model = self._generous_model(0.25, 1.0, etas + [a - b for a in etas for b in etas])
        state = micro.evolve(model, coherent_product(model, PLUS, 1.0), 0.7)
        for _ in range(3):
            ops = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in etas]
            self.assertGreater(micro.quantum_positive_definiteness(model, state, etas, ops), -1e-6)


class DuhamelTests(SimpleTestCase):
    def test_zero_coupling_residual_vanishes(self):
        model = standard_model(g=0.0, regime=micro.NuRegime.FREE_FIELD)
        initial = coherent_product(model, PLUS, 1.0)
        times, trajectory = micro.duhamel_trajectory(model, initial, 0.0, 1.0, 8)
        self.assertLess(micro.duhamel_residual(model, times, trajectory, [0.5], SIGMA_X), 1e-10)

    def test_identity_test_operator_at_zero_eta(self):
        model = standard_model()
        initial = coherent_product(model, GROUND, 1.0)
        times, trajectory = micro.duhamel_trajectory(model, initial, 0.0, 1.0, 8)
        self.assertLess(micro.duhamel_residual(model, times, trajectory, [0.0], np.eye(2)), 1e-10)

    def test_residual_is_second_order_in_grid_spacing(self):
        for regime in micro.NuRegime:
            model = standard_model(regime=regime)
            initial = coherent_product(model, GROUND, 1.0)
            steps_list = (16, 32, 64)
            residuals = []
            for steps in steps_list:
                times, trajectory = micro.duhamel_trajectory(model, initial, 0.0, 1.0, steps)
                residuals.append(micro.duhamel_residual(model, times, trajectory, [0.5], SIGMA_X))
            self.assertGreaterEqual(residual_order(steps_list, residuals), 1.8)

    def test_grid_checks(self):
        model = standard_model()
        initial = coherent_product(model, GROUND, 1.0)
        with self.assertRaises(GridError):
            micro.uniform_grid(0.0, 1.0, 0)
        times, trajectory = micro.duhamel_trajectory(model, initial, 0.0, 1.0, 4)
        with self.assertRaises(GridError):
            micro.duhamel_residual(model, times[:1], trajectory[:1], [0.5], SIGMA_X)
        with self.assertRaises(GridError):
            micro.duhamel_residual(model, np.array([0.0, 0.1, 0.5, 0.6, 1.0]), trajectory, [0.5], SIGMA_X)


class PureDephasingTests(SimpleTestCase):
    def test_independent_boson_solution(self):
        S = np.diag([0.5, -0.5]).astype(complex)
        s_op = np.diag([1.0, -1.0]).astype(complex)
        z = 0.8 + 0.3j
        for regime in micro.NuRegime:
            for eps in (0.25, 0.125):
                cutoffs = fock.auto_cutoffs([z], eps, tail=1e-14, min_cutoff=30)
                model = micro.SpinBosonModel(
                    S=S, s_op=s_op, omega=[1.0], g=[0.5], nu_regime=regime,
                    fock=fock.FockSpace(cutoffs=cutoffs, epsilon=eps),
                )
                state = coherent_product(model, PLUS, z)
                for t in (0.5, 1.0):
                    reduced = micro.reduced_spin_state(model, micro.evolve(model, state, t))
                    oracle = micro.pure_dephasing_reduced_state(model, PLUS, [z], t)
                    assert_allclose(reduced, oracle, atol=1e-6)

    def test_rejects_non_diagonal_models(self):
        model = standard_model()
        with self.assertRaises(InvalidStateError):
            micro.pure_dephasing_reduced_state(model, PLUS, [1.0], 1.0)
