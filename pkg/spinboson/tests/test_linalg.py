import numpy as np
from django.test import SimpleTestCase, override_settings
from numpy.testing import assert_allclose

from spinboson.services import linalg
from spinboson.services.exceptions import DimensionMismatchError, DimensionOverflowError, NotHermitianError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class HermitianEigTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_reconstructs_random_hermitian(self):
        A = linalg.random_hermitian(6, self.rng)
        eig = linalg.herm_eig(A)
        assert_allclose(eig.reconstruct(), A, atol=1e-12)
        self.assertTrue(np.all(np.diff(eig.eigenvalues) >= 0))
        self.assertEqual(eig.dimension, 6)

    def test_unitary_exp_is_unitary_and_matches_diagonal_phases(self):
        U = linalg.unitary_exp(SIGMA_Z, 0.3)
        assert_allclose(U, np.diag([np.exp(0.3j), np.exp(-0.3j)]), atol=1e-14)
        V = linalg.unitary_exp(linalg.random_hermitian(5, self.rng), -1.7)
        assert_allclose(V.conj().T @ V, np.eye(5), atol=1e-12)

    def test_sigma_x_spectrum(self):
        eig = linalg.herm_eig(SIGMA_X)
        assert_allclose(eig.eigenvalues, [-1.0, 1.0], atol=1e-15)

    def test_unitary_exp_group_law(self):
        A = linalg.random_hermitian(4, self.rng)
        for s, t in ((0.3, 1.1), (-0.7, 0.2), (2.5, -2.5)):
            assert_allclose(linalg.unitary_exp(A, s) @ linalg.unitary_exp(A, t), linalg.unitary_exp(A, s + t), atol=1e-12)

    def test_exp_of_zero_time_is_identity(self):
        assert_allclose(linalg.unitary_exp(SIGMA_X, 0.0), np.eye(2), atol=1e-15)

    def test_rejects_non_hermitian(self):
        with self.assertRaises(NotHermitianError):
            linalg.herm_eig(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_tiny_asymmetry_is_symmetrized(self):
        A = SIGMA_X.copy()
        A[0, 1] += 1e-12
        H = linalg.require_hermitian(A)
        assert_allclose(H, H.conj().T, atol=0)

    def test_rejects_non_square(self):
        with self.assertRaises(DimensionMismatchError):
            linalg.require_hermitian(np.zeros((2, 3)))


class KronAndPartialTraceTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(5)

    def test_partial_traces_of_product(self):
        A = linalg.random_density_matrix(2, self.rng)
        B = linalg.random_density_matrix(3, self.rng)
        G = linalg.kron(A, B)
        assert_allclose(linalg.partial_trace_boson(G, (2, 3)), A, atol=1e-14)
        assert_allclose(linalg.partial_trace_spin(G, (2, 3)), B, atol=1e-14)

    def test_kron_mixed_product(self):
        A, B, C, D = (self.rng.normal(size=(n, n)) + 1j * self.rng.normal(size=(n, n)) for n in (2, 3, 2, 3))
        assert_allclose(linalg.kron(A, B) @ linalg.kron(C, D), linalg.kron(A @ C, B @ D), atol=1e-12)

    def test_kron_of_diagonals(self):
        assert_allclose(linalg.kron(SIGMA_Z, np.diag([0.0, 1.0])), np.diag([0.0, 1.0, 0.0, -1.0]), atol=0)

    def test_partial_trace_keeps_positivity(self):
        for _ in range(5):
            reduced = linalg.partial_trace_boson(linalg.random_density_matrix(6, self.rng), (2, 3))
            self.assertAlmostEqual(np.trace(reduced).real, 1.0, places=12)
            self.assertGreater(np.linalg.eigvalsh(reduced).min(), -1e-12)

    def test_bell_state_reduces_to_maximally_mixed(self):
        bell = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / np.sqrt(2)
        assert_allclose(linalg.partial_trace_boson(np.outer(bell, bell.conj()), (2, 2)), np.eye(2) / 2, atol=1e-15)

    def test_partial_trace_checks_dims(self):
        with self.assertRaises(DimensionMismatchError):
            linalg.partial_trace_boson(np.eye(6), (2, 4))

    @override_settings(SIMULATION_MAX_DIMENSION=8)
    def test_kron_refuses_to_exceed_dimension_limit(self):
        with self.assertRaises(DimensionOverflowError):
            linalg.kron(np.eye(3), np.eye(3))
        self.assertEqual(linalg.kron(np.eye(2), np.eye(4)).shape, (8, 8))


class DistanceTests(SimpleTestCase):
    def test_trace_distance_of_orthogonal_pure_states_is_one(self):
        up = np.diag([1.0, 0.0]).astype(complex)
        down = np.diag([0.0, 1.0]).astype(complex)
        self.assertAlmostEqual(linalg.trace_distance(up, down), 1.0, places=14)
        self.assertAlmostEqual(linalg.trace_distance(up, up), 0.0, places=14)

    def test_trace_distance_is_a_metric(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            rho, sigma, tau = (linalg.random_density_matrix(3, rng) for _ in range(3))
            d = linalg.trace_distance(rho, sigma)
            self.assertAlmostEqual(d, linalg.trace_distance(sigma, rho), places=14)
            self.assertLessEqual(d, linalg.trace_distance(rho, tau) + linalg.trace_distance(tau, sigma) + 1e-12)
            self.assertLessEqual(d, 1.0 + 1e-12)

    def test_trace_norm_is_sum_of_singular_values(self):
        self.assertAlmostEqual(linalg.trace_norm(np.diag([1.0, -2.0])), 3.0, places=14)
        self.assertAlmostEqual(linalg.trace_norm(np.array([[0, 2j], [0, 0]])), 2.0, places=14)

    def test_trace_distance_rejects_shape_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            linalg.trace_distance(np.eye(2) / 2, np.eye(3) / 3)

    def test_random_density_matrix_is_a_state(self):
        rho = linalg.random_density_matrix(4, np.random.default_rng(3), rank=2)
        self.assertAlmostEqual(np.trace(rho).real, 1.0, places=12)
        self.assertTrue(linalg.is_hermitian(rho))
        eigenvalues = np.linalg.eigvalsh(rho)
        self.assertGreater(eigenvalues.min(), -1e-12)
        self.assertEqual(int(np.sum(eigenvalues > 1e-10)), 2)

    def test_expectation(self):
        rho = np.diag([0.25, 0.75]).astype(complex)
        self.assertAlmostEqual(linalg.expectation(rho, SIGMA_Z), -0.5)
