"""
Dense complex linear algebra used by every other service module.

Operators are plain complex128 numpy arrays. Exponentials of Hermitian
generators go through the Hermitian eigendecomposition so the result is
unitary to machine precision.
"""
import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from scipy import linalg as sla

from .exceptions import (
    DimensionMismatchError,
    DimensionOverflowError,
    EigensolverError,
    NotHermitianError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HermitianEig:
    """Eigenvalues (ascending) and unitary eigenvector columns of a Hermitian matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dimension(self):
        return self.eigenvalues.shape[0]

    def exp(self, s):
        """exp(i s A) for the matrix A this decomposition came from."""
        phases = np.exp(1j * s * self.eigenvalues)
        return (self.eigenvectors * phases) @ self.eigenvectors.conj().T

    def reconstruct(self):
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


def as_matrix(A):
    """Coerce to a 2-D complex128 array with finite entries."""
    M = np.asarray(A, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] == 0 or M.shape[1] == 0:
        raise DimensionMismatchError(f"expected a non-empty matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def _require_square(A, what='matrix'):
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"{what} must be square, got shape {A.shape}")


def hermiticity_tolerance(A):
    return settings.SIMULATION_HERMITICITY_RTOL * (1.0 + float(np.max(np.abs(A))))


def is_hermitian(A, tol=None):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    if tol is None:
        tol = hermiticity_tolerance(A)
    return float(np.max(np.abs(A - A.conj().T))) <= tol


def hermitian_part(A):
    A = np.asarray(A, dtype=np.complex128)
    return 0.5 * (A + A.conj().T)


def require_hermitian(A, what='operator'):
    A = as_matrix(A)
    _require_square(A, what)
    residual = float(np.max(np.abs(A - A.conj().T)))
    tol = hermiticity_tolerance(A)
    if residual > tol:
        raise NotHermitianError(f"{what} is not Hermitian: max|A - A^dagger| = {residual:.3e} > {tol:.3e}")
    return hermitian_part(A)


def herm_eig(A):
    """
    Eigendecomposition of a Hermitian matrix.

    Raises:
        NotHermitianError: if A deviates from A^dagger beyond the tolerance.
        EigensolverError: if LAPACK does not converge.
    """
    H = require_hermitian(A)
    try:
        eigenvalues, eigenvectors = sla.eigh(H)
    except np.linalg.LinAlgError as exc:
        logger.error(f"eigh failed on a {H.shape[0]}x{H.shape[0]} matrix: {exc}")
        raise EigensolverError(str(exc)) from exc
    return HermitianEig(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def unitary_exp(A, s):
    """exp(i s A) for Hermitian A."""
    return herm_eig(A).exp(s)


def kron(A, B):
    A = as_matrix(A)
    B = as_matrix(B)
    rows = A.shape[0] * B.shape[0]
    cols = A.shape[1] * B.shape[1]
    limit = settings.SIMULATION_MAX_DIMENSION
    if max(rows, cols) > limit:
        raise DimensionOverflowError(f"kron would produce a {rows}x{cols} matrix (limit {limit})")
    return np.kron(A, B)


def _split_dims(G, dims):
    G = as_matrix(G)
    d_spin, d_boson = (int(d) for d in dims)
    n = d_spin * d_boson
    if G.shape != (n, n):
        raise DimensionMismatchError(f"joint operator has shape {G.shape}, dims {dims} need ({n}, {n})")
    return G.reshape(d_spin, d_boson, d_spin, d_boson)


def partial_trace_boson(G, dims):
    """Trace out the second (boson) factor of an operator on spin (x) boson."""
    return np.einsum('ijkj->ik', _split_dims(G, dims))


def partial_trace_spin(G, dims):
    """Trace out the first (spin) factor, leaving the boson marginal."""
    return np.einsum('ijil->jl', _split_dims(G, dims))


def trace_norm(A):
    return float(np.sum(sla.svdvals(as_matrix(A))))


def trace_distance(rho, sigma):
    """(1/2) sum |eigenvalues(rho - sigma)| for Hermitian rho, sigma."""
    rho = as_matrix(rho)
    sigma = as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatchError(f"cannot compare states of shapes {rho.shape} and {sigma.shape}")
    diff = require_hermitian(rho - sigma, 'state difference')
    return 0.5 * float(np.sum(np.abs(sla.eigvalsh(diff))))


def expectation(rho, A):
    return complex(np.trace(as_matrix(rho) @ as_matrix(A)))


def conjugate(U, rho):
    """U rho U^dagger."""
    return U @ rho @ U.conj().T


def random_hermitian(n, rng, scale=1.0):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (X + X.conj().T)


def random_density_matrix(n, rng, rank=None):
    """Random full-rank (or given rank) density matrix from a Ginibre draw."""
    rank = n if rank is None else rank
    X = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = X @ X.conj().T
    return rho / np.trace(rho).real
