"""
State-valued measures as finite atomic ensembles.

A measure dm(z) = gamma(z) dmu(z) is stored as atoms (w_i, z_i, gamma_i);
every integral against it becomes a sum over atoms taken in atom order.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from . import fock
from .exceptions import DimensionMismatchError, InvalidStateError
from .linalg import as_matrix, conjugate, hermitian_part, require_hermitian

logger = logging.getLogger(__name__)

MASS_TOL = 1e-12
GAMMA_TRACE_TOL = 1e-10
GAMMA_POSITIVITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Atom:
    weight: float
    z: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        weight = float(self.weight)
        if not weight >= 0:
            raise InvalidStateError(f"atom weight must be non-negative, got {weight}")
        gamma = require_hermitian(self.gamma, 'atom density matrix')
        trace = np.trace(gamma).real
        if abs(trace - 1.0) > GAMMA_TRACE_TOL:
            raise InvalidStateError(f"atom density matrix has trace {trace:.12g}, expected 1")
        lowest = float(sla.eigvalsh(gamma)[0])
        if lowest < -GAMMA_POSITIVITY_TOL:
            raise InvalidStateError(f"atom density matrix has negative eigenvalue {lowest:.3e}")
        object.__setattr__(self, 'weight', weight)
        object.__setattr__(self, 'z', fock.as_mode_vector(self.z))
        object.__setattr__(self, 'gamma', gamma)

    def replace(self, weight=None, z=None, gamma=None):
        return Atom(
            weight=self.weight if weight is None else weight,
            z=self.z if z is None else z,
            gamma=self.gamma if gamma is None else gamma,
        )


@dataclass(frozen=True, eq=False)
class StateValuedMeasure:
    """Finite ensemble representing m = (mu, gamma) with total mass in (0, 1]."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise InvalidStateError("a measure needs at least one atom")
        modes = atoms[0].z.shape[0]
        d_spin = atoms[0].gamma.shape[0]
        for atom in atoms:
            if atom.z.shape[0] != modes or atom.gamma.shape[0] != d_spin:
                raise DimensionMismatchError("atoms disagree on mode count or spin dimension")
        mass = math.fsum(atom.weight for atom in atoms)
        if not (0 < mass <= 1 + MASS_TOL):
            raise InvalidStateError(f"total mass must lie in (0, 1], got {mass}")
        object.__setattr__(self, 'atoms', atoms)

    @classmethod
    def point_mass(cls, z, gamma, weight=1.0):
        return cls(atoms=(Atom(weight=weight, z=z, gamma=gamma),))

    @property
    def modes(self):
        return self.atoms[0].z.shape[0]

    @property
    def d_spin(self):
        return self.atoms[0].gamma.shape[0]

    @property
    def weights(self):
        return np.array([atom.weight for atom in self.atoms])

    @property
    def points(self):
        return np.stack([atom.z for atom in self.atoms])

    def total_mass(self):
        return math.fsum(atom.weight for atom in self.atoms)

    def barycenter(self):
        """int dm = sum_i w_i gamma_i."""
        result = np.zeros((self.d_spin, self.d_spin), dtype=np.complex128)
        for atom in self.atoms:
            result += atom.weight * atom.gamma
        return result

    def scaled(self, factor):
        return StateValuedMeasure(atoms=tuple(atom.replace(weight=factor * atom.weight) for atom in self.atoms))

    def map_atoms(self, fn, threads=1):
        """Apply fn to every atom; with threads > 1 atoms run in a pool, results keep atom order."""
        if threads > 1 and len(self.atoms) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return StateValuedMeasure(atoms=tuple(pool.map(fn, self.atoms)))
        return StateValuedMeasure(atoms=tuple(fn(atom) for atom in self.atoms))

    def conjugated(self, unitaries):
        """gamma_i -> U_i gamma_i U_i^dagger with one unitary per atom."""
        if len(unitaries) != len(self.atoms):
            raise DimensionMismatchError(f"{len(unitaries)} unitaries for {len(self.atoms)} atoms")
        return StateValuedMeasure(
            atoms=tuple(atom.replace(gamma=conjugate(U, atom.gamma)) for U, atom in zip(unitaries, self.atoms))
        )


def total_mass(measure):
    return measure.total_mass()


def _characters(measure, eta):
    eta = fock.as_mode_vector(eta, measure.modes)
    return np.exp(2j * np.real(measure.points.conj() @ eta))


def measure_fourier(measure, eta):
    """m_hat(eta) = sum_i w_i exp(2i Re<eta, z_i>) gamma_i."""
    characters = _characters(measure, eta)
    result = np.zeros((measure.d_spin, measure.d_spin), dtype=np.complex128)
    for chi, atom in zip(characters, measure.atoms):
        result += atom.weight * chi * atom.gamma
    return result


def measure_fourier_grid(measure, etas):
    return [measure_fourier(measure, eta) for eta in etas]


def pushforward_free_field(measure, omega, t, nu):
    """Transport every point along z -> exp(-i t nu omega) z; weights and gammas are untouched."""
    freqs = fock.as_dispersion(omega, measure.modes)
    if nu == 0 or t == 0:
        return measure
    phases = np.exp(-1j * t * nu * freqs)
    return measure.map_atoms(lambda atom: atom.replace(z=phases * atom.z))


def sample_gaussian_measure(modes, variances, gamma0, count, seed):
    """
    K i.i.d. circular complex Gaussian points with E|z_j|^2 = variances[j], all carrying gamma0.
    """
    variances = np.broadcast_to(np.asarray(variances, dtype=np.float64), (modes,))
    if np.any(variances <= 0):
        raise InvalidStateError(f"variances must be positive, got {variances.tolist()}")
    if count < 1:
        raise InvalidStateError(f"sample count must be >= 1, got {count}")
    gamma0 = as_matrix(gamma0)
    rng = np.random.default_rng(seed)
    scale = np.sqrt(variances / 2.0)
    draws = scale * (rng.standard_normal((count, modes)) + 1j * rng.standard_normal((count, modes)))
    weight = 1.0 / count
    logger.debug(f"sampled {count} Gaussian atoms over {modes} modes (seed={seed})")
    return StateValuedMeasure(atoms=tuple(Atom(weight=weight, z=z, gamma=gamma0) for z in draws))


def positive_definiteness_gap(measure, etas, ops):
    """Smallest eigenvalue of sum_jk t_j m_hat(eta_j - eta_k) t_k^dagger; non-negative for every measure."""
    etas = [fock.as_mode_vector(e, measure.modes) for e in etas]
    ops = [as_matrix(t) for t in ops]
    if len(etas) != len(ops):
        raise DimensionMismatchError(f"{len(etas)} test vectors but {len(ops)} test operators")
    total = np.zeros((measure.d_spin, measure.d_spin), dtype=np.complex128)
    for eta_j, t_j in zip(etas, ops):
        for eta_k, t_k in zip(etas, ops):
            total += t_j @ measure_fourier(measure, eta_j - eta_k) @ t_k.conj().T
    return float(sla.eigvalsh(hermitian_part(total))[0])
