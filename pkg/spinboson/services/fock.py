"""
Truncated multimode Fock space with epsilon-scaled field operators.

The occupation basis is the lexicographic (C-order) enumeration of the box
{0..n_1} x ... x {0..n_M}; index <-> multi-index goes through numpy's
ravel/unravel so it is a fixed bijection.

Conventions: <f, g> = sum conj(f_j) g_j, a_eps(f) is antilinear in f and
[a_eps(f), a*_eps(g)] = eps <f, g> on the truncation-safe block.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from django.conf import settings
from scipy import special, stats

from .exceptions import DimensionMismatchError, DimensionOverflowError, InvalidStateError, TruncationSafetyError
from .linalg import unitary_exp

logger = logging.getLogger(__name__)

# Mean occupation may use at most this share of a mode's cutoff.
SAFETY_FRACTION = 0.25
DEFAULT_TAIL = 1e-8


def inner(f, g):
    """<f, g>, antilinear in the first argument."""
    return complex(np.vdot(f, g))


def as_mode_vector(v, modes=None):
    vec = np.atleast_1d(np.asarray(v, dtype=np.complex128))
    if vec.ndim != 1:
        raise DimensionMismatchError(f"mode vector must be 1-D, got shape {vec.shape}")
    if modes is not None and vec.shape[0] != modes:
        raise DimensionMismatchError(f"mode vector has {vec.shape[0]} components, expected {modes}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("mode vector has non-finite components")
    return vec


def as_dispersion(omega, modes=None):
    freqs = np.atleast_1d(np.asarray(omega, dtype=np.float64))
    if modes is not None and freqs.shape[0] != modes:
        raise DimensionMismatchError(f"dispersion has {freqs.shape[0]} frequencies, expected {modes}")
    if np.any(freqs <= 0):
        raise InvalidStateError(f"frequencies must be strictly positive, got {freqs.tolist()}")
    return freqs


@dataclass(frozen=True)
class FockSpace:
    """Per-mode truncated symmetric Fock space over C^M carrying the scale epsilon."""

    cutoffs: tuple
    epsilon: float

    def __post_init__(self):
        cutoffs = tuple(int(c) for c in self.cutoffs)
        object.__setattr__(self, 'cutoffs', cutoffs)
        if not cutoffs or any(c < 1 for c in cutoffs):
            raise InvalidStateError(f"cutoffs must be >= 1 for every mode, got {cutoffs}")
        if not self.epsilon > 0:
            raise InvalidStateError(f"epsilon must be positive, got {self.epsilon}")
        limit = settings.SIMULATION_MAX_DIMENSION
        if self.dimension > limit:
            raise DimensionOverflowError(f"Fock space with cutoffs {cutoffs} has dimension {self.dimension} > {limit}")

    @property
    def modes(self):
        return len(self.cutoffs)

    @property
    def shape(self):
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def dimension(self):
        return math.prod(self.shape)

    @cached_property
    def occupations(self):
        """(dimension, M) integer array; row k is the multi-index of basis state k."""
        grids = np.unravel_index(np.arange(self.dimension), self.shape)
        return np.stack(grids, axis=1)

    def index_of(self, occupation):
        return int(np.ravel_multi_index(tuple(int(n) for n in occupation), self.shape))

    def occupation_of(self, index):
        return tuple(int(n) for n in np.unravel_index(int(index), self.shape))

    @cached_property
    def total_occupation(self):
        return self.occupations.sum(axis=1)


def _check_modes(F, v):
    return as_mode_vector(v, F.modes)


def _mode_lowering(F, j):
    """Unscaled lowering operator b_j on the full truncated space."""
    D = F.dimension
    occ = F.occupations[:, j]
    stride = math.prod(F.shape[j + 1:])
    source = np.nonzero(occ > 0)[0]
    b = np.zeros((D, D), dtype=np.complex128)
    b[source - stride, source] = np.sqrt(occ[source])
    return b


def annihilation(F, f):
    """a_eps(f) = sqrt(eps) * sum_j conj(f_j) b_j."""
    f = _check_modes(F, f)
    a = np.zeros((F.dimension, F.dimension), dtype=np.complex128)
    for j, fj in enumerate(f):
        if fj != 0:
            a += np.conj(fj) * _mode_lowering(F, j)
    return math.sqrt(F.epsilon) * a


def creation(F, f):
    return annihilation(F, f).conj().T


def d_gamma(F, omega):
    """Second quantization dGamma_eps(omega) of a diagonal one-particle operator."""
    freqs = as_dispersion(omega, F.modes)
    diagonal = F.epsilon * (F.occupations @ freqs)
    return np.diag(diagonal.astype(np.complex128))


def number_operator(F):
    return d_gamma(F, np.ones(F.modes))


def free_phase(F, omega, t, scale=1.0):
    """Diagonal of exp(-i t scale dGamma_eps(omega))."""
    freqs = as_dispersion(omega, F.modes)
    energies = scale * F.epsilon * (F.occupations @ freqs)
    return np.exp(-1j * t * energies)


def field_op(F, g):
    """Segal field phi_eps(g) = a*_eps(g) + a_eps(g)."""
    a = annihilation(F, g)
    return a + a.conj().T


def weyl_op(F, eta):
    """W_eps(eta) = exp(i phi_eps(eta))."""
    return unitary_exp(field_op(F, eta), 1.0)


def safe_block_indices(F):
    """Basis indices whose occupation is at least one below every cutoff."""
    below = np.all(F.occupations < np.asarray(F.cutoffs), axis=1)
    return np.nonzero(below)[0]


def low_occupation_indices(F, max_total):
    return np.nonzero(F.total_occupation <= max_total)[0]


def mean_occupations(z, epsilon):
    z = as_mode_vector(z)
    return np.abs(z) ** 2 / epsilon


def tail_mass(F, z):
    """Weight the untruncated coherent state at z puts outside the cutoff box."""
    means = mean_occupations(_check_modes(F, z), F.epsilon)
    inside = np.prod([stats.poisson.cdf(c, m) for c, m in zip(F.cutoffs, means)])
    return float(max(0.0, 1.0 - inside))


def auto_cutoffs(points, epsilon, tail=DEFAULT_TAIL, min_cutoff=8):
    """
    Per-mode cutoffs safe for every coherent point in `points`.

    Each mode gets max(ceil(4|z_j|^2/eps), Poisson tail quantile + 1, min_cutoff),
    maximised over the points.
    """
    points = [as_mode_vector(z) for z in np.atleast_2d(np.asarray(points, dtype=np.complex128))]
    modes = points[0].shape[0]
    cutoffs = np.full(modes, int(min_cutoff))
    for z in points:
        means = mean_occupations(z, epsilon)
        for j, m in enumerate(means):
            margin = math.ceil(m / SAFETY_FRACTION)
            quantile = int(stats.poisson.isf(tail / modes, m)) + 1 if m > 0 else 0
            cutoffs[j] = max(cutoffs[j], margin, quantile)
    logger.debug(f"auto cutoffs at eps={epsilon}: {cutoffs.tolist()}")
    return tuple(int(c) for c in cutoffs)


def check_truncation_safety(F, z):
    means = mean_occupations(_check_modes(F, z), F.epsilon)
    for j, (m, c) in enumerate(zip(means, F.cutoffs)):
        if m > SAFETY_FRACTION * c:
            raise TruncationSafetyError(
                f"mode {j}: mean occupation {m:.3f} exceeds {SAFETY_FRACTION} x cutoff {c} at eps={F.epsilon}"
            )


def coherent_vector(F, z):
    """Normalized truncated coherent vector with a_eps(f) psi ~ <f, z> psi."""
    z = _check_modes(F, z)
    check_truncation_safety(F, z)
    psi = np.ones(1, dtype=np.complex128)
    for zj, c in zip(z, F.cutoffs):
        n = np.arange(c + 1)
        beta = zj / math.sqrt(F.epsilon)
        if beta == 0:
            amplitudes = (n == 0).astype(np.complex128)
        else:
            log_modulus = n * math.log(abs(beta)) - 0.5 * special.gammaln(n + 1)
            amplitudes = np.exp(log_modulus - log_modulus.max() + 1j * n * np.angle(beta))
        psi = np.kron(psi, amplitudes)
    return psi / np.linalg.norm(psi)


def coherent_state(F, z):
    psi = coherent_vector(F, z)
    return np.outer(psi, psi.conj())


def coherent_fourier(z, eta, epsilon):
    """Closed form of tr(|z><z| W_eps(eta)) for the untruncated coherent state."""
    z = as_mode_vector(z)
    eta = as_mode_vector(eta, z.shape[0])
    return np.exp(2j * inner(eta, z).real - 0.5 * epsilon * np.linalg.norm(eta) ** 2)


def _series_or_exact(x, exact, series_terms, t_power, t):
    if abs(x) < 1e-2:
        return t ** t_power * sum((-1j * x) ** n / math.factorial(n + t_power) for n in range(series_terms))
    return exact()


def phase_integral(freq, t):
    """int_0^t exp(-i freq tau) dtau, stable as freq*t -> 0."""
    x = freq * t
    return _series_or_exact(x, lambda: (1 - np.exp(-1j * x)) / (1j * freq), 6, 1, t)


def double_phase_integral(freq, t):
    """int_0^t (t - u) exp(-i freq u) du, stable as freq*t -> 0."""
    x = freq * t
    return _series_or_exact(x, lambda: (t - phase_integral(freq, t)) / (1j * freq), 6, 2, t)
