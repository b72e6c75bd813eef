"""
Microscopic spin-boson dynamics on the truncated Fock space.

H_eps = S (x) 1 + nu(eps) 1 (x) dGamma_eps(omega) + s (x) phi_eps(g)

States are density matrices on spin (x) boson with the spin factor first.
The Hamiltonian is diagonalized once per model; every evolve() afterwards is
a conjugation by V exp(-i t lambda) V^dagger.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache

import numpy as np
from scipy import integrate
from scipy import linalg as sla

from . import fock
from .exceptions import DimensionMismatchError, GridError, InvalidStateError
from .linalg import as_matrix, conjugate, herm_eig, hermitian_part, kron, partial_trace_boson, partial_trace_spin, require_hermitian

logger = logging.getLogger(__name__)

STATE_TRACE_TOL = 1e-10
STATE_POSITIVITY_TOL = 1e-10


class NuRegime(str, Enum):
    """Scaling of the free field energy: nu(eps) and its limit nu = lim eps*nu(eps)."""

    STATIONARY = 'stationary'
    FREE_FIELD = 'free_field'

    def nu_of(self, epsilon):
        return 1.0 if self is NuRegime.STATIONARY else 1.0 / epsilon

    @property
    def nu_limit(self):
        return 0.0 if self is NuRegime.STATIONARY else 1.0


@dataclass(frozen=True, eq=False)
class SpinBosonModel:
    """
    The data (S, s, omega, g, nu regime, Fock space) defining H_eps.

    Instances hash by identity so derived propagators can be cached per model.
    """

    S: np.ndarray
    s_op: np.ndarray
    omega: np.ndarray
    g: np.ndarray
    nu_regime: NuRegime
    fock: fock.FockSpace

    def __post_init__(self):
        S = require_hermitian(self.S, 'spin Hamiltonian S')
        s_op = require_hermitian(self.s_op, 'coupling operator s')
        if S.shape != s_op.shape:
            raise DimensionMismatchError(f"S has shape {S.shape} but s has shape {s_op.shape}")
        if S.shape[0] < 2:
            raise DimensionMismatchError(f"spin space must have dimension >= 2, got {S.shape[0]}")
        object.__setattr__(self, 'S', S)
        object.__setattr__(self, 's_op', s_op)
        object.__setattr__(self, 'omega', fock.as_dispersion(self.omega, self.fock.modes))
        object.__setattr__(self, 'g', fock.as_mode_vector(self.g, self.fock.modes))
        object.__setattr__(self, 'nu_regime', NuRegime(self.nu_regime))

    @property
    def epsilon(self):
        return self.fock.epsilon

    @property
    def d_spin(self):
        return self.S.shape[0]

    @property
    def dims(self):
        return (self.d_spin, self.fock.dimension)

    @property
    def nu_epsilon(self):
        return self.nu_regime.nu_of(self.epsilon)

    def with_fock(self, fock_space):
        return SpinBosonModel(self.S, self.s_op, self.omega, self.g, self.nu_regime, fock_space)

    def without_coupling(self):
        return SpinBosonModel(self.S, self.s_op, self.omega, np.zeros_like(self.g), self.nu_regime, self.fock)


@dataclass(frozen=True, eq=False)
class JointState:
    """
    Density matrix on spin (x) boson at a given epsilon and time.

    Trace and Hermiticity are checked on construction; validate_positive()
    checks the spectrum.
    """

    rho: np.ndarray
    epsilon: float
    time: float = 0.0

    def __post_init__(self):
        rho = as_matrix(self.rho)
        if rho.shape[0] != rho.shape[1]:
            raise DimensionMismatchError(f"density matrix must be square, got {rho.shape}")
        trace = np.trace(rho)
        if abs(trace - 1.0) > STATE_TRACE_TOL:
            raise InvalidStateError(f"state has trace {trace:.12g}, expected 1")
        object.__setattr__(self, 'rho', require_hermitian(rho, 'density matrix'))

    @property
    def dimension(self):
        return self.rho.shape[0]

    def min_eigenvalue(self):
        return float(sla.eigvalsh(self.rho)[0])

    def validate_positive(self):
        lowest = self.min_eigenvalue()
        if lowest < -STATE_POSITIVITY_TOL:
            raise InvalidStateError(f"state has negative eigenvalue {lowest:.3e}")
        return self

    def at(self, rho, time):
        return JointState(rho=rho, epsilon=self.epsilon, time=time)


def product_state(gamma, xi, epsilon, time=0.0):
    return JointState(rho=np.kron(as_matrix(gamma), as_matrix(xi)), epsilon=epsilon, time=time)


def _check_state(model, state):
    n = model.d_spin * model.fock.dimension
    if state.rho.shape != (n, n):
        raise DimensionMismatchError(f"state has shape {state.rho.shape}, model needs ({n}, {n})")


def free_hamiltonian(model):
    """H_eps^f = S (x) 1 + nu(eps) 1 (x) dGamma_eps(omega)."""
    identity_boson = np.eye(model.fock.dimension)
    identity_spin = np.eye(model.d_spin)
    return kron(model.S, identity_boson) + model.nu_epsilon * kron(identity_spin, fock.d_gamma(model.fock, model.omega))


def assemble_hamiltonian(model):
    H = free_hamiltonian(model)
    if np.any(model.g != 0):
        H = H + kron(model.s_op, fock.field_op(model.fock, model.g))
    return hermitian_part(H)


class MicroscopicPropagator:
    """Cached eigendecomposition of H_eps and the factorized free propagator."""

    def __init__(self, model):
        self.model = model

    @cached_property
    def hamiltonian_eig(self):
        logger.debug(f"diagonalizing H_eps of dimension {self.model.dims[0] * self.model.dims[1]} at eps={self.model.epsilon}")
        return herm_eig(assemble_hamiltonian(self.model))

    @cached_property
    def spin_eig(self):
        return herm_eig(self.model.S)

    @cached_property
    def field(self):
        return fock.field_op(self.model.fock, self.model.g)

    def unitary(self, t):
        """exp(-i t H_eps)."""
        return self.hamiltonian_eig.exp(-t)

    def spin_free(self, t):
        """exp(-i t S)."""
        return self.spin_eig.exp(-t)

    def boson_free_phase(self, t):
        """Diagonal of exp(-i t nu(eps) dGamma_eps(omega))."""
        return fock.free_phase(self.model.fock, self.model.omega, t, self.model.nu_epsilon)

    def free_unitary(self, t):
        """exp(-i t H_eps^f)."""
        return np.kron(self.spin_free(t), np.diag(self.boson_free_phase(t)))

    def coupling_operator(self, tau):
        """s(tau) (x) phi_eps(tau), the interaction in the interaction picture."""
        U = self.spin_free(tau)
        s_tau = U.conj().T @ self.model.s_op @ U
        p = self.boson_free_phase(tau)
        phi_tau = np.conj(p)[:, None] * self.field * p[None, :]
        return np.kron(s_tau, phi_tau)


@lru_cache(maxsize=32)
def propagator_for(model):
    return MicroscopicPropagator(model)


def evolve(model, state, t):
    """Gamma(t) = exp(-itH) Gamma exp(itH), with the state's time advanced by t."""
    _check_state(model, state)
    if t == 0:
        return state
    U = propagator_for(model).unitary(t)
    return state.at(conjugate(U, state.rho), state.time + t)


def interaction_picture(model, state):
    """Upsilon(t) = exp(itH^f) Gamma(t) exp(-itH^f) for a state at time t."""
    _check_state(model, state)
    U_f = propagator_for(model).free_unitary(state.time)
    return state.at(conjugate(U_f.conj().T, state.rho), state.time)


def from_interaction_picture(model, state):
    _check_state(model, state)
    U_f = propagator_for(model).free_unitary(state.time)
    return state.at(conjugate(U_f, state.rho), state.time)


def reduced_spin_state(model, state):
    return partial_trace_boson(state.rho, model.dims)


def _weyl_weighted_trace(op, W, dims):
    """tr_boson(op (1 (x) W)) without forming the Kronecker product."""
    d_spin, d_boson = dims
    blocks = op.reshape(d_spin, d_boson, d_spin, d_boson)
    return np.einsum('iakc,ca->ik', blocks, W)


def quantum_fourier(model, state, eta):
    """Gamma_hat(eta) = tr_boson(Gamma (1 (x) W_eps(eta))), a spin-space operator."""
    _check_state(model, state)
    eta = fock.as_mode_vector(eta, model.fock.modes)
    if not np.any(eta):
        return reduced_spin_state(model, state)
    return _weyl_weighted_trace(state.rho, fock.weyl_op(model.fock, eta), model.dims)


def number_moment(fock_space, state, delta):
    """tr((dGamma_eps(1) + 1)^delta Gamma)."""
    if not delta > 0:
        raise InvalidStateError(f"moment exponent must be positive, got {delta}")
    d_boson = fock_space.dimension
    if state.dimension % d_boson:
        raise DimensionMismatchError(f"state dimension {state.dimension} is not a multiple of {d_boson}")
    marginal = partial_trace_spin(state.rho, (state.dimension // d_boson, d_boson))
    weights = np.real(np.diag(marginal))
    levels = fock_space.epsilon * fock_space.total_occupation + 1.0
    return float(np.sum(levels ** delta * weights))


def uniform_grid(s, t, steps):
    if steps < 1:
        raise GridError(f"need at least one step, got {steps}")
    return np.linspace(s, t, steps + 1)


def _check_uniform(times):
    times = np.asarray(times, dtype=np.float64)
    if times.shape[0] < 2:
        raise GridError(f"time grid needs at least 2 points, got {times.shape[0]}")
    spacing = np.diff(times)
    if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=1e-12):
        raise GridError("time grid is not uniform")
    return times


def duhamel_trajectory(model, initial, s, t, steps):
    """Interaction-picture states Upsilon(tau) on a uniform grid over [s, t]."""
    times = uniform_grid(s, t, steps)
    trajectory = [interaction_picture(model, evolve(model, initial, tau - initial.time)) for tau in times]
    return times, trajectory


def duhamel_residual(model, times, trajectory, eta, k):
    """
    |tr(Y(t)k) - tr(Y(s)k) + i int_s^t tr(tr_b([s(tau) (x) phi(tau), Upsilon(tau)] W) k) dtau|

    with Y(tau) = Upsilon_hat(tau)(eta) and the integral by the trapezoidal rule
    on the trajectory's grid.
    """
    times = _check_uniform(times)
    if len(trajectory) != times.shape[0]:
        raise GridError(f"{len(trajectory)} states for {times.shape[0]} grid points")
    eta = fock.as_mode_vector(eta, model.fock.modes)
    k = as_matrix(k)
    W = fock.weyl_op(model.fock, eta)
    propagator = propagator_for(model)

    def pairing(op):
        return complex(np.trace(_weyl_weighted_trace(op, W, model.dims) @ k))

    integrand = np.empty(times.shape[0], dtype=np.complex128)
    for idx, (tau, state) in enumerate(zip(times, trajectory)):
        _check_state(model, state)
        H_i = propagator.coupling_operator(tau)
        integrand[idx] = -1j * pairing(H_i @ state.rho - state.rho @ H_i)

    lhs = pairing(trajectory[-1].rho) - pairing(trajectory[0].rho)
    rhs = integrate.trapezoid(integrand, times)
    return float(abs(lhs - rhs))


def quantum_positive_definiteness(model, state, etas, ops):
    """
    Smallest eigenvalue of sum_jk t_j Gamma_hat(eta_j - eta_k) t_k^dagger exp(-i eps Im<eta_j, eta_k>).

    Non-negative for every state up to truncation error.
    """
    etas = [fock.as_mode_vector(e, model.fock.modes) for e in etas]
    ops = [as_matrix(t) for t in ops]
    if len(etas) != len(ops):
        raise DimensionMismatchError(f"{len(etas)} test vectors but {len(ops)} test operators")
    total = np.zeros((model.d_spin, model.d_spin), dtype=np.complex128)
    for j, (eta_j, t_j) in enumerate(zip(etas, ops)):
        for eta_k, t_k in zip(etas, ops):
            phase = np.exp(-1j * model.epsilon * fock.inner(eta_j, eta_k).imag)
            total += phase * t_j @ quantum_fourier(model, state, eta_j - eta_k) @ t_k.conj().T
    return float(sla.eigvalsh(hermitian_part(total))[0])


def pure_dephasing_reduced_state(model, gamma0, z, t):
    """
    Exact reduced spin state for diagonal S and s with a coherent field at z.

    Each spin level k sees the displaced oscillators
    H_k = nu(eps) eps sum omega_j b_j^dagger b_j + s_k sqrt(eps) sum (g_j b_j^dagger + h.c.),
    which keep coherent vectors coherent; the reduced state picks up the
    overlap of the two displaced coherent vectors attached to levels k and l.
    """
    S = model.S
    s_op = model.s_op
    if np.any(S != np.diag(np.diag(S))) or np.any(s_op != np.diag(np.diag(s_op))):
        raise InvalidStateError("pure dephasing oracle needs diagonal S and s")
    z = fock.as_mode_vector(z, model.fock.modes)
    gamma0 = as_matrix(gamma0)
    eps = model.epsilon
    levels = np.real(np.diag(S))
    couplings = np.real(np.diag(s_op))
    d = levels.shape[0]

    log_overlap = np.zeros((d, d), dtype=np.complex128)
    for zj, gj, wj in zip(z, model.g, model.omega):
        freq = model.nu_epsilon * eps * wj
        beta0 = zj / math.sqrt(eps)
        E1 = fock.phase_integral(freq, t)
        E2 = fock.double_phase_integral(freq, t)
        f = couplings * math.sqrt(eps) * gj
        beta_t = beta0 * np.exp(-1j * freq * t) - 1j * f * E1
        c_t = -0.5 * abs(beta0) ** 2 - 1j * np.conj(f) * (beta0 * E1 - 1j * f * E2)
        # log <psi_l(t)|psi_k(t)> indexed [k, l]
        log_overlap += c_t[:, None] + np.conj(c_t)[None, :] + beta_t[:, None] * np.conj(beta_t)[None, :]

    spin_phase = np.exp(-1j * t * (levels[:, None] - levels[None, :]))
    return gamma0 * spin_phase * np.exp(log_overlap)
