"""
Effective quasi-classical dynamics.

For a classical field configuration z the spin is driven by
h_t(z) = S + alpha_t(z) s with alpha_t(z) = 2 Re <z, exp(i nu t omega) g>,
while the field itself is pushed along z -> exp(-i t nu omega) z. The
time-ordered propagator is built with midpoint exponentials (second order,
unitary at every step); the truncated Dyson series exists only to
cross-check it.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import linalg as sla

from . import fock
from .exceptions import DimensionMismatchError, GridError, InvalidStateError
from .linalg import conjugate, herm_eig, require_hermitian, trace_norm, unitary_exp
from .measures import measure_fourier, pushforward_free_field

logger = logging.getLogger(__name__)

MAX_DYSON_ORDER = 8
# Target for dtau * (|S| + max|alpha| |s|) when choosing default step counts.
STEP_BUDGET = 0.05
COMMUTATOR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EffectiveModel:
    S: np.ndarray
    s_op: np.ndarray
    omega: np.ndarray
    g: np.ndarray
    nu: float

    def __post_init__(self):
        S = require_hermitian(self.S, 'spin Hamiltonian S')
        s_op = require_hermitian(self.s_op, 'coupling operator s')
        if S.shape != s_op.shape:
            raise DimensionMismatchError(f"S has shape {S.shape} but s has shape {s_op.shape}")
        omega = fock.as_dispersion(self.omega)
        g = fock.as_mode_vector(self.g, omega.shape[0])
        if self.nu not in (0, 1):
            raise InvalidStateError(f"nu must be 0 or 1, got {self.nu}")
        object.__setattr__(self, 'S', S)
        object.__setattr__(self, 's_op', s_op)
        object.__setattr__(self, 'omega', omega)
        object.__setattr__(self, 'g', g)
        object.__setattr__(self, 'nu', float(self.nu))

    @classmethod
    def from_microscopic(cls, model):
        """Limit model with nu = lim eps*nu(eps)."""
        return cls(S=model.S, s_op=model.s_op, omega=model.omega, g=model.g, nu=model.nu_regime.nu_limit)

    @property
    def d_spin(self):
        return self.S.shape[0]

    @property
    def modes(self):
        return self.omega.shape[0]

    def without_coupling(self):
        return EffectiveModel(self.S, self.s_op, self.omega, np.zeros_like(self.g), self.nu)


@dataclass(frozen=True, eq=False)
class Propagator:
    """U_{t_to, t_from}(z) on the spin space."""

    U: np.ndarray
    t_from: float
    t_to: float
    z: np.ndarray

    def apply(self, gamma):
        return conjugate(self.U, gamma)


def alpha(model, z, s):
    """alpha_s(z) = 2 Re sum_j conj(z_j) exp(i nu s omega_j) g_j."""
    z = fock.as_mode_vector(z, model.modes)
    return 2.0 * float(np.real(np.sum(np.conj(z) * np.exp(1j * model.nu * s * model.omega) * model.g)))


def effective_hamiltonian(model, z, s):
    return model.S + alpha(model, z, s) * model.s_op


def interaction_generator(model, z, s, spin_eig=None):
    """alpha_s(z) exp(isS) s exp(-isS)."""
    spin_eig = herm_eig(model.S) if spin_eig is None else spin_eig
    U = spin_eig.exp(-s)
    return alpha(model, z, s) * (U.conj().T @ model.s_op @ U)


def default_steps(model, z, t):
    alpha_max = 2.0 * float(np.sum(np.abs(fock.as_mode_vector(z, model.modes)) * np.abs(model.g)))
    rate = sla.norm(model.S, 2) + alpha_max * sla.norm(model.s_op, 2)
    return max(1, math.ceil(abs(t) * rate / STEP_BUDGET))


def _midpoint_product(generator, t_from, t_to, steps, d):
    if steps < 1:
        raise GridError(f"need at least one step, got {steps}")
    dt = (t_to - t_from) / steps
    U = np.eye(d, dtype=np.complex128)
    for k in range(steps):
        U = unitary_exp(generator(t_from + (k + 0.5) * dt), -dt) @ U
    return U


def propagate(model, z, t, steps=None, t_from=0.0):
    """U_{t, t_from}(z) solving i dU/dt = h_t(z) U by midpoint exponentials."""
    z = fock.as_mode_vector(z, model.modes)
    if steps is None:
        steps = default_steps(model, z, t - t_from)
    U = _midpoint_product(lambda tau: effective_hamiltonian(model, z, tau), t_from, t, steps, model.d_spin)
    return Propagator(U=U, t_from=t_from, t_to=t, z=z)


def interaction_propagate(model, z, t, steps=None, t_from=0.0):
    """The interaction-picture propagator generated by alpha_tau(z) s(tau)."""
    z = fock.as_mode_vector(z, model.modes)
    if steps is None:
        steps = default_steps(model, z, t - t_from)
    spin = herm_eig(model.S)
    U = _midpoint_product(lambda tau: interaction_generator(model, z, tau, spin), t_from, t, steps, model.d_spin)
    return Propagator(U=U, t_from=t_from, t_to=t, z=z)


def integrated_alpha(model, z, t):
    """int_0^t alpha_tau(z) dtau in closed form."""
    z = fock.as_mode_vector(z, model.modes)
    total = sum(
        np.conj(zj) * gj * fock.phase_integral(-model.nu * wj, t)
        for zj, gj, wj in zip(z, model.g, model.omega)
    )
    return 2.0 * float(np.real(total))


def _commutator_norm(model):
    return float(np.max(np.abs(model.S @ model.s_op - model.s_op @ model.S)))


def commuting_propagator(model, z, t):
    """exp(-i t S - i (int_0^t alpha) s), exact when [S, s] = 0."""
    if _commutator_norm(model) > COMMUTATOR_TOL:
        raise InvalidStateError("closed-form propagator needs commuting S and s")
    generator = t * model.S + integrated_alpha(model, z, t) * model.s_op
    return unitary_exp(generator, -1.0)


def dyson_partial_sum(model, z, t, order, steps):
    """
    exp(-itS) sum_{n <= order} (-i)^n int_{t > s_1 > ... > s_n > 0} B(s_1) ... B(s_n)

    with B(s) = alpha_s(z) s(s). Each nested integral is a cumulative
    trapezoid of the previous term on a uniform grid.
    """
    if order > MAX_DYSON_ORDER or order < 0:
        raise GridError(f"Dyson order must lie in [0, {MAX_DYSON_ORDER}], got {order}")
    if steps < 1:
        raise GridError(f"need at least one step, got {steps}")
    z = fock.as_mode_vector(z, model.modes)
    d = model.d_spin
    times = np.linspace(0.0, t, steps + 1)
    spin = herm_eig(model.S)
    B = np.stack([interaction_generator(model, z, tau, spin) for tau in times])

    term = np.broadcast_to(np.eye(d, dtype=np.complex128), (times.shape[0], d, d))
    total = np.eye(d, dtype=np.complex128)
    for _ in range(order):
        term = -1j * integrate.cumulative_trapezoid(B @ term, times, axis=0, initial=0)
        total = total + term[-1]
    return spin.exp(-t) @ total


def evolve_measure(model, measure, t, steps=None, threads=1):
    """
    gamma_i -> U_{t,0}(z_i) gamma_i U_{t,0}(z_i)^dagger at the original z_i, then
    z_i -> exp(-i t nu omega) z_i. Weights are untouched.
    """
    if t == 0:
        return measure
    evolved = measure.map_atoms(
        lambda atom: atom.replace(gamma=propagate(model, atom.z, t, steps).apply(atom.gamma)), threads=threads
    )
    return pushforward_free_field(evolved, model.omega, t, model.nu)


def interaction_measure_evolution(model, measure, t, steps=None, threads=1):
    """Points stay put; gammas are conjugated by the interaction-picture propagator."""
    if t == 0:
        return measure
    return measure.map_atoms(
        lambda atom: atom.replace(gamma=interaction_propagate(model, atom.z, t, steps).apply(atom.gamma)), threads=threads
    )


def interaction_family(model, measure, s, t, steps, substeps=1):
    """
    [(tau_k, n_tau_k)] on a uniform grid of `steps` panels over [s, t].

    `measure` is taken as the state at time s; each panel is integrated with
    `substeps` midpoint steps, reusing the propagator of the previous panel.
    """
    if steps < 1 or substeps < 1:
        raise GridError(f"steps and substeps must be >= 1, got {steps}, {substeps}")
    times = np.linspace(s, t, steps + 1)
    spin = herm_eig(model.S)
    unitaries = []
    for atom in measure.atoms:
        U = np.eye(measure.d_spin, dtype=np.complex128)
        per_atom = [U]
        for k in range(steps):
            step = _midpoint_product(
                lambda tau, z=atom.z: interaction_generator(model, z, tau, spin), times[k], times[k + 1], substeps, measure.d_spin
            )
            U = step @ U
            per_atom.append(U)
        unitaries.append(per_atom)

    family = []
    for k, tau in enumerate(times):
        family.append((float(tau), measure.conjugated([per_atom[k] for per_atom in unitaries])))
    return family


def transport_residual(model, family, eta, s, t, alpha_sign=1.0):
    """
    Trace norm of n_hat_t(eta) - n_hat_s(eta) - i int_s^t sum_i w_i [gamma_i(tau), s(tau)] alpha_tau(z_i)
    exp(2i Re<eta, z_i>) dtau, with the tau integral by the trapezoidal rule.

    alpha_sign = -1 flips the driving field and must make the residual large.
    """
    if len(family) < 2:
        raise GridError(f"transport residual needs at least 2 grid points, got {len(family)}")
    times = np.array([tau for tau, _ in family])
    spacing = np.diff(times)
    if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=1e-12):
        raise GridError("transport family is not on a uniform grid")
    if not (math.isclose(times[0], s, abs_tol=1e-12) and math.isclose(times[-1], t, abs_tol=1e-12)):
        raise GridError(f"family spans [{times[0]}, {times[-1]}], expected [{s}, {t}]")
    eta = fock.as_mode_vector(eta, model.modes)
    spin = herm_eig(model.S)

    integrand = []
    for tau, measure in family:
        U = spin.exp(-tau)
        s_tau = U.conj().T @ model.s_op @ U
        value = np.zeros((model.d_spin, model.d_spin), dtype=np.complex128)
        for atom in measure.atoms:
            chi = np.exp(2j * fock.inner(eta, atom.z).real)
            drive = alpha_sign * alpha(model, atom.z, tau)
            value += atom.weight * drive * chi * (atom.gamma @ s_tau - s_tau @ atom.gamma)
        integrand.append(value)

    rhs = 1j * integrate.trapezoid(np.stack(integrand), times, axis=0)
    lhs = measure_fourier(family[-1][1], eta) - measure_fourier(family[0][1], eta)
    return trace_norm(lhs - rhs)


def rebuild_from_interaction_picture(model, measure, t):
    """exp(-itS) (exp(-it nu omega) pushforward of n_t) exp(itS)."""
    U = unitary_exp(model.S, -t)
    rotated = measure.map_atoms(lambda atom: atom.replace(gamma=conjugate(U, atom.gamma)))
    return pushforward_free_field(rotated, model.omega, t, model.nu)
