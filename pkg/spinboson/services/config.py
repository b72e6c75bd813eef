"""
Experiment configuration: the TOML file a sweep is driven by.

Layout and accepted keys are documented in configs/SCHEMA.md. Complex
entries may be plain numbers or [re, im] pairs; matrices are lists of rows.
"""
import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from django.conf import settings

from . import fock
from .exceptions import ConfigurationError, SimulationError
from .linalg import require_hermitian
from .measures import Atom, StateValuedMeasure, sample_gaussian_measure
from .micro import NuRegime, SpinBosonModel

logger = logging.getLogger(__name__)

MEASURE_KINDS = ('atoms', 'gaussian')
# Seeds are unsigned 64-bit integers
SEED_LIMIT = 2 ** 64

PAULI_Z = [[1.0, 0.0], [0.0, -1.0]]
PAULI_X = [[0.0, 1.0], [1.0, 0.0]]
GROUND = [[1.0, 0.0], [0.0, 0.0]]


def _complex(value, key):
    if isinstance(value, (list, tuple)):
        if len(value) != 2 or not all(isinstance(v, (int, float)) for v in value):
            raise ConfigurationError(f"{key}: complex entries must be numbers or [re, im] pairs, got {value!r}")
        return complex(value[0], value[1])
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{key}: expected a number, got {value!r}")
    return complex(value)


def parse_vector(values, key):
    if not isinstance(values, (list, tuple)) or not values:
        raise ConfigurationError(f"{key}: expected a non-empty list")
    return np.array([_complex(v, key) for v in values], dtype=np.complex128)


def parse_matrix(rows, key):
    if not isinstance(rows, (list, tuple)) or not rows:
        raise ConfigurationError(f"{key}: expected a non-empty list of rows")
    matrix = [parse_vector(row, key) for row in rows]
    if any(len(row) != len(matrix) for row in matrix):
        raise ConfigurationError(f"{key}: matrix must be square")
    return np.stack(matrix)


def _pairs(values):
    return [[float(v.real), float(v.imag)] for v in np.ravel(values)]


@dataclass(frozen=True)
class AtomSpec:
    weight: float
    z: tuple
    gamma: tuple = None


@dataclass(frozen=True)
class ExperimentConfig:
    # [model]
    S: tuple
    s_op: tuple
    omega: tuple
    g: tuple
    nu_regime: str = NuRegime.STATIONARY.value
    # [initial]
    gamma0: tuple = None
    measure_kind: str = 'atoms'
    atoms: tuple = ()
    variances: tuple = ()
    samples: int = 0
    # [sweep]
    epsilons: tuple = (0.25, 0.125, 0.0625, 0.03125)
    times: tuple = (0.5, 1.0, 2.0)
    cutoffs: tuple = None
    tail: float = fock.DEFAULT_TAIL
    min_cutoff: int = 8
    steps: int = None
    residual_steps: int = 32
    eta_grid: tuple = None
    eta_max: float = 2.0
    eta_points: int = 4
    seed: int = 0
    # [output]
    output_dir: str = None
    label: str = 'default'
    source: str = field(default=None, compare=False)

    def __post_init__(self):
        self.validate()

    @classmethod
    def default(cls):
        """Two-level model S = sigma_z, s = sigma_x, one mode, one coherent atom at z = 1."""
        return cls.from_dict({
            'model': {'S': PAULI_Z, 's': PAULI_X, 'omega': [1.0], 'g': [1.0], 'nu_regime': 'stationary'},
            'initial': {'gamma': GROUND, 'measure': 'atoms', 'atoms': [{'weight': 1.0, 'z': [1.0]}]},
            'sweep': {'epsilons': [0.25, 0.125, 0.0625, 0.03125], 'times': [0.5, 1.0, 2.0]},
            'output': {'label': 'default'},
        })

    @classmethod
    def from_dict(cls, data, source=None):
        unknown = set(data) - {'model', 'initial', 'sweep', 'output'}
        if unknown:
            raise ConfigurationError(f"unknown sections: {sorted(unknown)}")
        model = data.get('model') or {}
        initial = data.get('initial') or {}
        sweep = data.get('sweep') or {}
        output = data.get('output') or {}
        for key in ('S', 's', 'omega', 'g'):
            if key not in model:
                raise ConfigurationError(f"model.{key} is required")

        S = parse_matrix(model['S'], 'model.S')
        gamma0 = parse_matrix(initial.get('gamma', _identity_ground(S.shape[0])), 'initial.gamma')
        atoms = []
        for idx, item in enumerate(initial.get('atoms', [])):
            key = f"initial.atoms[{idx}]"
            if 'z' not in item:
                raise ConfigurationError(f"{key}.z is required")
            gamma = parse_matrix(item['gamma'], f"{key}.gamma") if 'gamma' in item else None
            atoms.append(AtomSpec(
                weight=float(item.get('weight', 1.0)),
                z=tuple(parse_vector(item['z'], f"{key}.z")),
                gamma=_freeze(gamma),
            ))

        cutoffs = sweep.get('cutoffs', 'auto')
        if cutoffs == 'auto':
            cutoffs = None
        elif isinstance(cutoffs, list):
            cutoffs = tuple(tuple(int(c) for c in row) for row in cutoffs)
        else:
            raise ConfigurationError(f"sweep.cutoffs must be 'auto' or a list of per-epsilon lists, got {cutoffs!r}")

        eta_grid = sweep.get('eta_grid')
        if eta_grid is not None:
            eta_grid = tuple(tuple(parse_vector(eta, 'sweep.eta_grid')) for eta in eta_grid)

        try:
            return cls(
                S=_freeze(S),
                s_op=_freeze(parse_matrix(model['s'], 'model.s')),
                omega=tuple(float(w) for w in model['omega']),
                g=tuple(parse_vector(model['g'], 'model.g')),
                nu_regime=model.get('nu_regime', NuRegime.STATIONARY.value),
                gamma0=_freeze(gamma0),
                measure_kind=initial.get('measure', 'atoms'),
                atoms=tuple(atoms),
                variances=tuple(float(v) for v in initial.get('variances', ())),
                samples=int(initial.get('samples', 0)),
                epsilons=tuple(float(e) for e in sweep.get('epsilons', cls.epsilons)),
                times=tuple(float(t) for t in sweep.get('times', cls.times)),
                cutoffs=cutoffs,
                tail=float(sweep.get('tail', fock.DEFAULT_TAIL)),
                min_cutoff=int(sweep.get('min_cutoff', 8)),
                steps=sweep.get('steps'),
                residual_steps=int(sweep.get('residual_steps', 32)),
                eta_grid=eta_grid,
                eta_max=float(sweep.get('eta_max', 2.0)),
                eta_points=int(sweep.get('eta_points', 4)),
                seed=int(sweep.get('seed', 0)),
                output_dir=output.get('directory'),
                label=str(output.get('label', 'default')),
                source=source,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed configuration: {exc}") from exc

    def validate(self):
        if self.nu_regime not in {r.value for r in NuRegime}:
            raise ConfigurationError(f"model.nu_regime must be one of {[r.value for r in NuRegime]}, got {self.nu_regime!r}")
        if self.measure_kind not in MEASURE_KINDS:
            raise ConfigurationError(f"initial.measure must be one of {MEASURE_KINDS}, got {self.measure_kind!r}")
        if not 0 <= self.seed < SEED_LIMIT:
            raise ConfigurationError(f"sweep.seed must be an integer in [0, 2**64), got {self.seed}")
        if not self.epsilons:
            raise ConfigurationError("sweep.epsilons must not be empty")
        if any(e <= 0 for e in self.epsilons):
            raise ConfigurationError(f"sweep.epsilons must be positive, got {list(self.epsilons)}")
        if any(b >= a for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise ConfigurationError(f"sweep.epsilons must be strictly decreasing, got {list(self.epsilons)}")
        if not self.times or not all(math.isfinite(t) for t in self.times):
            raise ConfigurationError(f"sweep.times must be a non-empty list of finite reals, got {list(self.times)}")
        if self.steps is not None and int(self.steps) < 1:
            raise ConfigurationError(f"sweep.steps must be >= 1, got {self.steps}")
        if self.residual_steps < 1:
            raise ConfigurationError(f"sweep.residual_steps must be >= 1, got {self.residual_steps}")
        if self.eta_points < 1 or self.eta_max <= 0:
            raise ConfigurationError("sweep.eta_points must be >= 1 and sweep.eta_max positive")
        if self.measure_kind == 'atoms' and not self.atoms:
            raise ConfigurationError("initial.atoms must list at least one atom")
        if self.measure_kind == 'gaussian':
            if len(self.variances) != len(self.omega):
                raise ConfigurationError("initial.variances needs one entry per mode")
            if self.samples < 1:
                raise ConfigurationError("initial.samples must be >= 1")
        if self.cutoffs is not None:
            if len(self.cutoffs) != len(self.epsilons):
                raise ConfigurationError("sweep.cutoffs needs one list per epsilon")
            if any(len(row) != len(self.omega) for row in self.cutoffs):
                raise ConfigurationError("every sweep.cutoffs entry needs one cutoff per mode")
        try:
            S, s_op, _, _, _ = self.effective_arrays()
            require_hermitian(S, 'model.S')
            require_hermitian(s_op, 'model.s')
            measure = self.initial_measure()
            if self.cutoffs is not None:
                for eps, row in zip(self.epsilons, self.cutoffs):
                    space = fock.FockSpace(cutoffs=row, epsilon=eps)
                    for atom in measure.atoms:
                        fock.check_truncation_safety(space, atom.z)
        except SimulationError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            logger.warning(f"refusing configuration: {exc}")
            raise ConfigurationError(str(exc)) from exc

    def effective_arrays(self):
        S = np.array(self.S, dtype=np.complex128)
        s_op = np.array(self.s_op, dtype=np.complex128)
        omega = fock.as_dispersion(self.omega)
        g = fock.as_mode_vector(self.g, omega.shape[0])
        gamma0 = np.array(self.gamma0, dtype=np.complex128)
        if S.shape != s_op.shape or gamma0.shape != S.shape:
            raise ConfigurationError(f"model.S, model.s and initial.gamma shapes differ: {S.shape}, {s_op.shape}, {gamma0.shape}")
        return S, s_op, omega, g, gamma0

    @property
    def modes(self):
        return len(self.omega)

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    def with_changes(self, **changes):
        return replace(self, **changes)

    def initial_measure(self):
        _, _, _, _, gamma0 = self.effective_arrays()
        if self.measure_kind == 'gaussian':
            return sample_gaussian_measure(self.modes, self.variances, gamma0, self.samples, self.seed)
        mass = sum(a.weight for a in self.atoms)
        atoms = tuple(
            Atom(
                weight=a.weight,
                z=np.array(a.z, dtype=np.complex128),
                gamma=gamma0 if a.gamma is None else np.array(a.gamma, dtype=np.complex128),
            )
            for a in self.atoms
        )
        if mass > 1 + 1e-12:
            raise ConfigurationError(f"initial.atoms weights sum to {mass} > 1")
        return StateValuedMeasure(atoms=atoms)

    def cutoffs_for(self, epsilon, measure=None):
        if self.cutoffs is not None:
            for eps, row in zip(self.epsilons, self.cutoffs):
                if math.isclose(eps, epsilon, rel_tol=1e-12):
                    return row
        measure = self.initial_measure() if measure is None else measure
        return fock.auto_cutoffs(measure.points, epsilon, self.tail, self.min_cutoff)

    def microscopic_model(self, epsilon, measure=None):
        S, s_op, omega, g, _ = self.effective_arrays()
        space = fock.FockSpace(cutoffs=self.cutoffs_for(epsilon, measure), epsilon=epsilon)
        return SpinBosonModel(S=S, s_op=s_op, omega=omega, g=g, nu_regime=NuRegime(self.nu_regime), fock=space)

    def eta_vectors(self):
        """Explicit sweep.eta_grid, or eta_points magnitudes on the real and imaginary ray of every mode."""
        if self.eta_grid is not None:
            return [np.array(eta, dtype=np.complex128) for eta in self.eta_grid]
        magnitudes = np.linspace(self.eta_max / self.eta_points, self.eta_max, self.eta_points)
        etas = []
        for j in range(self.modes):
            for direction in (1.0, 1j):
                for r in magnitudes:
                    eta = np.zeros(self.modes, dtype=np.complex128)
                    eta[j] = direction * r
                    etas.append(eta)
        return etas

    def results_dir(self, override=None):
        if override:
            return Path(override)
        if self.output_dir:
            return Path(self.output_dir)
        return Path(settings.SIMULATION_RESULTS_DIR) / self.label

    def to_dict(self):
        data = asdict(self)
        data.pop('source')
        for key in ('S', 's_op', 'gamma0'):
            data[key] = [_pairs(row) for row in data[key]]
        data['g'] = _pairs(self.g)
        data['atoms'] = [
            {'weight': a.weight, 'z': _pairs(a.z), 'gamma': None if a.gamma is None else [_pairs(r) for r in a.gamma]}
            for a in self.atoms
        ]
        if self.eta_grid is not None:
            data['eta_grid'] = [_pairs(eta) for eta in self.eta_grid]
        return data


def _freeze(matrix):
    if matrix is None:
        return None
    return tuple(tuple(complex(v) for v in row) for row in matrix)


def _identity_ground(d):
    gamma = [[0.0] * d for _ in range(d)]
    gamma[0][0] = 1.0
    return gamma


def load_config(path):
    path = Path(path)
    try:
        with path.open('rb') as handle:
            data = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid TOML: {exc}") from exc
    config = ExperimentConfig.from_dict(data, source=str(path))
    logger.info(f"loaded config {path} ({config.label})")
    return config
