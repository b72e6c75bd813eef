"""
Experiment driver: runs the microscopic and quasi-classical dynamics side by
side over an (epsilon, t) grid and reports how far apart they are.

The distances reported here (trace distance of reduced spin states and the
largest trace-norm Fourier gap over a finite eta grid) are conventions of
this harness, not canonical metrics, and are labelled as such in every
report.
"""
import csv
import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from django.db import transaction

from . import dynamics, fock, micro
from .exceptions import GridError, InvalidStateError, SweepCellError
from .linalg import kron, trace_distance, trace_norm
from .measures import measure_fourier
from .serialization import dump_json
from ..models import InvariantCheck, SweepCell, SweepRun

logger = logging.getLogger(__name__)

METRIC_CONVENTION = 'harness convention'
CSV_COLUMNS = (
    'epsilon',
    't',
    'trace_distance',
    'fourier_gap_max',
    'number_moment_delta1',
    'duhamel_residual',
    'transport_residual',
    'tail_mass',
    'wall_ms',
)
# A metric is untrusted when the truncation tail exceeds this share of it.
UNTRUSTED_TAIL_RATIO = 0.1
RESIDUAL_FLOOR = 1e-10
MIN_RESIDUAL_ORDER = 1.8
UNITARITY_TOL = 1e-9
MASS_TOL = 1e-12
CCR_TOL = 1e-10
WEYL_TOL = 1e-6
COHERENT_FOURIER_TOL = 1e-6


@dataclass(frozen=True)
class CellResult:
    epsilon: float
    t: float
    trace_distance: float
    fourier_gap_max: float
    number_moment_delta1: float
    number_moment_half: float
    number_moment_half_initial: float
    duhamel_residual: float
    transport_residual: float
    tail_mass: float
    wall_ms: float
    cutoffs: tuple
    dimension: int
    snapshot: object = field(default=None, compare=False, repr=False)

    @property
    def untrusted(self):
        return self.tail_mass > UNTRUSTED_TAIL_RATIO * self.trace_distance

    def row(self):
        return [getattr(self, column) for column in CSV_COLUMNS]

    def to_dict(self):
        data = {f.name: getattr(self, f.name) for f in fields(self) if f.name != 'snapshot'}
        data['cutoffs'] = list(self.cutoffs)
        data['untrusted'] = self.untrusted
        return data


@dataclass(frozen=True, eq=False)
class CellSnapshot:
    """Final states of one cell, kept for the simulate command's dumps."""

    model: object
    state: object
    measure: object


@dataclass(frozen=True)
class ConvergenceReport:
    label: str
    seed: int
    nu_regime: str
    cells: tuple
    orders: dict

    def cell(self, epsilon, t):
        for cell in self.cells:
            if math.isclose(cell.epsilon, epsilon) and math.isclose(cell.t, t):
                return cell
        raise KeyError((epsilon, t))

    def series(self, t, metric='trace_distance'):
        """[(epsilon, value)] at fixed t in epsilon-grid order."""
        return [(c.epsilon, getattr(c, metric)) for c in self.cells if math.isclose(c.t, t)]

    @property
    def times(self):
        return sorted({c.t for c in self.cells})

    def to_dict(self):
        return {
            'label': self.label,
            'seed': self.seed,
            'nu_regime': self.nu_regime,
            'metric_convention': {
                'trace_distance': METRIC_CONVENTION,
                'fourier_gap_max': METRIC_CONVENTION,
            },
            'cells': [c.to_dict() for c in self.cells],
            'orders': {repr(t): value for t, value in self.orders.items()},
            'number_moment_bound': number_moment_bound(self),
        }


@dataclass(frozen=True)
class InvariantResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ''


def unit_measure(measure):
    """The measure rescaled to mass one, matching a normalized microscopic state."""
    mass = measure.total_mass()
    if math.isclose(mass, 1.0, rel_tol=0, abs_tol=1e-12):
        return measure
    return measure.scaled(1.0 / mass)


def prepare_microscopic(config, epsilon, measure=None, model=None):
    """
    sum_i w_i gamma_i (x) |coherent z_i><coherent z_i| normalized to unit trace.

    Raises:
        TruncationSafetyError: if any atom is too close to the Fock cutoff at this epsilon.
    """
    measure = unit_measure(config.initial_measure() if measure is None else measure)
    model = config.microscopic_model(epsilon, measure) if model is None else model
    d = model.d_spin * model.fock.dimension
    rho = np.zeros((d, d), dtype=np.complex128)
    for atom in measure.atoms:
        rho += atom.weight * kron(atom.gamma, fock.coherent_state(model.fock, atom.z))
    rho /= np.trace(rho).real
    return micro.JointState(rho=rho, epsilon=epsilon).validate_positive()


def _tail(model, measure):
    return max(fock.tail_mass(model.fock, atom.z) for atom in measure.atoms)


def simulate_cell(config, epsilon, t, measure=None, threads=1, deterministic=False, keep_states=False):
    """Both sides of the comparison at one (epsilon, t) plus every per-cell diagnostic."""
    started = time.perf_counter()
    measure = unit_measure(config.initial_measure() if measure is None else measure)
    model = config.microscopic_model(epsilon, measure)
    effective = dynamics.EffectiveModel.from_microscopic(model)
    initial = prepare_microscopic(config, epsilon, measure, model)
    etas = config.eta_vectors()

    state_t = micro.evolve(model, initial, t)
    measure_t = dynamics.evolve_measure(effective, measure, t, config.steps, threads=threads)

    distance = trace_distance(micro.reduced_spin_state(model, state_t), measure_t.barycenter())
    gap = max(
        trace_norm(micro.quantum_fourier(model, state_t, eta) - measure_fourier(measure_t, eta))
        for eta in etas
    )

    times, trajectory = micro.duhamel_trajectory(model, initial, 0.0, t, config.residual_steps)
    duhamel = micro.duhamel_residual(model, times, trajectory, etas[0], model.s_op)
    family = dynamics.interaction_family(effective, measure, 0.0, t, config.residual_steps)
    transport = dynamics.transport_residual(effective, family, etas[0], 0.0, t)

    tail = _tail(model, measure)
    wall_ms = 0.0 if deterministic else (time.perf_counter() - started) * 1000.0
    result = CellResult(
        epsilon=epsilon,
        t=t,
        trace_distance=distance,
        fourier_gap_max=gap,
        number_moment_delta1=micro.number_moment(model.fock, state_t, 1.0),
        number_moment_half=micro.number_moment(model.fock, state_t, 0.5),
        number_moment_half_initial=micro.number_moment(model.fock, initial, 0.5),
        duhamel_residual=duhamel,
        transport_residual=transport,
        tail_mass=tail,
        wall_ms=wall_ms,
        cutoffs=model.fock.cutoffs,
        dimension=model.dims[0] * model.dims[1],
        snapshot=CellSnapshot(model, state_t, measure_t) if keep_states else None,
    )
    if result.untrusted:
        logger.warning(f"eps={epsilon} t={t}: tail mass {tail:.2e} exceeds {UNTRUSTED_TAIL_RATIO} x D={distance:.2e}")
    logger.info(f"cell eps={epsilon} t={t}: D={distance:.3e} F={gap:.3e} (dim {result.dimension})")
    return result


def _run_cell(config, measure, epsilon, t, deterministic):
    try:
        return simulate_cell(config, epsilon, t, measure=measure, deterministic=deterministic)
    except Exception as exc:
        logger.error(f"sweep cell eps={epsilon} t={t} failed: {exc}")
        raise SweepCellError(epsilon, t, exc) from exc


def run_sweep(config, threads=1, deterministic=False):
    """Every (epsilon, t) cell of the config, in grid order, plus the fitted orders per t."""
    measure = unit_measure(config.initial_measure())
    grid = list(itertools.product(config.epsilons, config.times))
    logger.info(f"sweep '{config.label}': {len(grid)} cells on {threads} thread(s)")

    def work(cell):
        return _run_cell(config, measure, cell[0], cell[1], deterministic)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = tuple(pool.map(work, grid))
    else:
        cells = tuple(work(cell) for cell in grid)

    orders = {}
    for t in config.times:
        series = [(c.epsilon, c.trace_distance) for c in cells if c.t == t]
        if len(series) >= 3 and all(err > 0 for _, err in series):
            slope, residual = fit_order(series)
            orders[t] = {'order': slope, 'fit_residual': residual}
        else:
            orders[t] = {'order': None, 'fit_residual': None}
    return ConvergenceReport(
        label=config.label, seed=config.seed, nu_regime=config.nu_regime, cells=cells, orders=orders
    )


def fit_order(pairs):
    """
    Least-squares slope of log(error) against log(epsilon).

    Returns:
        (slope, rms residual of the log-log fit)
    """
    pairs = list(pairs)
    if len(pairs) < 3:
        raise InvalidStateError(f"fitting an order needs at least 3 points, got {len(pairs)}")
    x = np.array([p[0] for p in pairs], dtype=np.float64)
    y = np.array([p[1] for p in pairs], dtype=np.float64)
    if np.any(x <= 0) or np.any(y <= 0):
        raise InvalidStateError("fit_order needs positive epsilons and errors")
    log_x, log_y = np.log(x), np.log(y)
    slope, intercept = np.polyfit(log_x, log_y, 1)
    residual = float(np.sqrt(np.mean((log_y - (slope * log_x + intercept)) ** 2)))
    return float(slope), residual


def is_strictly_decreasing(values):
    return all(b < a for a, b in zip(values, values[1:]))


def number_moment_bound(report):
    """Largest ratio number_moment(t)/number_moment(0) at delta = 1/2 over the sweep."""
    return max(c.number_moment_half / c.number_moment_half_initial for c in report.cells)


def residual_order(steps_list, residuals):
    """Observed order in dtau from residuals on refined grids; None when all residuals vanish."""
    if max(residuals) <= RESIDUAL_FLOOR:
        return None
    pairs = [(1.0 / n, r) for n, r in zip(steps_list, residuals) if r > 0]
    return fit_order(pairs)[0]


def duhamel_study(model, initial, t, steps_list, eta, k):
    residuals = []
    for steps in steps_list:
        times, trajectory = micro.duhamel_trajectory(model, initial, 0.0, t, steps)
        residuals.append(micro.duhamel_residual(model, times, trajectory, eta, k))
    return residuals


def transport_family_study(effective, measure, t, steps_list, eta, alpha_sign=1.0):
    residuals = []
    for steps in steps_list:
        family = dynamics.interaction_family(effective, measure, 0.0, t, steps)
        residuals.append(dynamics.transport_residual(effective, family, eta, 0.0, t, alpha_sign=alpha_sign))
    return residuals


def transport_study(config, steps_list=(8, 16, 32, 64), t=1.0, epsilon=None):
    """
    Residual study under grid halving: rows of (steps, dtau, transport residual,
    Duhamel residual) and the observed order of each residual.
    """
    steps_list = sorted(int(s) for s in steps_list)
    if len(steps_list) < 3 or steps_list[0] < 1:
        raise GridError(f"transport study needs at least 3 positive step counts, got {steps_list}")
    epsilon = config.epsilons[0] if epsilon is None else epsilon
    measure = unit_measure(config.initial_measure())
    model = config.microscopic_model(epsilon, measure)
    effective = dynamics.EffectiveModel.from_microscopic(model)
    initial = prepare_microscopic(config, epsilon, measure, model)
    eta = config.eta_vectors()[0]

    transport = transport_family_study(effective, measure, t, steps_list, eta)
    duhamel = duhamel_study(model, initial, t, steps_list, eta, model.s_op)
    rows = [
        {'steps': n, 'dtau': t / n, 'transport_residual': tr, 'duhamel_residual': du}
        for n, tr, du in zip(steps_list, transport, duhamel)
    ]
    return {
        'epsilon': epsilon,
        't': t,
        'rows': rows,
        'transport_order': residual_order(steps_list, transport),
        'duhamel_order': residual_order(steps_list, duhamel),
    }


def fourier_table(config, epsilon, t):
    """Gamma_hat_eps(t) against m_hat_t over the eta grid."""
    measure = unit_measure(config.initial_measure())
    model = config.microscopic_model(epsilon, measure)
    effective = dynamics.EffectiveModel.from_microscopic(model)
    state_t = micro.evolve(model, prepare_microscopic(config, epsilon, measure, model), t)
    measure_t = dynamics.evolve_measure(effective, measure, t, config.steps)
    rows = []
    for idx, eta in enumerate(config.eta_vectors()):
        quantum = micro.quantum_fourier(model, state_t, eta)
        classical = measure_fourier(measure_t, eta)
        rows.append({
            'index': idx,
            'eta': eta,
            'gap': trace_norm(quantum - classical),
            'trace_quantum': complex(np.trace(quantum)),
            'trace_classical': complex(np.trace(classical)),
        })
    return rows


def _random_mode_vector(rng, modes, scale=1.0):
    v = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    return scale * v / np.linalg.norm(v)


def _ccr_suite(config, rng):
    modes = min(config.modes, 2)
    space = fock.FockSpace(cutoffs=(12,) if modes == 1 else (6, 6), epsilon=config.epsilons[0])
    f = _random_mode_vector(rng, modes)
    g = _random_mode_vector(rng, modes)
    a = fock.annihilation(space, f)
    a_star = fock.creation(space, g)
    commutator = a @ a_star - a_star @ a - space.epsilon * fock.inner(f, g) * np.eye(space.dimension)
    safe = fock.safe_block_indices(space)
    value = float(np.max(np.abs(commutator[np.ix_(safe, safe)])))
    return InvariantResult('ccr', value <= CCR_TOL, value, CCR_TOL, f"cutoffs {space.cutoffs}")


def _weyl_suite(config, rng):
    modes = min(config.modes, 2)
    epsilon = config.epsilons[0]
    eta_1 = _random_mode_vector(rng, modes, 0.5)
    eta_2 = _random_mode_vector(rng, modes, 0.5)
    displaced = [1j * epsilon * eta for eta in (eta_1, eta_2, eta_1 + eta_2)]
    cutoffs = fock.auto_cutoffs(displaced, epsilon, tail=1e-14, min_cutoff=24 if modes == 1 else 16)
    space = fock.FockSpace(cutoffs=cutoffs, epsilon=epsilon)
    lhs = fock.weyl_op(space, eta_1) @ fock.weyl_op(space, eta_2)
    rhs = np.exp(-1j * epsilon * fock.inner(eta_1, eta_2).imag) * fock.weyl_op(space, eta_1 + eta_2)
    low = fock.low_occupation_indices(space, 2)
    value = float(np.max(np.abs((lhs - rhs)[:, low])))
    return InvariantResult('weyl', value <= WEYL_TOL, value, WEYL_TOL, f"cutoffs {cutoffs}")


def _coherent_fourier_suite(config, measure):
    epsilon = config.epsilons[0]
    etas = config.eta_vectors()
    points = [atom.z + 1j * epsilon * eta for atom in measure.atoms for eta in etas]
    cutoffs = fock.auto_cutoffs(points, epsilon, tail=1e-14, min_cutoff=24)
    model = config.microscopic_model(epsilon, measure).with_fock(fock.FockSpace(cutoffs=cutoffs, epsilon=epsilon))
    state = prepare_microscopic(config, epsilon, measure, model)
    worst = 0.0
    for eta in etas:
        expected = sum(
            atom.weight * fock.coherent_fourier(atom.z, eta, epsilon) * np.trace(atom.gamma) for atom in measure.atoms
        )
        worst = max(worst, float(abs(np.trace(micro.quantum_fourier(model, state, eta)) - expected)))
    return InvariantResult('coherent_fourier', worst <= COHERENT_FOURIER_TOL, worst, COHERENT_FOURIER_TOL)


def _unitarity_suite(config, measure, effective):
    t = max(abs(x) for x in config.times)
    worst = 0.0
    for atom in measure.atoms:
        U = dynamics.propagate(effective, atom.z, t, config.steps).U
        worst = max(worst, float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))))
    model = config.microscopic_model(config.epsilons[0], measure)
    V = micro.propagator_for(model).unitary(t)
    worst = max(worst, float(np.max(np.abs(V.conj().T @ V - np.eye(V.shape[0])))))
    return InvariantResult('unitarity', worst <= UNITARITY_TOL, worst, UNITARITY_TOL)


def _mass_suite(config, measure, effective):
    t = max(abs(x) for x in config.times)
    evolved = dynamics.evolve_measure(effective, measure, t, config.steps)
    value = abs(evolved.total_mass() - measure.total_mass())
    return InvariantResult('mass_conservation', value <= MASS_TOL, value, MASS_TOL)


def _order_result(name, steps_list, residuals):
    order = residual_order(steps_list, residuals)
    if order is None:
        return InvariantResult(name, True, max(residuals), RESIDUAL_FLOOR, 'residuals vanish')
    return InvariantResult(
        name, order >= MIN_RESIDUAL_ORDER, order, MIN_RESIDUAL_ORDER,
        'observed order; residuals ' + ', '.join(f"{r:.3e}" for r in residuals),
    )


def check_invariants(config, alpha_sign=1.0, steps_list=(16, 32, 64)):
    """
    Run every invariant suite and collect pass/fail entries; failures are
    entries, not exceptions. alpha_sign = -1 mis-signs the transport drive.
    """
    rng = np.random.default_rng(config.seed)
    measure = unit_measure(config.initial_measure())
    epsilon = config.epsilons[0]
    model = config.microscopic_model(epsilon, measure)
    effective = dynamics.EffectiveModel.from_microscopic(model)
    initial = prepare_microscopic(config, epsilon, measure, model)
    eta = config.eta_vectors()[0]

    results = [
        _ccr_suite(config, rng),
        _weyl_suite(config, rng),
        _coherent_fourier_suite(config, measure),
        _unitarity_suite(config, measure, effective),
        _mass_suite(config, measure, effective),
        _order_result('duhamel_residual', steps_list, duhamel_study(model, initial, 1.0, steps_list, eta, model.s_op)),
        _order_result(
            'transport_residual', steps_list,
            transport_family_study(effective, measure, 1.0, steps_list, eta, alpha_sign=alpha_sign),
        ),
    ]
    for result in results:
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(level, f"invariant {result.name}: {'pass' if result.passed else 'FAIL'} ({result.value:.3e})")
    return results


def _csv_value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report_csv(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(CSV_COLUMNS)
        for cell in report.cells:
            writer.writerow([_csv_value(float(v)) for v in cell.row()])
    logger.info(f"wrote {path}")
    return path


def write_report_json(report, path, config=None):
    payload = report.to_dict()
    if config is not None:
        payload['config'] = config.to_dict()
    return dump_json(payload, path)


def write_fourier_csv(rows, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['index', 'eta', 'gap', 'trace_quantum_re', 'trace_quantum_im', 'trace_classical_re', 'trace_classical_im'])
        for row in rows:
            eta = ' '.join(f"{float(v.real)!r}{float(v.imag):+}j" for v in row['eta'])
            writer.writerow([
                row['index'], eta, repr(row['gap']),
                repr(row['trace_quantum'].real), repr(row['trace_quantum'].imag),
                repr(row['trace_classical'].real), repr(row['trace_classical'].imag),
            ])
    logger.info(f"wrote {path}")
    return path


def write_transport_csv(study, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['steps', 'dtau', 'transport_residual', 'duhamel_residual'])
        for row in study['rows']:
            writer.writerow([row['steps'], repr(row['dtau']), repr(row['transport_residual']), repr(row['duhamel_residual'])])
    logger.info(f"wrote {path}")
    return path


@transaction.atomic
def persist_report(report, config, output_dir=''):
    run = SweepRun.objects.create(
        label=report.label,
        seed=str(report.seed),
        nu_regime=report.nu_regime,
        config_source=config.source or '',
        output_dir=str(output_dir),
        number_moment_bound=number_moment_bound(report),
    )
    SweepCell.objects.bulk_create([
        SweepCell(
            run=run,
            epsilon=c.epsilon,
            t=c.t,
            trace_distance=c.trace_distance,
            fourier_gap_max=c.fourier_gap_max,
            number_moment_delta1=c.number_moment_delta1,
            duhamel_residual=c.duhamel_residual,
            transport_residual=c.transport_residual,
            tail_mass=c.tail_mass,
            wall_ms=c.wall_ms,
            untrusted=c.untrusted,
            fitted_order=report.orders.get(c.t, {}).get('order'),
        )
        for c in report.cells
    ])
    logger.info(f"recorded sweep run {run.pk} with {len(report.cells)} cells")
    return run


@transaction.atomic
def persist_invariants(results, config, alpha_sign=1.0):
    return InvariantCheck.objects.bulk_create([
        InvariantCheck(
            label=config.label,
            suite=r.name,
            passed=r.passed,
            value=r.value,
            tolerance=r.tolerance,
            detail=r.detail,
            alpha_sign=alpha_sign,
        )
        for r in results
    ])
