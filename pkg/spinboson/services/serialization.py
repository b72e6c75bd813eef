"""
JSON encodings for joint states and state-valued measures.

Complex numbers are written as [re, im] pairs and matrices row-major, so the
files can be read back without numpy-specific formats.
"""
import json
import logging
from pathlib import Path

import numpy as np

from .exceptions import InvalidStateError
from .measures import Atom, StateValuedMeasure
from .micro import JointState

logger = logging.getLogger(__name__)


def complex_pairs(values):
    return [[float(v.real), float(v.imag)] for v in np.ravel(np.asarray(values, dtype=np.complex128))]


def from_pairs(pairs, shape=None):
    try:
        data = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise InvalidStateError(f"expected a list of [re, im] pairs: {exc}") from exc
    if shape is not None:
        if data.size != int(np.prod(shape)):
            raise InvalidStateError(f"{data.size} entries cannot fill shape {tuple(shape)}")
        data = data.reshape(shape)
    return data


def matrix_to_json(M):
    return [complex_pairs(row) for row in np.asarray(M)]


def matrix_from_json(rows):
    return np.stack([from_pairs(row) for row in rows])


def state_to_dict(state, dims):
    return {
        'dims': [int(d) for d in dims],
        'epsilon': float(state.epsilon),
        'time': float(state.time),
        'entries': complex_pairs(state.rho),
    }


def state_from_dict(data):
    n = int(np.prod(data['dims']))
    rho = from_pairs(data['entries'], (n, n))
    state = JointState(rho=rho, epsilon=float(data['epsilon']), time=float(data.get('time', 0.0)))
    return state.validate_positive()


def measure_to_list(measure):
    return [
        {'weight': atom.weight, 'z': complex_pairs(atom.z), 'gamma': matrix_to_json(atom.gamma)}
        for atom in measure.atoms
    ]


def measure_from_list(items):
    if not items:
        raise InvalidStateError("ensemble JSON holds no atoms")
    atoms = []
    for item in items:
        atoms.append(Atom(weight=float(item['weight']), z=from_pairs(item['z']), gamma=matrix_from_json(item['gamma'])))
    return StateValuedMeasure(atoms=tuple(atoms))


def dump_json(payload, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))
    logger.info(f"wrote {path}")
    return path


def load_json(path):
    return json.loads(Path(path).read_text())
