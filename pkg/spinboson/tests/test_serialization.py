import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from spinboson.services import fock, measures, micro, serialization
from spinboson.services.exceptions import InvalidStateError

PLUS = 0.5 * np.ones((2, 2), dtype=complex)


class StateSerializationTests(SimpleTestCase):
    def test_state_survives_json(self):
        space = fock.FockSpace(cutoffs=(6,), epsilon=0.25)
        state = micro.product_state(PLUS, fock.coherent_state(space, [0.3 + 0.2j]), 0.25, time=1.5)
        payload = json.loads(json.dumps(serialization.state_to_dict(state, (2, space.dimension))))
        self.assertEqual(payload['dims'], [2, 7])
        restored = serialization.state_from_dict(payload)
        assert_allclose(restored.rho, state.rho, atol=0)
        self.assertEqual(restored.epsilon, 0.25)
        self.assertEqual(restored.time, 1.5)

    def test_entry_count_must_match_dims(self):
        with self.assertRaises(InvalidStateError):
            serialization.state_from_dict({'dims': [2, 2], 'epsilon': 0.5, 'entries': [[1.0, 0.0]] * 4})

    def test_rejects_non_positive_state(self):
        rho = np.diag([1.5, -0.5, 0.0, 0.0])
        data = {'dims': [2, 2], 'epsilon': 0.5, 'entries': serialization.complex_pairs(rho.ravel())}
        with self.assertRaises(InvalidStateError):
            serialization.state_from_dict(data)

    def test_rejects_malformed_pairs(self):
        with self.assertRaises(InvalidStateError):
            serialization.from_pairs([[1.0, 'x']])


class MeasureSerializationTests(SimpleTestCase):
    def test_measure_survives_json(self):
        m = measures.StateValuedMeasure(atoms=(
            measures.Atom(weight=0.3, z=[1.0 - 0.25j, 0.5j], gamma=PLUS),
            measures.Atom(weight=0.7, z=[0.0, 2.0], gamma=np.diag([0.0, 1.0])),
        ))
        restored = serialization.measure_from_list(json.loads(json.dumps(serialization.measure_to_list(m))))
        assert_allclose(restored.weights, m.weights, atol=0)
        assert_allclose(restored.points, m.points, atol=0)
        for a, b in zip(restored.atoms, m.atoms):
            assert_allclose(a.gamma, b.gamma, atol=0)

    def test_empty_list_is_rejected(self):
        with self.assertRaises(InvalidStateError):
            serialization.measure_from_list([])


class FileTests(SimpleTestCase):
    def test_dump_creates_directories(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'nested' / 'out.json'
            serialization.dump_json({'b': [1, 2], 'a': 'x'}, path)
            self.assertTrue(path.exists())
            self.assertEqual(serialization.load_json(path), {'a': 'x', 'b': [1, 2]})
            self.assertLess(path.read_text().index('"a"'), path.read_text().index('"b"'))
