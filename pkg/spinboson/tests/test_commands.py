import json
import shutil
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from spinboson.models import InvariantCheck, SweepCell, SweepRun

SMALL_CONFIG = """
[model]
S = [[1.0, 0.0], [0.0, -1.0]]
s = [[0.0, 1.0], [1.0, 0.0]]
omega = [1.0]
g = [1.0]
nu_regime = "free_field"

[initial]
gamma = [[1.0, 0.0], [0.0, 0.0]]

[[initial.atoms]]
z = [1.0]

[sweep]
epsilons = [0.25, 0.125, 0.0625]
times = [0.5]
seed = 5

[output]
label = "commands"
"""


class CommandTestCase(TestCase):
    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, self.tmp, ignore_errors=True)
        self.config = self.tmp / 'small.toml'
        self.config.write_text(SMALL_CONFIG)
        self.out = self.tmp / 'out'

    def call(self, name, *args):
        stdout = StringIO()
        call_command(name, '--config', str(self.config), '--out', str(self.out), *args, stdout=stdout)
        return stdout.getvalue()


class SweepCommandTests(CommandTestCase):
    def test_writes_reports_and_records_run(self):
        output = self.call('sweep', '--deterministic')
        self.assertIn('Fitted orders', output)
        self.assertTrue((self.out / 'report.csv').exists())
        payload = json.loads((self.out / 'report.json').read_text())
        self.assertEqual(payload['nu_regime'], 'free_field')
        self.assertEqual(payload['seed'], 5)
        run = SweepRun.objects.get()
        self.assertEqual(run.label, 'commands')
        self.assertEqual(run.config_source, str(self.config))
        self.assertEqual(SweepCell.objects.filter(run=run).count(), 3)

    def test_no_db_and_seed_override(self):
        self.call('sweep', '--no-db', '--seed', '11')
        self.assertEqual(SweepRun.objects.count(), 0)

    def test_largest_u64_seed_is_recorded(self):
        self.call('sweep', '--seed', str(2 ** 64 - 1))
        self.assertEqual(SweepRun.objects.get().seed, '18446744073709551615')

    def test_out_of_range_seed_is_a_command_error(self):
        for seed in (str(2 ** 64), '-1'):
            with self.subTest(seed=seed), self.assertRaises(CommandError):
                self.call('sweep', '--no-db', f'--seed={seed}')
        self.assertFalse((self.out / 'report.csv').exists())
        self.assertEqual(json.loads((self.out / 'report.json').read_text())['seed'], 11)

    def test_bad_config_is_a_command_error(self):
        self.config.write_text(SMALL_CONFIG.replace('[0.25, 0.125, 0.0625]', '[0.125, 0.25]'))
        with self.assertRaises(CommandError):
            self.call('sweep')

    def test_missing_config_is_a_command_error(self):
        with self.assertRaises(CommandError):
            call_command('sweep', '--config', str(self.tmp / 'absent.toml'), stdout=StringIO())

    def test_thread_count_is_checked(self):
        with self.assertRaises(CommandError):
            self.call('sweep', '--threads', '0')


class SimulateCommandTests(CommandTestCase):
    def test_dumps_states(self):
        self.call('simulate', '--epsilon', '0.25', '--time', '0.5', '--deterministic')
        state = json.loads((self.out / 'state.json').read_text())
        self.assertEqual(state['dims'][0], 2)
        self.assertEqual(state['epsilon'], 0.25)
        measure = json.loads((self.out / 'measure.json').read_text())
        self.assertEqual(len(measure), 1)
        summary = json.loads((self.out / 'simulate.json').read_text())
        self.assertEqual(summary['wall_ms'], 0.0)


class InvariantsCommandTests(CommandTestCase):
    def test_all_suites_pass_and_are_recorded(self):
        output = self.call('invariants')
        self.assertIn('All suites passed.', output)
        self.assertEqual(InvariantCheck.objects.filter(passed=False).count(), 0)
        payload = json.loads((self.out / 'invariants.json').read_text())
        self.assertEqual(payload['alpha_sign'], 1.0)

    def test_flipped_alpha_fails_transport(self):
        output = self.call('invariants', '--flip-alpha', '--no-db')
        self.assertIn('transport_residual', output)
        self.assertEqual(InvariantCheck.objects.count(), 0)
        results = json.loads((self.out / 'invariants.json').read_text())['results']
        self.assertFalse(next(r for r in results if r['name'] == 'transport_residual')['passed'])


class StudyCommandTests(CommandTestCase):
    def test_fourier(self):
        self.call('fourier', '--epsilon', '0.125', '--time', '0.5')
        lines = (self.out / 'fourier.csv').read_text().splitlines()
        self.assertEqual(len(lines), 9)

    def test_transport(self):
        output = self.call('transport', '--steps', '16', '32', '64')
        self.assertIn('transport_order', output)
        study = json.loads((self.out / 'transport.json').read_text())
        self.assertEqual([row['steps'] for row in study['rows']], [16, 32, 64])
