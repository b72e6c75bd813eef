"""
Management command to run the invariant suites and record the pass/fail ledger
"""
from spinboson.management.base import SimulationCommand
from spinboson.services import harness, serialization


class Command(SimulationCommand):
    help = 'Run the CCR, Weyl, unitarity, mass, Duhamel and transport suites'
    banner = 'Invariant ledger'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--flip-alpha',
            action='store_true',
            help='Mis-sign the transport drive (negative control; the transport suite must fail)',
        )

    def run(self, config, out_dir, options):
        alpha_sign = -1.0 if options['flip_alpha'] else 1.0
        results = harness.check_invariants(config, alpha_sign=alpha_sign)

        for r in results:
            line = f'  {r.name:<20} value={r.value:.3e} tolerance={r.tolerance:.1e} {r.detail}'
            self.stdout.write(self.style.SUCCESS('PASS' + line) if r.passed else self.style.ERROR('FAIL' + line))

        serialization.dump_json(
            {'label': config.label, 'alpha_sign': alpha_sign, 'results': [vars(r) for r in results]},
            out_dir / 'invariants.json',
        )
        if not options['no_db']:
            harness.persist_invariants(results, config, alpha_sign)

        failed = [r.name for r in results if not r.passed]
        if failed:
            self.stdout.write(self.style.WARNING(f"\n{len(failed)} suite(s) failed: {', '.join(failed)}"))
        else:
            self.stdout.write(self.style.SUCCESS('\nAll suites passed.'))
