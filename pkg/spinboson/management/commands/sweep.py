"""
Management command to run the full epsilon-sweep and write the convergence report
"""
import logging

from spinboson.management.base import SimulationCommand
from spinboson.services import harness

logger = logging.getLogger(__name__)


class Command(SimulationCommand):
    help = 'Run every (epsilon, t) cell of a config and write report.csv / report.json'
    banner = 'Quasi-classical convergence sweep'

    def run(self, config, out_dir, options):
        self.stdout.write(
            f'Model: {config.label} ({config.nu_regime}), '
            f'{len(config.epsilons)} epsilons x {len(config.times)} times, seed {config.seed}'
        )
        report = harness.run_sweep(config, threads=options['threads'], deterministic=options['deterministic'])

        for cell in report.cells:
            line = f'  eps={cell.epsilon:<10g} t={cell.t:<6g} D={cell.trace_distance:.4e}  F={cell.fourier_gap_max:.4e}'
            if cell.untrusted:
                self.stdout.write(self.style.WARNING(line + '  (untrusted: tail mass)'))
            else:
                self.stdout.write(line)

        self.stdout.write('\nFitted orders of D(eps, t):')
        for t, fit in report.orders.items():
            if fit['order'] is None:
                self.stdout.write(self.style.WARNING(f'  t={t:g}: not fitted (non-positive distances)'))
            else:
                self.stdout.write(f"  t={t:g}: order {fit['order']:.3f} (log-log residual {fit['fit_residual']:.2e})")

        harness.write_report_csv(report, out_dir / 'report.csv')
        harness.write_report_json(report, out_dir / 'report.json', config)

        if not options['no_db']:
            run = harness.persist_report(report, config, out_dir)
            self.stdout.write(f'Recorded sweep run #{run.pk}')

        self.stdout.write(self.style.SUCCESS(f'\nReport written to {out_dir}'))
