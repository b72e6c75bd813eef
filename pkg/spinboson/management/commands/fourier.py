"""
Management command to tabulate both Fourier transforms over the eta grid
"""
from spinboson.management.base import SimulationCommand
from spinboson.services import harness


class Command(SimulationCommand):
    help = 'Tabulate Gamma_hat_eps(t) and m_hat_t over the eta grid (fourier.csv)'
    banner = 'Fourier table'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--epsilon', type=float, help='Defaults to the smallest epsilon of the config')
        parser.add_argument('--time', type=float, help='Defaults to the largest time of the config')

    def run(self, config, out_dir, options):
        epsilon = options['epsilon'] if options.get('epsilon') is not None else config.epsilons[-1]
        t = options['time'] if options.get('time') is not None else max(config.times)
        rows = harness.fourier_table(config, epsilon, t)
        for row in rows:
            self.stdout.write(f"  eta[{row['index']}] gap={row['gap']:.4e}")
        harness.write_fourier_csv(rows, out_dir / 'fourier.csv')
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(rows)} rows to {out_dir / "fourier.csv"}'))
