"""
Management command for the Duhamel / transport residual study under grid halving
"""
from spinboson.management.base import SimulationCommand
from spinboson.services import harness, serialization


class Command(SimulationCommand):
    help = 'Residuals of the Duhamel and transport equations on refined grids (transport.csv)'
    banner = 'Transport residual study'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--steps',
            type=int,
            nargs='+',
            default=[16, 32, 64, 128],
            help='Panel counts to compare (default: 16 32 64 128)',
        )
        parser.add_argument('--time', type=float, default=1.0, help='Interval end (default: 1.0)')

    def run(self, config, out_dir, options):
        study = harness.transport_study(config, options['steps'], t=options['time'])
        for row in study['rows']:
            self.stdout.write(
                f"  steps={row['steps']:<5} transport={row['transport_residual']:.3e} duhamel={row['duhamel_residual']:.3e}"
            )
        for name in ('transport_order', 'duhamel_order'):
            order = study[name]
            if order is None:
                self.stdout.write(f'  {name}: residuals vanish')
            else:
                style = self.style.SUCCESS if order >= harness.MIN_RESIDUAL_ORDER else self.style.WARNING
                self.stdout.write(style(f'  {name}: {order:.3f}'))
        harness.write_transport_csv(study, out_dir / 'transport.csv')
        serialization.dump_json(study, out_dir / 'transport.json')
        self.stdout.write(self.style.SUCCESS(f'Wrote {out_dir / "transport.csv"}'))
