"""
Management command for a single (epsilon, t) run with JSON state dumps
"""
from spinboson.management.base import SimulationCommand
from spinboson.services import harness, serialization


class Command(SimulationCommand):
    help = 'Simulate one (epsilon, t) cell and dump the microscopic state and the evolved measure as JSON'
    banner = 'Single cell simulation'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--epsilon', type=float, help='Defaults to the smallest epsilon of the config')
        parser.add_argument('--time', type=float, help='Defaults to the largest time of the config')

    def run(self, config, out_dir, options):
        epsilon = options['epsilon'] if options.get('epsilon') is not None else config.epsilons[-1]
        t = options['time'] if options.get('time') is not None else max(config.times)
        self.stdout.write(f'Simulating eps={epsilon:g}, t={t:g} ({config.nu_regime})')

        result = harness.simulate_cell(
            config, epsilon, t,
            threads=options['threads'],
            deterministic=options['deterministic'],
            keep_states=True,
        )
        snapshot = result.snapshot
        serialization.dump_json(serialization.state_to_dict(snapshot.state, snapshot.model.dims), out_dir / 'state.json')
        serialization.dump_json(serialization.measure_to_list(snapshot.measure), out_dir / 'measure.json')
        serialization.dump_json(result.to_dict(), out_dir / 'simulate.json')

        self.stdout.write(f'  trace distance D     = {result.trace_distance:.6e}')
        self.stdout.write(f'  Fourier gap max F    = {result.fourier_gap_max:.6e}')
        self.stdout.write(f'  Duhamel residual     = {result.duhamel_residual:.3e}')
        self.stdout.write(f'  transport residual   = {result.transport_residual:.3e}')
        if result.untrusted:
            self.stdout.write(self.style.WARNING(f'  tail mass {result.tail_mass:.2e} is large compared to D'))
        self.stdout.write(self.style.SUCCESS(f'Wrote state.json, measure.json, simulate.json to {out_dir}'))
