"""
Shared plumbing for the simulation management commands: the common flags,
config loading and the SimulationError -> CommandError translation.
"""
import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from spinboson.services.config import ExperimentConfig, load_config
from spinboson.services.exceptions import SimulationError

logger = logging.getLogger(__name__)


class SimulationCommand(BaseCommand):
    """A command driven by an experiment config; subclasses implement run()."""

    banner = ''

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            type=str,
            help='Path to an experiment TOML file. Defaults to the built-in standard model.',
        )
        parser.add_argument(
            '--out',
            type=str,
            help='Output directory (default: [output].directory or SIMULATION_RESULTS_DIR/<label>)',
        )
        parser.add_argument(
            '--seed',
            type=int,
            help='Override [sweep].seed (0 <= seed < 2**64)',
        )
        parser.add_argument(
            '--threads',
            type=int,
            default=settings.SIMULATION_THREADS,
            help=f'Worker threads (default: {settings.SIMULATION_THREADS})',
        )
        parser.add_argument(
            '--no-db',
            action='store_true',
            help='Do not record the run in the database',
        )
        parser.add_argument(
            '--deterministic',
            action='store_true',
            help='Write wall-clock timings as 0 so output files are byte-reproducible',
        )

    def load(self, options):
        config = load_config(options['config']) if options.get('config') else ExperimentConfig.default()
        if options.get('seed') is not None:
            config = config.with_seed(options['seed'])
        if options['threads'] < 1:
            raise CommandError(f"--threads must be >= 1, got {options['threads']}")
        return config

    def handle(self, *args, **options):
        if self.banner:
            self.stdout.write(self.style.SUCCESS(f'=== {self.banner} ==='))
        try:
            config = self.load(options)
            out_dir = config.results_dir(options.get('out'))
            out_dir.mkdir(parents=True, exist_ok=True)
            self.run(config, out_dir, options)
        except SimulationError as e:
            logger.error(f"{self.banner or 'command'} failed: {e}")
            self.stdout.write(self.style.ERROR(f'Error: {e}'))
            raise CommandError(str(e)) from e

    def run(self, config, out_dir, options):
        raise NotImplementedError
