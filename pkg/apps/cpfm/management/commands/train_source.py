from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from apps.cpfm.datasets import read_dataset
from apps.cpfm.encoder import write_checkpoint
from apps.cpfm.exceptions import CPFMError
from apps.cpfm.harness.config import add_run_arguments, run_config_from_options
from apps.cpfm.harness.training import source_checkpoint, train_source


class Command(BaseCommand):
    help = 'Train a source model on a labeled dataset and write its checkpoint.'

    def add_arguments(self, parser):
        parser.add_argument('--data', required=True, help='labeled .tsds dataset')
        parser.add_argument('--out', required=True, help='checkpoint path')
        parser.add_argument('--seed', type=int, default=0)
        add_run_arguments(parser)

    def handle(self, *args, **options):
        try:
            config = run_config_from_options(options)
            dataset = read_dataset(options['data'])
            result = train_source(config, dataset, options['seed'])
            path = write_checkpoint(
                options['out'],
                source_checkpoint(result.model, domain=dataset.name or Path(options['data']).stem, seed=options['seed']),
            )
        except CPFMError as exc:
            raise CommandError(str(exc)) from exc
        self.stdout.write(
            self.style.SUCCESS(f'Source model written to {path} (train MF1 {result.train_mf1[-1]:.2f}, {result.seconds:.1f}s)')
        )
