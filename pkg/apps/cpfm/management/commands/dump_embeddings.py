from django.core.management.base import BaseCommand, CommandError

from apps.cpfm.adaptation import CPFMModel
from apps.cpfm.datasets import read_dataset
from apps.cpfm.exceptions import CPFMError
from apps.cpfm.harness.config import add_run_arguments, run_config_from_options
from apps.cpfm.harness.cpfm import load_target_checkpoint
from apps.cpfm.harness.embeddings import dump_embeddings


class Command(BaseCommand):
    help = (
        'Write mean-pooled encoder embeddings of one branch as CSV, from an adapted checkpoint '
        'or (--init-only) from a freshly initialized target model.'
    )

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', default=None, help='adapted target checkpoint')
        parser.add_argument(
            '--init-only', dest='init_only', action='store_true',
            help='dump the untrained target model built from the run config (see --clone_prompt_init)',
        )
        parser.add_argument('--data', required=True)
        parser.add_argument('--branch', type=int, choices=(1, 2), default=1)
        parser.add_argument('--teacher', type=int, default=0, help='branch pair index')
        parser.add_argument('--out', required=True, help='CSV path')
        add_run_arguments(parser)

    def handle(self, *args, **options):
        if options['init_only'] == bool(options['checkpoint']):
            raise CommandError('give exactly one of --checkpoint or --init-only')
        try:
            if options['init_only']:
                config = run_config_from_options(options)
                model = CPFMModel.create(
                    config.encoder, options['teacher'] + 1, config.foundation_seed, config.seeds[0],
                    config.clone_prompt_init,
                )
            else:
                model = load_target_checkpoint(options['checkpoint']).model
            rows = dump_embeddings(
                model, read_dataset(options['data']), options['branch'], options['out'], options['teacher']
            )
        except CPFMError as exc:
            raise CommandError(str(exc)) from exc
        self.stdout.write(self.style.SUCCESS(f'{rows.shape[0]} x {rows.shape[1]} embeddings written to {options["out"]}'))
