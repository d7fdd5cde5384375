from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from apps.cpfm.datasets import DOMAINS, gen_domain, split, synth_spec, write_dataset
from apps.cpfm.exceptions import CPFMError
from apps.cpfm.harness.config import add_run_arguments, run_config_from_options


class Command(BaseCommand):
    help = 'Generate synthetic domains as <domain>_train.tsds / <domain>_test.tsds.'

    def add_arguments(self, parser):
        parser.add_argument('domains', nargs='*', help=f'domains to generate (default: all of {", ".join(DOMAINS)})')
        parser.add_argument('--out', default=None, help='output directory (default: <output_dir>/data)')
        add_run_arguments(parser)

    def handle(self, *args, **options):
        try:
            config = run_config_from_options(options)
            enc = config.encoder
            out = Path(options['out']) if options['out'] else config.output_path / 'data'
            for name in options['domains'] or DOMAINS:
                spec = synth_spec(name, config.data_seed, config.samples_per_class, enc.series_len, enc.channels, enc.classes)
                train, test = split(gen_domain(spec), config.train_fraction, config.data_seed)
                write_dataset(train, out / f'{name}_train.tsds')
                write_dataset(test, out / f'{name}_test.tsds')
                self.stdout.write(f'{name}: {len(train)} train / {len(test)} test samples')
        except CPFMError as exc:
            raise CommandError(str(exc)) from exc
        self.stdout.write(self.style.SUCCESS(f'Datasets written to {out}'))
