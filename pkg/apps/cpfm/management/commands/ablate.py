from django.core.management.base import BaseCommand, CommandError

from apps.cpfm.datasets import DOMAINS, SYNTH_TARGETS
from apps.cpfm.exceptions import CPFMError
from apps.cpfm.harness.config import add_run_arguments, run_config_from_options
from apps.cpfm.harness.suite import ABLATIONS, ablation_variants, run_scenario_suite

ABLATION_SOURCES = 3


class Command(BaseCommand):
    help = 'Run the suite for the full method and each ablation variant.'

    def add_arguments(self, parser):
        parser.add_argument('variants', nargs='*', choices=list(ABLATIONS), help='default: all variants')
        parser.add_argument('--targets', nargs='+', default=list(SYNTH_TARGETS), choices=DOMAINS)
        parser.add_argument('--sockets', action='store_true')
        parser.add_argument('--name', default='')
        add_run_arguments(parser)

    def handle(self, *args, **options):
        try:
            # naive averaging only differs from entropy weighting with several teachers
            forced = {} if options.get('sources') is not None else {'sources': ABLATION_SOURCES}
            config = run_config_from_options(options, **forced)
            variants = ablation_variants(options['variants'])
            report = run_scenario_suite(
                config, variants, targets=options['targets'], use_sockets=options['sockets'], with_upper_bound=False
            )
            output_dir = report.write(config.output_path / 'ablate')
            run = report.persist('ablate', options['name'] or f'ablation k={config.sources}', config.to_flat(), output_dir)
        except CPFMError as exc:
            raise CommandError(str(exc)) from exc
        self.stdout.write(report.to_text())
        self.stdout.write(self.style.SUCCESS(f'Ablation run #{run.pk} written to {output_dir}'))
