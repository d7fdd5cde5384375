from django.core.management.base import BaseCommand, CommandError

from apps.cpfm.datasets import DOMAINS, SYNTH_TARGETS
from apps.cpfm.exceptions import CPFMError
from apps.cpfm.harness.config import add_run_arguments, run_config_from_options
from apps.cpfm.harness.suite import run_scenario_suite


class Command(BaseCommand):
    help = 'Run the synthetic scenario suite: source-only, CPFM and upper-bound MF1 over seeds.'

    def add_arguments(self, parser):
        parser.add_argument('--targets', nargs='+', default=list(SYNTH_TARGETS), choices=DOMAINS)
        parser.add_argument('--sockets', action='store_true', help='serve teachers over loopback TCP')
        parser.add_argument('--no-upper-bound', dest='upper_bound', action='store_false')
        parser.add_argument('--name', default='')
        add_run_arguments(parser)

    def handle(self, *args, **options):
        try:
            config = run_config_from_options(options)
            report = run_scenario_suite(
                config,
                targets=options['targets'],
                use_sockets=options['sockets'],
                with_upper_bound=options['upper_bound'],
            )
            name = options['name'] or f'synth{len(options["targets"])} k={config.sources}'
            output_dir = report.write(config.output_path / 'suite')
            run = report.persist('suite', name, config.to_flat(), output_dir)
        except CPFMError as exc:
            raise CommandError(str(exc)) from exc
        self.stdout.write(report.to_text())
        self.stdout.write(self.style.SUCCESS(f'Suite run #{run.pk} written to {output_dir}'))
