import contextlib
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from apps.cpfm.datasets import read_dataset
from apps.cpfm.encoder import write_checkpoint
from apps.cpfm.exceptions import CPFMError
from apps.cpfm.harness.config import add_run_arguments, run_config_from_options
from apps.cpfm.harness.cpfm import adapt, load_target_checkpoint, target_checkpoint
from apps.cpfm.harness.report import RunReport
from apps.cpfm.teacher_service import TeacherClient


class Command(BaseCommand):
    help = 'Adapt a prompted target model to an unlabeled dataset using only teacher predictions.'

    def add_arguments(self, parser):
        parser.add_argument('--data', required=True, help='target .tsds dataset (labels, if any, are ignored)')
        parser.add_argument('--teacher', action='append', default=None,
                            help='teacher host:port; repeat for multi-source (default: CPFM_TEACHER_ADDR)')
        parser.add_argument('--out', required=True, help='target checkpoint path')
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--init-from', dest='init_from', default=None, help='adapted checkpoint to warm-start from')
        add_run_arguments(parser)

    def handle(self, *args, **options):
        try:
            config = run_config_from_options(options)
            addresses = options['teacher'] or list(config.teachers) or [settings.CPFM_TEACHER_ADDR]
            target = read_dataset(options['data']).unlabeled()
            init = load_target_checkpoint(options['init_from']) if options['init_from'] else None
            with contextlib.ExitStack() as stack:
                teachers = []
                for address in addresses:
                    client = TeacherClient(address)
                    stack.callback(client.close)
                    teachers.append(client)
                result = adapt(config, target, teachers, options['seed'], init=init)
            path = write_checkpoint(
                options['out'], target_checkpoint(result, teacher_addresses=addresses, no_prompt=config.flags.no_prompt)
            )
            scenario = f'{"+".join(addresses)}->{Path(options["data"]).stem}'
            report = RunReport()
            report.add_adaptation(scenario, config.flags.label, options['seed'], result.epochs)
            output_dir = report.write(Path(options['out']).with_suffix('.report'))
            run = report.persist('adapt', scenario, config.to_flat(), output_dir)
        except CPFMError as exc:
            raise CommandError(str(exc)) from exc
        self.stdout.write(self.style.SUCCESS(f'Adapted model written to {path} (run #{run.pk})'))
