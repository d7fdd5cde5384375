from django.core.management.base import BaseCommand, CommandError

from apps.cpfm.harness.report import RunReport
from apps.cpfm.models import Run


class Command(BaseCommand):
    help = 'Print a stored run as an aligned mean ± std table; optionally rewrite its CSVs.'

    def add_arguments(self, parser):
        parser.add_argument('run_id', nargs='?', type=int, help='default: the latest run')
        parser.add_argument('--csv', default=None, help='directory to write the CSV files into')

    def handle(self, *args, **options):
        if options['run_id'] is None:
            run = Run.objects.first()
            if run is None:
                raise CommandError('no runs recorded yet')
        else:
            try:
                run = Run.objects.get(pk=options['run_id'])
            except Run.DoesNotExist:
                raise CommandError(f'run {options["run_id"]} does not exist') from None
        report = RunReport.from_run(run)
        self.stdout.write(str(run))
        self.stdout.write(report.to_text())
        if options['csv']:
            report.write(options['csv'])
            self.stdout.write(self.style.SUCCESS(f'CSV files written to {options["csv"]}'))
