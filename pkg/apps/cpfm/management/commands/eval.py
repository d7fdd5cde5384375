from pathlib import Path

import pandas as pd
from django.core.management.base import BaseCommand, CommandError

from apps.cpfm.datasets import read_dataset
from apps.cpfm.exceptions import CPFMError
from apps.cpfm.harness.evaluate import evaluate_checkpoint
from apps.cpfm.harness.report import RunReport, ScenarioRow


class Command(BaseCommand):
    help = 'Macro-F1 and confusion matrix of a source or adapted checkpoint on a labeled dataset.'

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True)
        parser.add_argument('--data', required=True, help='labeled .tsds dataset')
        parser.add_argument('--no-persist', dest='persist', action='store_false', help='do not record the run')

    def handle(self, *args, **options):
        try:
            dataset = read_dataset(options['data'])
            evaluation = evaluate_checkpoint(options['checkpoint'], dataset)
        except CPFMError as exc:
            raise CommandError(str(exc)) from exc

        labels = [f'c{k}' for k in range(dataset.classes)]
        matrix = pd.DataFrame(evaluation.confusion, index=labels, columns=labels)
        self.stdout.write('confusion (rows: true, columns: predicted)')
        self.stdout.write(matrix.to_string())
        if options['persist']:
            scenario = f'{Path(options["checkpoint"]).stem}@{Path(options["data"]).stem}'
            column = 'cpfm_mf1' if evaluation.kind == 'target' else 'source_only_mf1'
            row = ScenarioRow(
                scenario=scenario, variant=evaluation.kind, seed=0, sources='', target=dataset.name,
                source_only_mf1=None, cpfm_mf1=None, upper_bound_mf1=None,
            )
            setattr(row, column, evaluation.mf1)
            RunReport(rows=[row]).persist(
                'eval', scenario, {'checkpoint': options['checkpoint'], 'data': options['data']}
            )
        self.stdout.write(self.style.SUCCESS(f'{evaluation.kind} checkpoint MF1 {evaluation.mf1:.2f}'))
