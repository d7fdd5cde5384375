"""Run reports: scenario scores, per-epoch losses and transfer-weight trajectories."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import pandas as pd
from django.db import transaction
from django.utils import timezone

from apps.cpfm.models import EpochLog, Run, ScenarioResult, TransferWeightLog

logger = logging.getLogger(__name__)

SCORE_COLUMNS = ['source_only_mf1', 'cpfm_mf1', 'upper_bound_mf1']


@dataclass
class ScenarioRow:
    scenario: str
    variant: str
    seed: int
    sources: str
    target: str
    source_only_mf1: float | None
    cpfm_mf1: float | None
    upper_bound_mf1: float | None
    seconds: float = 0.0


@dataclass
class RunReport:
    rows: list[ScenarioRow] = field(default_factory=list)
    epochs: list[dict] = field(default_factory=list)
    weights: list[dict] = field(default_factory=list)

    def add_adaptation(self, scenario: str, variant: str, seed: int, records) -> None:
        for rec in records:
            self.epochs.append(
                dict(scenario=scenario, variant=variant, seed=seed, epoch=rec.epoch,
                     ce=rec.ce, pr=rec.pr, ir=rec.ir, seconds=rec.seconds)
            )
            for teacher, (eta, lam) in enumerate(zip(rec.eta, rec.lam)):
                self.weights.append(
                    dict(scenario=scenario, variant=variant, seed=seed, epoch=rec.epoch,
                         teacher=teacher, eta=eta, lam=lam)
                )

    def scenario_frame(self) -> pd.DataFrame:
        columns = list(ScenarioRow.__dataclass_fields__)
        return pd.DataFrame([asdict(row) for row in self.rows], columns=columns)

    def epoch_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.epochs, columns=['scenario', 'variant', 'seed', 'epoch', 'ce', 'pr', 'ir', 'seconds'])

    def weight_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.weights, columns=['scenario', 'variant', 'seed', 'epoch', 'teacher', 'eta', 'lam'])

    def summary_frame(self) -> pd.DataFrame:
        """Mean and std over seeds per (scenario, variant), plus an AVG row per variant."""
        frame = self.scenario_frame()
        if frame.empty:
            return pd.DataFrame(columns=['scenario', 'variant', 'seeds'] + [f'{c}_{s}' for c in SCORE_COLUMNS for s in ('mean', 'std')])
        frame[SCORE_COLUMNS] = frame[SCORE_COLUMNS].astype(float)
        per_seed_avg = frame.groupby(['variant', 'seed'], sort=False)[SCORE_COLUMNS].mean().reset_index()
        per_seed_avg['scenario'] = 'AVG'
        full = pd.concat([frame, per_seed_avg], ignore_index=True)
        grouped = full.groupby(['scenario', 'variant'], sort=False)
        summary = grouped[SCORE_COLUMNS].agg(['mean', 'std'])
        summary.columns = [f'{c}_{s}' for c, s in summary.columns]
        summary = summary.fillna({f'{c}_std': 0.0 for c in SCORE_COLUMNS})
        summary.insert(0, 'seeds', grouped['seed'].nunique())
        return summary.reset_index()

    def to_text(self) -> str:
        """Aligned table with one ``mean ± std`` cell per score."""
        summary = self.summary_frame()
        if summary.empty:
            return '(no results)'
        table = summary[['scenario', 'variant', 'seeds']].copy()
        for column, title in zip(SCORE_COLUMNS, ('source-only', 'CPFM', 'upper bound')):
            table[title] = [
                '-' if pd.isna(m) else f'{m:6.2f} ± {s:5.2f}'
                for m, s in zip(summary[f'{column}_mean'], summary[f'{column}_std'])
            ]
        return table.to_string(index=False)

    def write(self, output_dir) -> Path:
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        self.scenario_frame().to_csv(output_dir / 'scenarios.csv', index=False)
        self.epoch_frame().to_csv(output_dir / 'epochs.csv', index=False)
        self.weight_frame().to_csv(output_dir / 'weights.csv', index=False)
        self.summary_frame().to_csv(output_dir / 'summary.csv', index=False)
        (output_dir / 'summary.txt').write_text(self.to_text() + '\n', encoding='utf-8')
        logger.info('report written to %s', output_dir)
        return output_dir

    @transaction.atomic
    def persist(self, kind: str, name: str = '', config: dict | None = None, output_dir='') -> Run:
        run = Run.objects.create(kind=kind, name=name, config=config or {}, output_dir=str(output_dir))
        ScenarioResult.objects.bulk_create([ScenarioResult(run=run, **asdict(row)) for row in self.rows])
        EpochLog.objects.bulk_create([EpochLog(run=run, **row) for row in self.epochs])
        TransferWeightLog.objects.bulk_create([TransferWeightLog(run=run, **row) for row in self.weights])
        run.finished_at = timezone.now()
        run.save(update_fields=['finished_at'])
        return run

    @classmethod
    def from_run(cls, run: Run) -> 'RunReport':
        report = cls()
        for r in run.results.all():
            report.rows.append(
                ScenarioRow(
                    scenario=r.scenario, variant=r.variant, seed=r.seed, sources=r.sources, target=r.target,
                    source_only_mf1=r.source_only_mf1, cpfm_mf1=r.cpfm_mf1,
                    upper_bound_mf1=r.upper_bound_mf1, seconds=r.seconds,
                )
            )
        report.epochs = list(
            run.epochs.values('scenario', 'variant', 'seed', 'epoch', 'ce', 'pr', 'ir', 'seconds')
        )
        report.weights = list(
            run.transfer_weights.values('scenario', 'variant', 'seed', 'epoch', 'teacher', 'eta', 'lam')
        )
        return report
