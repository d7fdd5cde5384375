from __future__ import annotations

from apps.cpfm.models import Run, ScenarioResult


def result_to_dict(r: ScenarioResult) -> dict:
    return {
        'scenario': r.scenario,
        'variant': r.variant,
        'seed': r.seed,
        'sources': r.sources.split(',') if r.sources else [],
        'target': r.target,
        'source_only_mf1': r.source_only_mf1,
        'cpfm_mf1': r.cpfm_mf1,
        'upper_bound_mf1': r.upper_bound_mf1,
        'seconds': r.seconds,
    }


def run_to_dict(run: Run, detail: bool = False) -> dict:
    data = {
        'id': run.id,
        'kind': run.kind,
        'name': run.name,
        'output_dir': run.output_dir,
        'created_at': run.created_at.isoformat() if run.created_at else None,
        'finished_at': run.finished_at.isoformat() if run.finished_at else None,
    }
    if detail:
        data['config'] = run.config
        data['results'] = [result_to_dict(r) for r in run.results.all()]
        data['epochs'] = list(run.epochs.values('scenario', 'variant', 'seed', 'epoch', 'ce', 'pr', 'ir', 'seconds'))
        data['transfer_weights'] = list(
            run.transfer_weights.values('scenario', 'variant', 'seed', 'epoch', 'teacher', 'eta', 'lam')
        )
    return data
