"""Scenario suites over the synthetic domain family: source-only, adapted and upper-bound scores."""
from __future__ import annotations

import contextlib
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from apps.cpfm.adaptation.step import AblationFlags
from apps.cpfm.datasets.generate import SYNTH_TARGETS, Dataset, gen_domain, scenario_sources, synth_spec
from apps.cpfm.datasets.split import split
from apps.cpfm.encoder.checkpoint import write_checkpoint
from apps.cpfm.encoder.model import PromptedClassifier
from apps.cpfm.harness.config import RunConfig
from apps.cpfm.harness.cpfm import AdaptResult, adapt
from apps.cpfm.harness.metrics import macro_f1
from apps.cpfm.harness.report import RunReport, ScenarioRow
from apps.cpfm.harness.training import source_checkpoint, train_source
from apps.cpfm.multi_source import combine_teachers
from apps.cpfm.teacher_service.client import TeacherClient
from apps.cpfm.teacher_service.local import LocalTeacher
from apps.cpfm.teacher_service.predictor import SourcePredictor
from apps.cpfm.teacher_service.server import serve

logger = logging.getLogger(__name__)

ABLATIONS = {
    'full': AblationFlags(),
    'no_prompt': AblationFlags(no_prompt=True),
    'no_input_recon': AblationFlags(no_input_recon=True),
    'no_prompt_recon': AblationFlags(no_prompt_recon=True),
    'naive_avg': AblationFlags(naive_avg=True),
}


@dataclass
class SuiteCache:
    """Datasets and trained models reused across scenarios, variants and seeds."""

    domains: dict[str, tuple[Dataset, Dataset]] = field(default_factory=dict)
    sources: dict[tuple[str, int], PromptedClassifier] = field(default_factory=dict)
    upper: dict[tuple[str, int], float] = field(default_factory=dict)


def domain_splits(config: RunConfig, name: str, cache: SuiteCache) -> tuple[Dataset, Dataset]:
    if name not in cache.domains:
        enc = config.encoder
        spec = synth_spec(name, config.data_seed, config.samples_per_class, enc.series_len, enc.channels, enc.classes)
        cache.domains[name] = split(gen_domain(spec), config.train_fraction, config.data_seed)
    return cache.domains[name]


def source_model(config: RunConfig, name: str, seed: int, cache: SuiteCache) -> PromptedClassifier:
    key = (name, seed)
    if key not in cache.sources:
        train, _ = domain_splits(config, name, cache)
        model = train_source(config, train, seed).model
        write_checkpoint(
            config.output_path / 'checkpoints' / f'source_{name}_s{seed}.ckpt',
            source_checkpoint(model, domain=name, seed=seed),
        )
        cache.sources[key] = model
    return cache.sources[key]


def upper_bound(config: RunConfig, target: str, seed: int, cache: SuiteCache) -> float:
    key = (target, seed)
    if key not in cache.upper:
        train, test = domain_splits(config, target, cache)
        model = train_source(config, train, seed).model
        cache.upper[key] = macro_f1(model.predict(test.x), test.labels, config.encoder.classes)
    return cache.upper[key]


@contextlib.contextmanager
def teacher_clients(predictors: list[SourcePredictor], use_sockets: bool):
    """Yield one client per predictor, over loopback sockets or in process."""
    if not use_sockets:
        yield [LocalTeacher(p) for p in predictors]
        return
    services = [serve(p, ('127.0.0.1', 0), background=True) for p in predictors]
    try:
        yield [TeacherClient(s.address) for s in services]
    finally:
        for s in services:
            s.stop()


def run_scenario(
    config: RunConfig,
    sources: list[str],
    target: str,
    seed: int,
    variant: str = 'full',
    use_sockets: bool = False,
    cache: SuiteCache | None = None,
    with_upper_bound: bool = True,
) -> tuple[ScenarioRow, AdaptResult]:
    cache = cache or SuiteCache()
    classes = config.encoder.classes
    started = time.perf_counter()
    predictors = [SourcePredictor(source_model(config, name, seed, cache)) for name in sources]
    target_train, target_test = domain_splits(config, target, cache)

    with teacher_clients(predictors, use_sockets) as teachers:
        result = adapt(config, target_train.unlabeled(), teachers, seed)
        teacher_soft = [t.predict(target_test.x, 'soft') for t in teachers]

    fused = combine_teachers(teacher_soft, np.ones(len(teacher_soft)))
    source_only = macro_f1(fused.argmax(axis=-1), target_test.labels, classes)
    adapted = macro_f1(result.model.predict(target_test.x, not config.flags.no_prompt), target_test.labels, classes)
    upper = upper_bound(config, target, seed, cache) if with_upper_bound else None
    scenario = f'{"+".join(sources)}->{target}'
    row = ScenarioRow(
        scenario=scenario,
        variant=variant,
        seed=seed,
        sources=','.join(sources),
        target=target,
        source_only_mf1=source_only,
        cpfm_mf1=adapted,
        upper_bound_mf1=upper,
        seconds=time.perf_counter() - started,
    )
    logger.info('%s [%s] seed %d: source-only %.2f, CPFM %.2f', scenario, variant, seed, source_only, adapted)
    return row, result


def run_scenario_suite(
    config: RunConfig,
    variants: dict[str, AblationFlags] | None = None,
    targets=SYNTH_TARGETS,
    use_sockets: bool = False,
    with_upper_bound: bool = True,
    cache: SuiteCache | None = None,
) -> RunReport:
    """Every (target, variant, seed) cell of the suite; sources follow each target cyclically."""
    variants = variants or {config.flags.label: config.flags}
    cache = cache or SuiteCache()
    report = RunReport()
    for target in targets:
        sources = scenario_sources(target, config.sources)
        for variant, flags in variants.items():
            variant_config = config.replace(**{key: getattr(flags, key) for key in (
                'no_prompt', 'no_input_recon', 'no_prompt_recon', 'naive_avg')})
            for seed in config.seeds:
                row, result = run_scenario(
                    variant_config, sources, target, seed, variant, use_sockets, cache, with_upper_bound
                )
                report.rows.append(row)
                report.add_adaptation(row.scenario, variant, seed, result.epochs)
    return report


def ablation_variants(names=None) -> dict[str, AblationFlags]:
    names = names or list(ABLATIONS)
    return {name: ABLATIONS[name] for name in names}
