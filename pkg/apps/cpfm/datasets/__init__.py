from apps.cpfm.datasets.fileio import read_dataset, write_dataset
from apps.cpfm.datasets.generate import (
    DOMAINS,
    SYNTH_SHIFTS,
    SYNTH_TARGETS,
    Dataset,
    DomainSpec,
    gen_domain,
    scenario_sources,
    synth_scenarios,
    synth_spec,
)
from apps.cpfm.datasets.split import split

__all__ = [
    'DOMAINS',
    'SYNTH_SHIFTS',
    'SYNTH_TARGETS',
    'Dataset',
    'DomainSpec',
    'gen_domain',
    'read_dataset',
    'scenario_sources',
    'split',
    'synth_scenarios',
    'synth_spec',
    'write_dataset',
]
