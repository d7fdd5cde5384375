"""Run configuration: flat ``key=value`` files read with decouple, overridable per flag."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from decouple import Config, Csv, RepositoryEmpty, RepositoryEnv, UndefinedValueError
from django.conf import settings

from apps.cpfm.adaptation.losses import LossWeights
from apps.cpfm.adaptation.step import AblationFlags
from apps.cpfm.encoder.config import EncoderConfig, preset
from apps.cpfm.exceptions import CPFMError, ConfigError

ENCODER_KEYS = (
    'series_len',
    'channels',
    'patch_len',
    'model_dim',
    'heads',
    'layers',
    'prompt_len',
    'classes',
    'mask_ratio',
)
FLAG_KEYS = ('no_prompt', 'no_input_recon', 'no_prompt_recon', 'naive_avg')

_int_csv = Csv(cast=int, post_process=tuple)
_str_csv = Csv(post_process=tuple)

# key -> (cast, built-in default); encoder keys default to the chosen preset
FIELDS = {
    'preset': (str, 'default'),
    **{key: (float if key == 'mask_ratio' else int, None) for key in ENCODER_KEYS},
    'gamma1': (float, 0.1),
    'gamma2': (float, 1.0),
    'pi': (float, 0.5),
    'gamma_ema': (float, 0.7),
    'epochs': (int, 40),
    'source_epochs': (int, 20),
    'batch_size': (int, 32),
    'lr': (float, 1e-3),
    'seeds': (_int_csv, '0,1,2'),
    'foundation_seed': (int, 0),
    'teachers': (_str_csv, ''),
    **{key: (bool, False) for key in FLAG_KEYS},
    'confidence_threshold': (float, 0.5),
    'clone_prompt_init': (bool, False),
    'output_dir': (str, None),
    'samples_per_class': (int, 40),
    'train_fraction': (float, 0.7),
    'sources': (int, 1),
    'data_seed': (int, 0),
}


@dataclass(frozen=True)
class RunConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    flags: AblationFlags = field(default_factory=AblationFlags)
    preset: str = 'default'
    gamma_ema: float = 0.7
    epochs: int = 40
    source_epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    seeds: tuple[int, ...] = (0, 1, 2)
    foundation_seed: int = 0
    teachers: tuple[str, ...] = ()
    confidence_threshold: float = 0.5
    clone_prompt_init: bool = False
    output_dir: str = 'runs'
    samples_per_class: int = 40
    train_fraction: float = 0.7
    sources: int = 1
    data_seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.source_epochs < 1:
            raise ConfigError('epochs and source_epochs must be at least 1')
        if self.batch_size < 1:
            raise ConfigError(f'batch_size must be at least 1, got {self.batch_size}')
        if self.lr < 0:
            raise ConfigError(f'lr must be non-negative, got {self.lr}')
        if not self.seeds:
            raise ConfigError('at least one seed is required')
        if not 0.0 <= self.gamma_ema <= 1.0:
            raise ConfigError(f'gamma_ema must lie in [0, 1], got {self.gamma_ema}')
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ConfigError('confidence_threshold must lie in [0, 1]')
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError('train_fraction must lie in (0, 1)')
        if self.sources < 1 or self.samples_per_class < 1:
            raise ConfigError('sources and samples_per_class must be at least 1')

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    def replace(self, **changes) -> 'RunConfig':
        flat = self.to_flat()
        flat.update(changes)
        return RunConfig.from_flat(flat)

    def to_flat(self) -> dict:
        flat = {'preset': self.preset}
        flat.update(self.encoder.as_dict())
        flat.update(gamma1=self.weights.gamma1, gamma2=self.weights.gamma2, pi=self.weights.pi)
        flat.update({key: getattr(self.flags, key) for key in FLAG_KEYS})
        for key in FIELDS:
            if key not in flat:
                value = getattr(self, key)
                flat[key] = list(value) if isinstance(value, tuple) else value
        return flat

    @classmethod
    def from_flat(cls, flat: dict) -> 'RunConfig':
        unknown = sorted(set(flat) - set(FIELDS))
        if unknown:
            raise ConfigError(f'unknown run configuration keys: {unknown}')
        values = {key: flat[key] for key in FIELDS if flat.get(key) is not None}
        try:
            preset_name = values.pop('preset', 'default')
            base = preset(preset_name)
            encoder = base.replace(**{key: values.pop(key) for key in ENCODER_KEYS if key in values})
            weights = LossWeights(**{key: values.pop(key) for key in ('gamma1', 'gamma2', 'pi') if key in values})
            flags = AblationFlags(**{key: bool(values.pop(key)) for key in FLAG_KEYS if key in values})
            for key in ('seeds', 'teachers'):
                if key in values:
                    values[key] = tuple(values[key])
            values.setdefault('output_dir', str(settings.CPFM_OUTPUT_DIR))
            return cls(encoder=encoder, weights=weights, flags=flags, preset=preset_name, **values)
        except CPFMError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f'invalid run configuration: {exc}') from exc


def _coerce(key: str, value):
    cast, _ = FIELDS[key]
    if not isinstance(value, str):
        return tuple(value) if isinstance(value, (list, tuple)) else value
    if cast is bool:
        return Config(RepositoryEmpty())._cast_boolean(value)
    try:
        return cast(value)
    except ValueError as exc:
        raise ConfigError(f'{key}: cannot parse {value!r}') from exc


def load_run_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Flag overrides > config file (or environment) > built-in defaults."""
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f'run configuration file {path} does not exist')
        repository = RepositoryEnv(str(path))
        unknown = sorted(set(repository.data) - set(FIELDS))
        if unknown:
            raise ConfigError(f'{path}: unknown keys {unknown}')
    else:
        repository = RepositoryEmpty()
    source = Config(repository)

    flat = {}
    overrides = overrides or {}
    for key, (cast, default) in FIELDS.items():
        if overrides.get(key) is not None:
            flat[key] = _coerce(key, overrides[key])
            continue
        try:
            flat[key] = source(key, cast=cast) if default is None else source(key, default=default, cast=cast)
        except UndefinedValueError:
            flat[key] = None
        except ValueError as exc:
            raise ConfigError(f'{key}: {exc}') from exc
    return RunConfig.from_flat(flat)


def add_run_arguments(parser) -> None:
    """Register ``--config`` plus one flag per run key (``--gamma_ema`` and ``--gamma-ema``)."""
    parser.add_argument('--config', default=None, help='flat key=value run configuration file')
    for key, (cast, _) in FIELDS.items():
        names = [f'--{key}']
        if '_' in key:
            names.append(f'--{key.replace("_", "-")}')
        if cast is bool:
            parser.add_argument(*names, dest=key, action='store_const', const=True, default=None)
        else:
            parser.add_argument(*names, dest=key, default=None)


def run_config_from_options(options: dict, **forced) -> RunConfig:
    overrides = {key: options.get(key) for key in FIELDS}
    overrides.update(forced)
    return load_run_config(options.get('config'), overrides)
