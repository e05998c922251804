import dataclasses
import os
from dataclasses import dataclass, field
from typing import Optional

from ..exceptions import ConfigError
from ..filters.FilterParams import FilterParams
from ..filters.Verdict import FilterId
from ..utils import load_json


MODES = {
    'ddidd': (FilterId.FQ_t, FilterId.UR, FilterId.HC, FilterId.WR, FilterId.FQ_s),
    'partial': (FilterId.UR, FilterId.HC, FilterId.WR),
    'FQ': (FilterId.FQ_t,),
    'UR': (FilterId.UR,),
    'HC': (FilterId.HC,),
    'WR': (FilterId.WR,),
    'AR': (FilterId.AR,),
}


def parse_mode(mode: str) -> str:
    for m in MODES:
        if m.lower() == str(mode).strip().lower():
            return m
    if str(mode).strip().lower() == 'fq_t':
        return 'FQ'
    raise ConfigError(f'unknown mode {mode!r}, expected one of {", ".join(MODES)}')


@dataclass
class EngineConfig:
    """Everything a replay depends on. Two replays with equal configs produce identical output."""

    params: FilterParams = field(default_factory=FilterParams)
    peace_path: Optional[str] = None
    attack_path: Optional[str] = None
    mode: str = 'ddidd'
    seed: int = 0
    tick: int = 1

    # detector
    start_streak: int = 2
    end_streak: int = 60
    end_blocked_fraction: float = 0.05

    # selector
    strict_ordering: bool = False
    reselect_after: int = 3
    retire_after: int = 30
    retire_fraction: float = 0.001

    cd_sample_size: int = 20_000
    max_attack_seconds: Optional[int] = None
    threaded_learning: bool = False
    timeline_path: Optional[str] = None

    def __post_init__(self):
        self.mode = parse_mode(self.mode)

    @property
    def enabled(self) -> tuple:
        return MODES[self.mode]

    def validate(self, check_paths: bool = True):
        if not isinstance(self.tick, int) or self.tick < 1:
            raise ConfigError('tick must be a positive whole number of seconds')
        if self.start_streak < 1 or self.end_streak < 1:
            raise ConfigError('detector streaks must be >= 1')
        if self.reselect_after < 1 or self.retire_after < 1:
            raise ConfigError('selector streaks must be >= 1')
        if self.cd_sample_size < 1:
            raise ConfigError('cd_sample_size must be >= 1')
        if self.max_attack_seconds is not None and self.max_attack_seconds < 1:
            raise ConfigError('max_attack_seconds must be >= 1')
        if check_paths:
            for name in ('peace_path', 'attack_path'):
                path = getattr(self, name)
                if path is None:
                    raise ConfigError(f'{name} is required')
                if not os.path.isfile(path):
                    raise ConfigError(f'{name} {path} does not exist')

    @classmethod
    def load(cls, data: dict, base: 'EngineConfig' = None) -> 'EngineConfig':
        """like FilterParams.load; the filter parameters nest under "params" """
        base = base or cls()
        names = {f.name for f in dataclasses.fields(cls)}
        imported = {}
        for k, v in (data or {}).items():
            if k not in names:
                raise ConfigError(f'unknown engine setting {k!r}')
            if v == 'default':
                continue
            if k == 'params':
                v = FilterParams.load(v, base.params)
            imported[k] = v
        try:
            return dataclasses.replace(base, **imported)
        except (TypeError, ValueError) as e:
            raise ConfigError(f'bad engine settings: {e}')

    @classmethod
    def load_from_config(cls, filepath: str) -> 'EngineConfig':
        try:
            return cls.load(load_json(filepath))
        except ValueError as e:
            raise ConfigError(f'{filepath}: {e}')

    def with_overrides(self, **overrides) -> 'EngineConfig':
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != 'params'}
        d['params'] = self.params.to_dict()
        return d
