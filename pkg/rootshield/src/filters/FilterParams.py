import dataclasses
from dataclasses import dataclass
from typing import Tuple

from ..exceptions import ConfigError
from ..utils import load_json


DEFAULT_WINDOWS = tuple(2 ** i for i in range(9))  # 1 .. 256 s


@dataclass(frozen=True)
class FilterParams:
    """Learning and deployment parameters shared by all filters. Periods are in seconds."""

    l_fq: int = 10_000          # queries per FQ learning sample
    f_fq: float = 0.3           # absolute frequency-increase threshold
    l_ur: float = 7200.0
    l_hc: float = 7200.0
    u_ur: float = 7200.0
    u_hc: float = 7200.0
    l_wr: float = 7200.0
    wr_refresh: float = 1200.0
    windows: Tuple[int, ...] = DEFAULT_WINDOWS
    t_wr: float = 0.5
    f_acc: float = 2.5
    fq_rule_cap: int = 5

    # fraction of a source's queries that must match an FQ rule for FQ_s to block it
    fq_s_threshold: float = 0.5
    wr_std_floor: float = 1.0
    wr_d_min: float = -10.0
    wr_d_max: float = 1e6

    @property
    def u_wr(self) -> float:
        return self.l_wr

    def __post_init__(self):
        object.__setattr__(self, 'windows', tuple(int(w) for w in self.windows))
        self.validate()

    def validate(self):
        for name in ('l_ur', 'l_hc', 'u_ur', 'u_hc', 'l_wr', 'wr_refresh'):
            if getattr(self, name) <= 0:
                raise ConfigError(f'{name} must be > 0')
        if self.l_fq < 1:
            raise ConfigError('l_fq must be >= 1')
        if not self.windows:
            raise ConfigError('windows must not be empty')
        if any(w <= 0 for w in self.windows) or \
                any(b <= a for a, b in zip(self.windows, self.windows[1:])):
            raise ConfigError('windows must be positive and strictly increasing')
        if self.wr_refresh > self.l_wr:
            raise ConfigError('wr_refresh must not exceed l_wr, the rate table use period')
        if self.t_wr <= 0:
            raise ConfigError('t_wr must be > 0')
        if self.f_acc <= 1:
            raise ConfigError('f_acc must be > 1')
        if self.fq_rule_cap < 1:
            raise ConfigError('fq_rule_cap must be >= 1')
        if not 0 < self.f_fq < 1:
            raise ConfigError('f_fq must lie in (0, 1)')
        if not 0 < self.fq_s_threshold <= 1:
            raise ConfigError('fq_s_threshold must lie in (0, 1]')
        if self.wr_std_floor <= 0:
            raise ConfigError('wr_std_floor must be > 0')
        if self.wr_d_min >= self.wr_d_max:
            raise ConfigError('wr_d_min must be below wr_d_max')

    @classmethod
    def load(cls, data: dict, base: 'FilterParams' = None) -> 'FilterParams':
        """builds params from a dict; entries set to 'default' keep the base value"""
        base = base or cls()
        names = {f.name for f in dataclasses.fields(cls)}
        imported = {}
        for k, v in (data or {}).items():
            if k not in names:
                raise ConfigError(f'unknown filter parameter {k!r}')
            if v != 'default':
                imported[k] = v
        try:
            return dataclasses.replace(base, **imported)
        except (TypeError, ValueError) as e:
            raise ConfigError(f'bad filter parameters: {e}')

    @classmethod
    def load_from_config(cls, filepath: str) -> 'FilterParams':
        return cls.load(load_json(filepath))

    def with_overrides(self, **overrides) -> 'FilterParams':
        return self.load({k: v for k, v in overrides.items() if v is not None}, base=self)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d['windows'] = list(self.windows)
        return d
