"""Generator settings. Each loads from a JSON document with the same field names."""

import dataclasses
from dataclasses import dataclass
from typing import List, Optional

from ..exceptions import ConfigError
from ..utils import load_json


ATTACK_KINDS = ('p1', 'p2', 'p3', 'p4', 'p5')


class _Loadable:
    _what = 'setting'

    @classmethod
    def load(cls, data: dict, base=None):
        """entries set to 'default' keep the default; unknown entries are an error"""
        names = {f.name for f in dataclasses.fields(cls)}
        imported = {}
        for k, v in (data or {}).items():
            if k not in names:
                raise ConfigError(f'unknown {cls._what} {k!r}')
            if v != 'default':
                imported[k] = v
        try:
            return dataclasses.replace(base, **imported) if base is not None else cls(**imported)
        except (TypeError, ValueError) as e:
            raise ConfigError(f'bad {cls._what}: {e}')

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class LegitProfile(_Loadable):
    n_sources: int = 1000
    duration: float = 600.0
    start: float = 0.0
    rate_min: float = 1e-3
    rate_max: float = 1e2
    ttl_min: int = 32
    ttl_max: int = 250
    valid_fraction: float = 0.4     # the rest are junk names
    tcp_fraction: float = 0.05
    seed: int = 0

    _what = 'legit profile field'

    def __post_init__(self):
        if self.n_sources < 2:
            raise ConfigError('n_sources must be >= 2')
        if self.duration <= 0:
            raise ConfigError('duration must be > 0')
        if self.start < 0:
            raise ConfigError('start must be >= 0')
        if not 0 < self.rate_min < self.rate_max:
            raise ConfigError('need 0 < rate_min < rate_max')
        if not 0 <= self.ttl_min <= self.ttl_max <= 255:
            raise ConfigError('need 0 <= ttl_min <= ttl_max <= 255')
        if not 0 <= self.valid_fraction <= 1 or not 0 <= self.tcp_fraction <= 1:
            raise ConfigError('fractions must lie in [0, 1]')

    @classmethod
    def load_from_config(cls, filepath: str) -> 'LegitProfile':
        return cls.load(load_json(filepath))

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class AttackSpec(_Loadable):
    kind: str = 'p1'
    start: float = 0.0
    end: float = 120.0
    multiplier: float = 10.0        # attack rate over the legit aggregate rate
    qname: str = 'a.attack'         # the fixed name of p1 and p5
    known_fraction: float = 0.02    # share of the known sources p3/p4 spoof
    fixed_fraction: float = 0.1     # share of p5 queries using the fixed name
    seed: int = 0

    _what = 'attack field'

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f'invalid attack kind {self.kind!r}, expected one of {", ".join(ATTACK_KINDS)}')
        if self.end <= self.start:
            raise ConfigError('attack end must be after its start')
        if self.multiplier <= 0:
            raise ConfigError('multiplier must be > 0')
        if not 0 < self.known_fraction <= 1:
            raise ConfigError('known_fraction must lie in (0, 1]')
        if not 0 <= self.fixed_fraction <= 1:
            raise ConfigError('fixed_fraction must lie in [0, 1]')
        if not self.qname:
            raise ConfigError('qname must not be empty')

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def needs_known_sources(self) -> bool:
        return self.kind in ('p3', 'p4')


@dataclass(frozen=True)
class FlashCrowdSpec(_Loadable):
    """a legitimate surge: a share of the known sources multiply their usual rate"""

    start: float = 0.0
    end: float = 120.0
    surge_fraction: float = 0.1
    surge_factor: float = 40.0
    seed: int = 0

    _what = 'flash crowd field'

    def __post_init__(self):
        if self.end <= self.start:
            raise ConfigError('flash crowd end must be after its start')
        if not 0 < self.surge_fraction <= 1:
            raise ConfigError('surge_fraction must lie in (0, 1]')
        if self.surge_factor <= 1:
            raise ConfigError('surge_factor must be > 1')


def polymorphic_specs(kinds=ATTACK_KINDS, start: float = 0.0, phase_seconds: float = 120.0,
                      multiplier: float = 10.0, seed: int = 0, **fields) -> List[AttackSpec]:
    """back-to-back phases, one per kind"""
    return [
        AttackSpec(kind=k, start=start + i * phase_seconds, end=start + (i + 1) * phase_seconds,
                   multiplier=multiplier, seed=seed + i, **fields)
        for i, k in enumerate(kinds)
    ]


@dataclass
class AttackPlan:
    """the attacks file: attack phases, optional flash crowds and the background window"""

    attacks: List[AttackSpec]
    flash_crowds: List[FlashCrowdSpec]
    background_start: Optional[float] = None
    background_end: Optional[float] = None

    @classmethod
    def load(cls, data) -> 'AttackPlan':
        if isinstance(data, list):
            data = {'attacks': data}
        if not isinstance(data, dict):
            raise ConfigError('an attacks file holds a list of attacks or an object')
        unknown = set(data) - {'attacks', 'flash_crowds', 'background_start', 'background_end'}
        if unknown:
            raise ConfigError(f'unknown attacks file entries {sorted(unknown)}')
        attacks = [AttackSpec.load(a) for a in data.get('attacks', [])]
        crowds = [FlashCrowdSpec.load(c) for c in data.get('flash_crowds', [])]
        if not attacks and not crowds:
            raise ConfigError('the attacks file defines neither attacks nor flash crowds')
        return cls(attacks, crowds, data.get('background_start'), data.get('background_end'))

    @classmethod
    def load_from_config(cls, filepath: str) -> 'AttackPlan':
        return cls.load(load_json(filepath))

    def span(self):
        events = self.attacks + self.flash_crowds
        return min(e.start for e in events), max(e.end for e in events)

    def to_dict(self) -> dict:
        return {
            'attacks': [a.to_dict() for a in self.attacks],
            'flash_crowds': [c.to_dict() for c in self.flash_crowds],
            'background_start': self.background_start,
            'background_end': self.background_end,
        }
