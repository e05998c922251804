"""
Attack detection from the per-second load signal. AL (acceptable load) is the peace-time average
query rate times f_ACC; an attack starts once the offered load stays above AL for `start_streak`
seconds and ends once the defense blocks almost nothing while the passed load stays at or below AL
for `end_streak` seconds.
"""

import enum
import logging
from dataclasses import dataclass
from typing import Iterable, Optional

from ..exceptions import NoBaseline, NotPrimed


logger = logging.getLogger(__name__)


class DetectorEvent(str, enum.Enum):
    NONE = 'none'
    ATTACK_START = 'attack_start'
    ATTACK_END = 'attack_end'


@dataclass(frozen=True)
class LoadSample:
    ts: int
    incoming_qps: float
    passed_qps: float
    blocked_qps: float
    incoming_bps: float = 0.0

    def __post_init__(self):
        if min(self.incoming_qps, self.passed_qps, self.blocked_qps, self.incoming_bps) < 0:
            raise ValueError('load values must be non-negative')
        if abs(self.incoming_qps - self.passed_qps - self.blocked_qps) > 1e-6:
            raise ValueError('incoming load must equal passed plus blocked load')

    @classmethod
    def unfiltered(cls, ts: int, qps: float, bps: float = 0.0) -> 'LoadSample':
        return cls(ts, qps, qps, 0.0, bps)


@dataclass
class DetectorState:
    al: Optional[float] = None
    critical_streak: int = 0
    calm_streak: int = 0
    under_attack: bool = False
    attack_start: Optional[int] = None
    attack_end: Optional[int] = None

    @property
    def primed(self) -> bool:
        return self.al is not None and self.al > 0


def prime_al(peace, f_acc: float = 2.5, tick: float = 1.0) -> float:
    """
    AL from a peace trace: the mean incoming rate over the span of seconds the trace covers,
    times f_acc. `peace` is an iterable of records.
    """

    n = 0
    first = last = None
    for rec in peace:
        if first is None:
            first = rec.ts
        last = rec.ts
        n += 1
    if n == 0:
        raise NoBaseline('cannot derive AL from an empty peace trace')
    seconds = max(int(last // tick) - int(first // tick) + 1, 1) * tick
    return n / seconds * f_acc


def al_from_rates(qps_series: Iterable[float], f_acc: float = 2.5) -> float:
    """AL from a series of per-second incoming rates"""
    series = list(qps_series)
    if not series:
        raise NoBaseline('cannot derive AL from an empty load series')
    return sum(series) / len(series) * f_acc


def step(state: DetectorState, sample: LoadSample, start_streak: int = 2, end_streak: int = 60,
         end_blocked_fraction: float = 0.05) -> DetectorEvent:
    if not state.primed:
        raise NotPrimed('the detector needs AL before it can step')

    al = state.al
    if not state.under_attack:
        if sample.incoming_qps > al:
            state.critical_streak += 1
        else:
            state.critical_streak = 0
        if state.critical_streak >= start_streak:
            state.under_attack = True
            state.attack_start = sample.ts
            state.attack_end = None
            state.critical_streak = 0
            state.calm_streak = 0
            return DetectorEvent.ATTACK_START
        return DetectorEvent.NONE

    if sample.blocked_qps < end_blocked_fraction * al and sample.passed_qps <= al:
        state.calm_streak += 1
    else:
        state.calm_streak = 0
    if state.calm_streak >= end_streak:
        state.under_attack = False
        state.attack_end = sample.ts
        state.calm_streak = 0
        return DetectorEvent.ATTACK_END
    return DetectorEvent.NONE


class AttackDetector:
    """a DetectorState plus the streak configuration"""

    def __init__(self, start_streak: int = 2, end_streak: int = 60, end_blocked_fraction: float = 0.05):
        self.state = DetectorState()
        self.start_streak = start_streak
        self.end_streak = end_streak
        self.end_blocked_fraction = end_blocked_fraction

    @property
    def al(self) -> Optional[float]:
        return self.state.al

    @property
    def under_attack(self) -> bool:
        return self.state.under_attack

    def prime(self, al: float):
        if al is None or al <= 0:
            raise NoBaseline(f'AL must be positive, got {al}')
        self.state.al = al
        logger.info('acceptable load set to %.3f qps', al)

    def prime_al(self, peace, f_acc: float = 2.5) -> float:
        al = prime_al(peace, f_acc)
        self.prime(al)
        return al

    def step(self, sample: LoadSample) -> DetectorEvent:
        event = step(self.state, sample, self.start_streak, self.end_streak, self.end_blocked_fraction)
        if event is DetectorEvent.ATTACK_START:
            logger.info('attack started at %d (incoming %.1f qps, AL %.1f)', sample.ts, sample.incoming_qps, self.al)
        elif event is DetectorEvent.ATTACK_END:
            logger.info('attack ended at %d', sample.ts)
        return event
