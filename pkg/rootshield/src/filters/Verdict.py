import enum
from typing import NamedTuple, Optional


class FilterId(str, enum.Enum):
    FQ_t = 'FQ_t'
    UR = 'UR'
    HC = 'HC'
    WR = 'WR'
    FQ_s = 'FQ_s'
    AR = 'AR'

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, s: str) -> 'FilterId':
        for f in cls:
            if f.value.lower() == s.strip().lower():
                return f
        raise ValueError(f'unknown filter {s!r}')


# fixed tie-break order of the selector
FILTER_ORDER = (FilterId.FQ_t, FilterId.UR, FilterId.HC, FilterId.WR, FilterId.FQ_s, FilterId.AR)


class Action(str, enum.Enum):
    PASS = 'pass'
    DROP = 'drop'


class Verdict(NamedTuple):
    action: Action
    filter_id: Optional[FilterId] = None

    @property
    def dropped(self) -> bool:
        return self.action is Action.DROP


def verdict_for(drop: bool, filter_id: FilterId) -> Verdict:
    return Verdict(Action.DROP if drop else Action.PASS, filter_id)
