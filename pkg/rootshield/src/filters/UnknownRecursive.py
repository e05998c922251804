"""
Unknown recursive filter (UR): an allow-list of the sources seen over the last L_UR seconds.
Traffic from listed recursives passes, everything else is dropped.
"""

from dataclasses import dataclass
from typing import FrozenSet

from .Filter import Filter
from .FilterParams import FilterParams
from .LearnedTable import LearnedTable
from .Verdict import FilterId, Verdict, verdict_for
from ..exceptions import EmptyWindow


@dataclass(frozen=True)
class AllowList(LearnedTable):
    sources: FrozenSet[str]
    built_at: float
    learn_span: float
    use_period: float = 7200.0

    kind = 'allow-list'

    def __contains__(self, src: str) -> bool:
        return src in self.sources

    def __len__(self):
        return len(self.sources)


def ur_build(records, params: FilterParams = None, now: float = None) -> AllowList:
    params = params or FilterParams()
    sources = set()
    first = last = None
    for rec in records:
        sources.add(rec.src)
        if first is None:
            first = rec.ts
        last = rec.ts
    if not sources:
        raise EmptyWindow('UR learning window holds no traffic')
    return AllowList(frozenset(sources), last if now is None else now, last - first, params.u_ur)


def ur_verdict(allow_list: AllowList, record) -> Verdict:
    allow_list.check_fresh(record.ts)
    return verdict_for(record.src not in allow_list.sources, FilterId.UR)


class UrLearner:
    """last sighting of every source; `build` keeps those seen within the trailing L_UR"""

    def __init__(self, params: FilterParams):
        self.params = params
        self._last_seen = {}
        self._first_ts = None

    def add(self, rec):
        self._last_seen[rec.src] = rec.ts
        if self._first_ts is None:
            self._first_ts = rec.ts

    def extend(self, records):
        last_seen = self._last_seen
        for rec in records:
            last_seen[rec.src] = rec.ts
            if self._first_ts is None:
                self._first_ts = rec.ts

    def shift(self, delta: float):
        """moves the learned sightings by `delta` seconds onto another clock"""
        self._last_seen = {s: t + delta for s, t in self._last_seen.items()}
        if self._first_ts is not None:
            self._first_ts += delta

    def build(self, now: float) -> AllowList:
        horizon = now - self.params.l_ur
        self._last_seen = {s: t for s, t in self._last_seen.items() if t >= horizon}
        if not self._last_seen:
            raise EmptyWindow('UR learning window holds no traffic')
        span = min(self.params.l_ur, now - self._first_ts)
        return AllowList(frozenset(self._last_seen), now, span, self.params.u_ur)


class AllowListFilter(Filter):
    id = FilterId.UR
    title = 'unknown recursive'

    def __init__(self, allow_list: AllowList):
        super().__init__()
        self.allow_list = allow_list
        self.table = allow_list
        self._sources = allow_list.sources

    def matches(self, view) -> bool:
        return view.src not in self._sources

    def _compute_peace_mask(self, peace):
        return ~peace.source_mask(self._sources)

    def describe(self) -> dict:
        return {'filter': str(self.id), 'allowed': len(self._sources), 'built_at': self.allow_list.built_at}
