"""
Hop-count filter (HC): the TTL values seen from every source over the last L_HC seconds.
Traffic from a known source arriving with an unseen TTL is dropped; unknown sources pass.
"""

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, FrozenSet

from .Filter import Filter
from .FilterParams import FilterParams
from .LearnedTable import LearnedTable
from .Verdict import FilterId, Verdict, verdict_for
from ..exceptions import EmptyWindow


@dataclass(frozen=True)
class TtlTable(LearnedTable):
    entries: Dict[str, FrozenSet[int]]
    built_at: float
    learn_span: float
    use_period: float = 7200.0

    kind = 'ttl-table'

    def __contains__(self, src: str) -> bool:
        return src in self.entries

    def __len__(self):
        return len(self.entries)

    def mismatch(self, src: str, ttl: int) -> bool:
        ttls = self.entries.get(src)
        return ttls is not None and ttl not in ttls


def hc_build(records, params: FilterParams = None, now: float = None) -> TtlTable:
    params = params or FilterParams()
    entries = defaultdict(set)
    first = last = None
    for rec in records:
        entries[rec.src].add(rec.ttl)
        if first is None:
            first = rec.ts
        last = rec.ts
    if not entries:
        raise EmptyWindow('HC learning window holds no traffic')
    return TtlTable(
        {src: frozenset(ttls) for src, ttls in entries.items()},
        last if now is None else now, last - first, params.u_hc,
    )


def hc_verdict(table: TtlTable, record) -> Verdict:
    table.check_fresh(record.ts)
    return verdict_for(table.mismatch(record.src, record.ttl), FilterId.HC)


class HcLearner:
    """last sighting of every (source, TTL) pair"""

    def __init__(self, params: FilterParams):
        self.params = params
        self._seen = defaultdict(dict)
        self._first_ts = None

    def add(self, rec):
        self._seen[rec.src][rec.ttl] = rec.ts
        if self._first_ts is None:
            self._first_ts = rec.ts

    def extend(self, records):
        seen = self._seen
        for rec in records:
            seen[rec.src][rec.ttl] = rec.ts
            if self._first_ts is None:
                self._first_ts = rec.ts

    def shift(self, delta: float):
        shifted = defaultdict(dict)
        for src, ttls in self._seen.items():
            shifted[src] = {ttl: t + delta for ttl, t in ttls.items()}
        self._seen = shifted
        if self._first_ts is not None:
            self._first_ts += delta

    def build(self, now: float) -> TtlTable:
        horizon = now - self.params.l_hc
        kept = defaultdict(dict)
        for src, ttls in self._seen.items():
            recent = {ttl: t for ttl, t in ttls.items() if t >= horizon}
            if recent:
                kept[src] = recent
        self._seen = kept
        if not kept:
            raise EmptyWindow('HC learning window holds no traffic')
        span = min(self.params.l_hc, now - self._first_ts)
        return TtlTable(
            {src: frozenset(ttls) for src, ttls in kept.items()}, now, span, self.params.u_hc
        )


class HopCountFilter(Filter):
    id = FilterId.HC
    title = 'hop count'

    def __init__(self, table: TtlTable):
        super().__init__()
        self.table = table
        self._entries = table.entries

    def matches(self, view) -> bool:
        ttls = self._entries.get(view.src)
        return ttls is not None and view.ttl not in ttls

    def describe(self) -> dict:
        return {'filter': str(self.id), 'sources': len(self._entries), 'built_at': self.table.built_at}
