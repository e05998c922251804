"""
Deployable filters. A Filter is an immutable snapshot of one filter's rules (the learned table it
was built from, the FQ rules, or a source blocklist). The engine swaps whole snapshots at tick
boundaries; verdicts never see a half-updated filter.
"""

from typing import Iterable, List, Optional, Sequence

import numpy as np

from .Verdict import Action, FilterId, Verdict, verdict_for


class Filter:
    # STATIC ATTRIBUTES
    id: FilterId = None
    title = ''

    def __init__(self):
        self.table = None           # the learned table behind the filter, if any
        self._peace_mask = None
        self._peace_key = None

    def matches(self, view) -> bool:
        """whether the filter's rules select the record"""
        raise NotImplementedError

    def check(self, now: float):
        if self.table is not None:
            self.table.check_fresh(now)

    def drops(self, view) -> bool:
        self.check(view.ts)
        return self.matches(view)

    def verdict(self, view) -> Verdict:
        return verdict_for(self.drops(view), self.id)

    def drop_mask(self, sample: Sequence) -> np.ndarray:
        drops = self.drops
        return np.fromiter((drops(v) for v in sample), dtype=bool, count=len(sample))

    def peace_mask(self, peace) -> np.ndarray:
        """drop mask over the collateral-damage sample, cached per sample"""
        if self._peace_key is not peace:
            self._peace_mask = self._compute_peace_mask(peace)
            self._peace_key = peace
        return self._peace_mask

    def _compute_peace_mask(self, peace) -> np.ndarray:
        # the peace sample may lie on another clock than the table, so no expiry check
        matches = self.matches
        return np.fromiter((matches(v) for v in peace.records), dtype=bool, count=len(peace.records))

    def describe(self) -> dict:
        return {'filter': str(self.id)}

    def __repr__(self):
        return f'<{self.__class__.__name__} {self.id}>'


class SourceSetFilter(Filter):
    """drops every query from a fixed set of sources"""

    def __init__(self, sources: Iterable[str]):
        super().__init__()
        self.sources = frozenset(sources)

    def __len__(self):
        return len(self.sources)

    def matches(self, view) -> bool:
        return view.src in self.sources

    def _compute_peace_mask(self, peace) -> np.ndarray:
        return peace.source_mask(self.sources)

    def describe(self) -> dict:
        return {'filter': str(self.id), 'sources': len(self.sources)}


class Pipeline:
    """an ordered sequence of filters; the first filter that drops a record gets the drop"""

    def __init__(self, filters: Sequence[Filter] = ()):
        self.filters = tuple(filters)

    @property
    def ids(self) -> tuple:
        return tuple(f.id for f in self.filters)

    def __len__(self):
        return len(self.filters)

    def __iter__(self):
        return iter(self.filters)

    def __bool__(self):
        return bool(self.filters)

    def get(self, fid: FilterId) -> Optional[Filter]:
        for f in self.filters:
            if f.id is fid:
                return f
        return None

    def disposition(self, view) -> Optional[FilterId]:
        for f in self.filters:
            if f.drops(view):
                return f.id
        return None

    def verdict(self, view) -> Verdict:
        fid = self.disposition(view)
        return Verdict(Action.PASS) if fid is None else Verdict(Action.DROP, fid)

    def label(self) -> str:
        return '+'.join(str(fid) for fid in self.ids)


def sequential_drops(filters: Sequence[Filter], masks: List[np.ndarray]) -> List[np.ndarray]:
    """
    Emulates a pipeline on precomputed per-filter drop masks: each filter only sees what its
    upstream filters passed. Returns the marginal drop mask of every filter.
    """
    remaining = None
    out = []
    for f, mask in zip(filters, masks):
        marginal = mask if remaining is None else mask & remaining
        out.append(marginal)
        remaining = ~marginal if remaining is None else remaining & ~marginal
    return out
