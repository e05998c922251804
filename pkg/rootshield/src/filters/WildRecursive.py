"""
Wild recursive filter (WR).

Every recursive seen during the learning period gets a rate model: for each observation window w_i
(1, 2, 4, ... 256 s) the mean and standard deviation of its query count over the tumbling,
epoch-aligned windows of that size. Windows overlapping a second in which the server's load was
high (above the mean plus one standard deviation of the per-second load over the learning period)
are left out at every window size, so a bot cannot poison its own model by bursting during
learning.

Under attack the current counts r_cw_i over the trailing windows feed the smoothed deviance

    d_t = 0.5 * d_(t-1) + 0.5 * sum_i (r_cw_i - mean_i - 3 * std_i) / std_i

with std_i floored at `wr_std_floor` and d clamped to [wr_d_min, wr_d_max]. Sources with
d > t_WR are wild and all their traffic is dropped. Unmodeled sources always pass.
"""

import logging
from collections import Counter, deque
from typing import FrozenSet, Sequence, Tuple

import numpy as np

from .Filter import SourceSetFilter
from .FilterParams import FilterParams
from .Verdict import FilterId, Verdict, verdict_for
from ..exceptions import EmptyWindow, ExpiredState, UnknownSource


logger = logging.getLogger(__name__)


class RateTable:
    """per-source (mean, std) for every window plus the smoothed deviance state"""

    kind = 'rate-table'

    def __init__(self, sources: Sequence[str], windows: Sequence[int], mean: np.ndarray, std: np.ndarray,
                 built_at: float, learn_span: float, params: FilterParams = None):
        self.params = params or FilterParams()
        self.sources = tuple(sources)
        self.index = {src: i for i, src in enumerate(self.sources)}
        self.windows = tuple(int(w) for w in windows)
        self.mean = np.asarray(mean, dtype=float).reshape(len(self.sources), len(self.windows))
        self.std = np.asarray(std, dtype=float).reshape(len(self.sources), len(self.windows))
        self.built_at = float(built_at)
        self.learn_span = float(learn_span)
        self.use_period = self.params.u_wr

        # effective std of the deviance formula, and the expected ceiling mean + 3 std
        self._std_eff = np.maximum(self.std, self.params.wr_std_floor)
        self._ceiling = self.mean + 3.0 * self._std_eff

        self.d = np.zeros(len(self.sources))
        self.last_update = np.full(len(self.sources), np.nan)

    def __len__(self):
        return len(self.sources)

    def __contains__(self, src: str) -> bool:
        return src in self.index

    def expired(self, now: float) -> bool:
        return now - self.built_at > self.use_period

    def check_fresh(self, now: float):
        if self.expired(now):
            raise ExpiredState(
                f'rate-table built at {self.built_at} expired at {self.built_at + self.use_period} (now {now})'
            )

    def with_built_at(self, built_at: float) -> 'RateTable':
        t = RateTable(self.sources, self.windows, self.mean, self.std, built_at, self.learn_span, self.params)
        t.d = self.d.copy()
        t.last_update = self.last_update.copy()
        return t

    def model(self, src: str) -> Tuple[np.ndarray, np.ndarray]:
        i = self.index.get(src)
        if i is None:
            raise UnknownSource(f'{src} has no rate model')
        return self.mean[i], self.std[i]

    def reset(self):
        self.d[:] = 0.0
        self.last_update[:] = np.nan

    def score(self, src: str, counts: Sequence[float], now: float) -> float:
        """updates and returns d for one modeled source given its trailing-window counts"""
        i = self.index.get(src)
        if i is None:
            raise UnknownSource(f'{src} has no rate model')
        r = np.asarray(counts, dtype=float)
        if r.shape != (len(self.windows),):
            raise ValueError(f'expected {len(self.windows)} window counts, got {r.shape}')
        dev = float(np.sum((r - self._ceiling[i]) / self._std_eff[i]))
        d = 0.5 * self.d[i] + 0.5 * dev
        d = min(max(d, self.params.wr_d_min), self.params.wr_d_max)
        self.d[i] = d
        self.last_update[i] = now
        return d

    def score_all(self, counts: np.ndarray, now: float) -> np.ndarray:
        """score() for every modeled source at once; `counts` has one row per source"""
        dev = ((counts - self._ceiling) / self._std_eff).sum(axis=1)
        np.clip(0.5 * self.d + 0.5 * dev, self.params.wr_d_min, self.params.wr_d_max, out=self.d)
        self.last_update[:] = now
        return self.d

    def is_wild(self, src: str) -> bool:
        i = self.index.get(src)
        return i is not None and self.d[i] > self.params.t_wr

    def wild_set(self) -> FrozenSet[str]:
        rows = np.flatnonzero(self.d > self.params.t_wr)
        return frozenset(self.sources[i] for i in rows)

    def to_dict(self) -> dict:
        return {
            'windows': list(self.windows),
            'sources': {
                src: {'mean': self.mean[i].tolist(), 'std': self.std[i].tolist()}
                for i, src in enumerate(self.sources)
            },
        }

    @classmethod
    def from_dict(cls, d: dict, built_at: float, learn_span: float, params: FilterParams = None) -> 'RateTable':
        sources = list(d['sources'])
        k = len(d['windows'])
        mean = np.array([d['sources'][s]['mean'] for s in sources], dtype=float).reshape(len(sources), k)
        std = np.array([d['sources'][s]['std'] for s in sources], dtype=float).reshape(len(sources), k)
        return cls(sources, d['windows'], mean, std, built_at, learn_span, params)


def fit_rate_model(sources: Sequence[str], sec: np.ndarray, src_idx: np.ndarray, cnt: np.ndarray,
                   start: int, end: int, params: FilterParams, built_at: float) -> RateTable:
    """
    Fits the per-window models from aggregated (second, source, count) triples covering the
    learning period [start, end).
    """

    n = len(sources)
    k = len(params.windows)
    mean = np.zeros((n, k))
    std = np.zeros((n, k))
    period = max(end - start, 1)

    load = np.bincount(sec - start, weights=cnt, minlength=period)[:period]
    hot = (load > load.mean() + load.std()).astype(np.int64)
    per_source_total = np.bincount(src_idx, weights=cnt, minlength=n)

    for j, w in enumerate(params.windows):
        first = -(-start // w)          # first full window id
        last = end // w - 1             # last full window id
        n_windows = last - first + 1

        if n_windows <= 0:
            # period shorter than the window: assume the average rate, no spread
            mean[:, j] = per_source_total / period * w
            continue

        offsets = first * w - start
        keep = hot[offsets:offsets + n_windows * w].reshape(n_windows, w).sum(axis=1) == 0
        if not keep.any():
            # every window saw a busy second: nothing calmer to learn from
            keep[:] = True
        n_valid = int(keep.sum())

        win = sec // w - first
        inside = (win >= 0) & (win < n_windows)
        inside[inside] = keep[win[inside]]
        if not inside.any():
            continue

        key = src_idx[inside].astype(np.int64) * n_windows + win[inside]
        uniq, inverse = np.unique(key, return_inverse=True)
        sums = np.bincount(inverse, weights=cnt[inside])
        rows = uniq // n_windows

        s1 = np.bincount(rows, weights=sums, minlength=n)
        s2 = np.bincount(rows, weights=sums * sums, minlength=n)
        m = s1 / n_valid
        mean[:, j] = m
        std[:, j] = np.sqrt(np.maximum(s2 / n_valid - m * m, 0.0))

    return RateTable(sources, params.windows, mean, std, built_at, end - start, params)


def wr_learn(records, params: FilterParams = None, now: float = None) -> RateTable:
    """rate models of every source in the records; the records span the L_WR learning period"""

    params = params or FilterParams()
    agg = Counter()
    index = {}
    for rec in records:
        i = index.setdefault(rec.src, len(index))
        agg[(int(rec.ts), i)] += 1
    if not agg:
        raise EmptyWindow('WR learning window holds no traffic')

    keys = np.array(list(agg.keys()), dtype=np.int64)
    sec, src_idx = keys[:, 0], keys[:, 1]
    cnt = np.array(list(agg.values()), dtype=float)
    start = int(sec.min())
    end = int(sec.max()) + 1 if now is None else max(int(np.floor(now)), int(sec.max()) + 1)
    return fit_rate_model(list(index), sec, src_idx, cnt, start, end, params,
                          built_at=end if now is None else now)


def wr_score(table: RateTable, source: str, counts: Sequence[float], now: float) -> float:
    return table.score(source, counts, now)


def wr_verdict(table: RateTable, wild: FrozenSet[str], record) -> Verdict:
    table.check_fresh(record.ts)
    return verdict_for(record.src in wild, FilterId.WR)


class WrLearner:
    """per-second query counts of every source over the trailing L_WR seconds"""

    def __init__(self, params: FilterParams):
        self.params = params
        self._seconds = deque()     # (second, Counter(src -> count)), increasing seconds

    def add_second(self, second: int, records):
        if not records:
            return
        counts = Counter(rec.src for rec in records)
        if self._seconds and self._seconds[-1][0] == second:
            self._seconds[-1][1].update(counts)
        else:
            self._seconds.append((second, counts))

    def extend(self, records):
        """adds records spanning any number of seconds, in time order"""
        second = None
        bucket = []
        for rec in records:
            s = int(rec.ts)
            if s != second and bucket:
                self.add_second(second, bucket)
                bucket = []
            second = s
            bucket.append(rec)
        if bucket:
            self.add_second(second, bucket)

    def shift(self, delta: int):
        self._seconds = deque((s + delta, c) for s, c in self._seconds)

    def _prune(self, horizon: float):
        while self._seconds and self._seconds[0][0] < horizon:
            self._seconds.popleft()

    def build(self, now: float) -> RateTable:
        end = int(np.floor(now))
        start = int(np.ceil(now - self.params.l_wr))
        self._prune(start)
        if not self._seconds:
            raise EmptyWindow('WR learning window holds no traffic')
        start = max(start, self._seconds[0][0])

        index = {}
        sec, src_idx, cnt = [], [], []
        for s, counts in self._seconds:
            if s >= end:
                continue
            for src, c in counts.items():
                sec.append(s)
                src_idx.append(index.setdefault(src, len(index)))
                cnt.append(c)
        if not index:
            raise EmptyWindow('WR learning window holds no traffic')

        table = fit_rate_model(
            list(index), np.array(sec, dtype=np.int64), np.array(src_idx, dtype=np.int64),
            np.array(cnt, dtype=float), start, end, self.params, built_at=now,
        )
        logger.debug('fitted rate models for %d sources over [%d, %d)', len(table), start, end)
        return table


class RateTracker:
    """
    Ring buffer of the last max(windows) seconds of per-second counts for the modeled sources,
    giving the right-aligned trailing-window counts r_cw_i at each tick.
    """

    def __init__(self, table: RateTable):
        self.windows = np.array(table.windows, dtype=int)
        self.width = int(self.windows[-1])
        self.sources = table.sources
        self.index = table.index
        self.ring = np.zeros((len(self.sources), self.width))
        self.last_second = None

    def rebind(self, table: RateTable) -> 'RateTracker':
        """a tracker for a new table, carrying over the history of sources present in both"""
        new = RateTracker(table)
        new.last_second = self.last_second
        if self.last_second is not None and new.width == self.width:
            old_rows, new_rows = [], []
            for src, i in new.index.items():
                j = self.index.get(src)
                if j is not None:
                    new_rows.append(i)
                    old_rows.append(j)
            if new_rows:
                new.ring[new_rows] = self.ring[old_rows]
        return new

    def _advance(self, second: int):
        if self.last_second is None or second - self.last_second >= self.width:
            self.ring[:] = 0.0
        else:
            for s in range(self.last_second + 1, second + 1):
                self.ring[:, s % self.width] = 0.0
        self.last_second = second

    def add_second(self, second: int, records):
        if self.last_second is None or second > self.last_second:
            self._advance(second)
        index = self.index
        rows = [i for i in (index.get(rec.src) for rec in records) if i is not None]
        if rows:
            self.ring[:, second % self.width] += np.bincount(rows, minlength=len(self.sources))

    def trailing_counts(self) -> np.ndarray:
        """(n_sources, n_windows) counts over the last w seconds ending at the current second"""
        if self.last_second is None:
            return np.zeros((len(self.sources), len(self.windows)))
        order = (self.last_second - np.arange(self.width)) % self.width
        cum = np.cumsum(self.ring[:, order], axis=1)
        return cum[:, self.windows - 1]

    def counts_of(self, src: str) -> np.ndarray:
        return self.trailing_counts()[self.index[src]]


class WildRecursiveFilter(SourceSetFilter):
    id = FilterId.WR
    title = 'wild recursive'

    def __init__(self, table: RateTable, wild: FrozenSet[str] = None):
        super().__init__(table.wild_set() if wild is None else wild)
        self.table = table

    def describe(self) -> dict:
        return {'filter': str(self.id), 'wild': len(self.sources), 'modeled': len(self.table)}
