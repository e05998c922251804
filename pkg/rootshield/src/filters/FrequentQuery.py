"""
Frequent query name filter (FQ).

Peace-time traffic is summarized as the frequency of every TLD, subdomain and full name over the
last L_FQ queries. Under attack the same summary is taken over the current traffic; segments whose
frequency rose by more than f_FQ become rules. FQ_t drops queries matching the rules directly
(iptables string match, at most `fq_rule_cap` rules). FQ_s instead blocks the sources that mostly
send matching queries (ipset), which is only sound behind the anti-spoofing filters.
"""

from collections import Counter, defaultdict, deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Set

from .Filter import Filter, SourceSetFilter
from .FilterParams import FilterParams
from .Verdict import FilterId, Verdict, verdict_for
from ..exceptions import EmptySample, RuleCapExceeded
from ..trace.QnameSegments import LEVELS, segment_qname, is_suffix


_LEVEL_INDEX = {level: i for i, level in enumerate(LEVELS)}


@dataclass(frozen=True)
class QnameFreqTable:
    tld: Dict[str, float]
    subdomain: Dict[str, float]
    full: Dict[str, float]
    sample_size: int
    built_at: Optional[float] = None

    def level(self, level: str) -> Dict[str, float]:
        return getattr(self, level)

    def freq(self, level: str, segment: str) -> float:
        return self.level(level).get(segment, 0.0)

    @classmethod
    def from_counts(cls, counts: Dict[str, Counter], sample_size: int, built_at: float = None,
                    min_freq: float = 0.0) -> 'QnameFreqTable':
        """`min_freq` leaves out rare segments, for callers that only look for surges"""
        min_count = min_freq * sample_size
        levels = {}
        for level in LEVELS:
            levels[level] = {
                seg: c / sample_size
                for seg, c in counts[level].items()
                if c > min_count
            }
        return cls(levels['tld'], levels['subdomain'], levels['full'], sample_size, built_at)

    def to_dict(self) -> dict:
        return {'sample_size': self.sample_size, 'tld': self.tld, 'subdomain': self.subdomain, 'full': self.full}

    @classmethod
    def from_dict(cls, d: dict, built_at: float = None) -> 'QnameFreqTable':
        return cls(dict(d['tld']), dict(d['subdomain']), dict(d['full']), int(d['sample_size']), built_at)


@dataclass(frozen=True)
class FqRule:
    kind: str               # tld | subdomain | full
    value: str
    freq_increase: float
    cd_estimate: float = 0.0

    def matches(self, qname: str) -> bool:
        if self.kind == 'full':
            return qname == self.value
        return is_suffix(qname, self.value)

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'value': self.value,
                'freq_increase': self.freq_increase, 'cd_estimate': self.cd_estimate}


def _count_segments(sample) -> Dict[str, Counter]:
    counts = {level: Counter() for level in LEVELS}
    tld, sub, full = counts['tld'], counts['subdomain'], counts['full']
    for rec in sample:
        if not rec.qname:
            continue  # root queries carry no segments
        t, s, f = segment_qname(rec.qname)
        tld[t] += 1
        sub[s] += 1
        full[f] += 1
    return counts


def fq_learn(sample, built_at: float = None) -> QnameFreqTable:
    """frequency of every segment over the sample; the sample is the last L_FQ queries"""
    sample = list(sample)
    if not sample:
        raise EmptySample('FQ learning needs at least one query')
    if built_at is None:
        built_at = sample[-1].ts
    return QnameFreqTable.from_counts(_count_segments(sample), len(sample), built_at)


def _is_ancestor(anc: FqRule, desc: FqRule) -> bool:
    return _LEVEL_INDEX[desc.kind] > _LEVEL_INDEX[anc.kind] and is_suffix(desc.value, anc.value)


def fq_detect(baseline: QnameFreqTable, current: QnameFreqTable, params: FilterParams) -> List[FqRule]:
    """
    Returns the segments whose absolute frequency rose by more than f_FQ. A flagged ancestor is
    dropped when a flagged, more specific segment explains its increase up to f_FQ.
    """

    flagged = []
    for level in LEVELS:
        base = baseline.level(level)
        for seg, cur in current.level(level).items():
            before = base.get(seg, 0.0)
            inc = cur - before
            if inc > params.f_fq:
                flagged.append(FqRule(level, seg, inc, min(1.0, max(0.0, before))))

    rules = [
        r for r in flagged
        if not any(
            _is_ancestor(r, d) and r.freq_increase - d.freq_increase <= params.f_fq
            for d in flagged
        )
    ]
    rules.sort(key=lambda r: (-r.freq_increase, _LEVEL_INDEX[r.kind], r.value))
    return rules


class FqMatcher:
    """compiled rule set: one set lookup per label boundary of the name"""

    def __init__(self, rules: Iterable[FqRule]):
        self.rules = tuple(rules)
        self.exact = frozenset(r.value for r in self.rules if r.kind == 'full')
        self.suffixes = frozenset(r.value for r in self.rules if r.kind != 'full')

    def __len__(self):
        return len(self.rules)

    def matches(self, qname: str) -> bool:
        if qname in self.exact:
            return True
        suffixes = self.suffixes
        if not suffixes:
            return False
        if qname in suffixes:
            return True
        i = qname.find('.')
        while i >= 0:
            if qname[i + 1:] in suffixes:
                return True
            i = qname.find('.', i + 1)
        return False


def check_rule_cap(rules, params: FilterParams):
    if len(rules) > params.fq_rule_cap:
        raise RuleCapExceeded(
            f'{len(rules)} FQ_t rules exceed the cap of {params.fq_rule_cap}'
        )


def fq_verdict_t(rules: List[FqRule], record, params: FilterParams = None) -> Verdict:
    params = params or FilterParams()
    check_rule_cap(rules, params)
    return verdict_for(FqMatcher(rules).matches(record.qname), FilterId.FQ_t)


def fq_identify_sources(rules, attack_sample, threshold: float = 0.5) -> Set[str]:
    """sources whose share of rule-matching queries in the sample is at least `threshold`"""

    matcher = rules if isinstance(rules, FqMatcher) else FqMatcher(rules)
    if not len(matcher):
        return set()

    total = defaultdict(int)
    matching = defaultdict(int)
    for rec in attack_sample:
        total[rec.src] += 1
        if matcher.matches(rec.qname):
            matching[rec.src] += 1

    return {src for src, m in matching.items() if m >= threshold * total[src]}


def fq_verdict_s(sources: Set[str], record) -> Verdict:
    return verdict_for(record.src in sources, FilterId.FQ_s)


class FqLearner:
    """segment counts over the trailing L_FQ queries, updated one query at a time"""

    def __init__(self, params: FilterParams):
        self.params = params
        self._window = deque()
        self._counts = {level: Counter() for level in LEVELS}
        self.last_ts = None

    def __len__(self):
        return len(self._window)

    def add(self, rec):
        segs = segment_qname(rec.qname) if rec.qname else None
        self._window.append(segs)
        if segs is not None:
            for level, seg in zip(LEVELS, segs):
                self._counts[level][seg] += 1
        if len(self._window) > self.params.l_fq:
            old = self._window.popleft()
            if old is not None:
                for level, seg in zip(LEVELS, old):
                    c = self._counts[level]
                    c[seg] -= 1
                    if c[seg] == 0:
                        del c[seg]
        self.last_ts = rec.ts

    def extend(self, records):
        for rec in records:
            self.add(rec)

    def shift(self, delta: float):
        if self.last_ts is not None:
            self.last_ts += delta

    def build(self, now: float = None, min_freq: float = 0.0) -> Optional[QnameFreqTable]:
        if not self._window:
            return None
        return QnameFreqTable.from_counts(
            self._counts, len(self._window), self.last_ts if now is None else now, min_freq
        )


class FqTextFilter(Filter):
    """FQ_t: drops queries whose name matches a rule"""

    id = FilterId.FQ_t
    title = 'frequent query (text match)'

    def __init__(self, rules: List[FqRule], params: FilterParams = None):
        super().__init__()
        self.params = params or FilterParams()
        self.rules = tuple(rules)
        self.matcher = FqMatcher(self.rules)

    @property
    def deployable(self) -> bool:
        """iptables string matching gets expensive past a handful of rules"""
        return 0 < len(self.rules) <= self.params.fq_rule_cap

    def matches(self, view) -> bool:
        return self.matcher.matches(view.qname)

    def describe(self) -> dict:
        return {'filter': str(self.id), 'rules': [r.to_dict() for r in self.rules]}


class FqSourceFilter(SourceSetFilter):
    """FQ_s: drops all traffic of the sources that mostly send rule-matching queries"""

    id = FilterId.FQ_s
    title = 'frequent query (sources)'

    def __init__(self, sources, rules: List[FqRule] = ()):
        super().__init__(sources)
        self.rules = tuple(rules)
