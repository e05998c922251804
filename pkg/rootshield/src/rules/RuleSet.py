"""
Firewall-neutral snapshot of a deployment. Each deployed filter becomes one block:

UR          an allow-set of sources plus default drop
HC          per-source TTL sets, drop on mismatch
WR FQ_s AR  a blocked source set
FQ_t        blocked name suffixes and exact names

Sources are held as 32 bit integers in hash sets, so lookups cost the same for a handful of
entries as for millions.
"""

from typing import Dict, FrozenSet, Iterable, Iterator, List, NamedTuple, Sequence, Union

from ..exceptions import RuleCapExceeded
from ..filters.FilterParams import FilterParams
from ..filters.Verdict import Action, FilterId, Verdict
from ..selector.Deployment import DeploymentState, validate_pipeline
from ..utils import int_to_ip, ip_to_int


class SourceSet:
    """hash set of IPv4 addresses stored as integers"""

    def __init__(self, ints: Iterable[int] = ()):
        self.ints = frozenset(ints)

    @classmethod
    def of(cls, addresses: Iterable[str]) -> 'SourceSet':
        return cls(ip_to_int(a) for a in addresses)

    def __contains__(self, addr: Union[str, int]) -> bool:
        if isinstance(addr, str):
            addr = ip_to_int(addr)
        return addr in self.ints

    def __len__(self):
        return len(self.ints)

    def __eq__(self, other):
        return isinstance(other, SourceSet) and self.ints == other.ints

    def __hash__(self):
        return hash(self.ints)

    def sorted_ints(self) -> List[int]:
        return sorted(self.ints)

    def addresses(self) -> List[str]:
        """numerically sorted dotted quads"""
        return [int_to_ip(i) for i in self.sorted_ints()]


class Rule(NamedTuple):
    filter_id: FilterId
    kind: str           # ALLOW_SRC | BLOCK_SRC | BLOCK_SRC_TTL | BLOCK_QNAME_SUFFIX | BLOCK_QNAME_EXACT
    value: str
    ttls: FrozenSet[int] = frozenset()


class RuleBlock:
    # STATIC ATTRIBUTES
    filter_id: FilterId = None

    def matches(self, view) -> bool:
        raise NotImplementedError

    def rules(self) -> Iterator[Rule]:
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def _key(self):
        raise NotImplementedError


class AllowSetBlock(RuleBlock):
    filter_id = FilterId.UR

    def __init__(self, sources: SourceSet):
        self.sources = sources

    def matches(self, view) -> bool:
        return view.src not in self.sources

    def rules(self) -> Iterator[Rule]:
        for addr in self.sources.addresses():
            yield Rule(self.filter_id, 'ALLOW_SRC', addr)

    def _key(self):
        return self.sources


class TtlMismatchBlock(RuleBlock):
    filter_id = FilterId.HC

    def __init__(self, entries: Dict[int, FrozenSet[int]]):
        self.entries = {k: frozenset(v) for k, v in entries.items()}

    @classmethod
    def of(cls, entries: Dict[str, Iterable[int]]) -> 'TtlMismatchBlock':
        return cls({ip_to_int(a): frozenset(t) for a, t in entries.items()})

    def matches(self, view) -> bool:
        ttls = self.entries.get(ip_to_int(view.src))
        return ttls is not None and view.ttl not in ttls

    def rules(self) -> Iterator[Rule]:
        for i in sorted(self.entries):
            yield Rule(self.filter_id, 'BLOCK_SRC_TTL', int_to_ip(i), self.entries[i])

    def _key(self):
        return frozenset(self.entries.items())


class SourceBlock(RuleBlock):
    """WR, FQ_s and AR all deploy as a plain blocklist"""

    def __init__(self, filter_id: FilterId, sources: SourceSet):
        if filter_id not in (FilterId.WR, FilterId.FQ_s, FilterId.AR):
            raise ValueError(f'{filter_id} does not deploy as a source blocklist')
        self.filter_id = filter_id
        self.sources = sources

    def matches(self, view) -> bool:
        return view.src in self.sources

    def rules(self) -> Iterator[Rule]:
        for addr in self.sources.addresses():
            yield Rule(self.filter_id, 'BLOCK_SRC', addr)

    def _key(self):
        return self.filter_id, self.sources


class QnameBlock(RuleBlock):
    filter_id = FilterId.FQ_t

    def __init__(self, suffixes: Iterable[str] = (), exact: Iterable[str] = ()):
        self.suffixes = frozenset(suffixes)
        self.exact = frozenset(exact)

    @classmethod
    def of(cls, fq_rules) -> 'QnameBlock':
        """from FqRules: tld and subdomain rules match as suffixes, full-name rules exactly"""
        return cls((r.value for r in fq_rules if r.kind != 'full'),
                   (r.value for r in fq_rules if r.kind == 'full'))

    def __len__(self):
        return len(self.suffixes) + len(self.exact)

    def matches(self, view) -> bool:
        name = view.qname
        if name in self.exact or name in self.suffixes:
            return True
        i = name.find('.')
        while i >= 0:
            if name[i + 1:] in self.suffixes:
                return True
            i = name.find('.', i + 1)
        return False

    def rules(self) -> Iterator[Rule]:
        for name in sorted(self.exact):
            yield Rule(self.filter_id, 'BLOCK_QNAME_EXACT', name)
        for seg in sorted(self.suffixes):
            yield Rule(self.filter_id, 'BLOCK_QNAME_SUFFIX', seg)

    def _key(self):
        return self.suffixes, self.exact


def block_of(f) -> RuleBlock:
    """the rule block of a deployed filter snapshot"""
    if f.id is FilterId.UR:
        return AllowSetBlock(SourceSet.of(f.table.sources))
    if f.id is FilterId.HC:
        return TtlMismatchBlock.of(f.table.entries)
    if f.id is FilterId.FQ_t:
        return QnameBlock.of(f.rules)
    return SourceBlock(f.id, SourceSet.of(f.sources))


class RuleSet:
    """rule blocks in pipeline order; the first block that matches a query drops it"""

    def __init__(self, blocks: Sequence[RuleBlock] = (), fq_rule_cap: int = FilterParams.fq_rule_cap):
        self.blocks = tuple(blocks)
        self.fq_rule_cap = fq_rule_cap
        for b in self.blocks:
            if isinstance(b, QnameBlock) and len(b) > fq_rule_cap:
                raise RuleCapExceeded(f'{len(b)} FQ_t rules exceed the cap of {fq_rule_cap}')

    @classmethod
    def from_filters(cls, filters, params: FilterParams = None, strict_ordering: bool = False) -> 'RuleSet':
        params = params or FilterParams()
        filters = list(filters)
        validate_pipeline([f.id for f in filters], strict_ordering)
        return cls([block_of(f) for f in filters], params.fq_rule_cap)

    @classmethod
    def from_deployment(cls, state: DeploymentState, params: FilterParams = None) -> 'RuleSet':
        return cls.from_filters(state.pipeline, params, state.strict_ordering)

    @property
    def ids(self):
        return tuple(b.filter_id for b in self.blocks)

    def __len__(self):
        return sum(1 for _ in self.rules())

    def __iter__(self):
        return iter(self.blocks)

    def __eq__(self, other):
        return isinstance(other, RuleSet) and self.blocks == other.blocks

    def rules(self) -> Iterator[Rule]:
        for b in self.blocks:
            yield from b.rules()

    def verdict(self, view) -> Verdict:
        for b in self.blocks:
            if b.matches(view):
                return Verdict(Action.DROP, b.filter_id)
        return Verdict(Action.PASS)
