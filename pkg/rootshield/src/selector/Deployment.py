"""
The deployed pipeline and its ordering constraints:

- HC only behind UR, FQ_s and WR only behind UR and HC (inside combinations)
- at most one of FQ_t and FQ_s
- FQ_s never alone, since it trusts source addresses

HC and WR may run alone unless `strict_ordering` is set. AR only ever runs alone.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

from ..exceptions import InvalidPipeline, RuleCapExceeded
from ..filters.Filter import Filter, Pipeline
from ..filters.Verdict import FilterId


FQ_t, UR, HC, WR, FQ_s, AR = FilterId.FQ_t, FilterId.UR, FilterId.HC, FilterId.WR, FilterId.FQ_s, FilterId.AR


COMBOS: Tuple[Tuple[FilterId, ...], ...] = (
    (UR, HC),
    (UR, HC, WR),
    (UR, HC, FQ_s),
    (UR, HC, FQ_s, WR),
    (FQ_t, UR),
    (FQ_t, UR, HC),
    (FQ_t, UR, HC, WR),
)

SINGLES = (FQ_t, UR, HC, WR, AR)
STRICT_SINGLES = (FQ_t, UR, AR)


def single_allowed(fid: FilterId, strict_ordering: bool = False) -> bool:
    return fid in (STRICT_SINGLES if strict_ordering else SINGLES)


def is_valid_pipeline(ids: Sequence[FilterId], strict_ordering: bool = False) -> bool:
    ids = tuple(ids)
    if not ids:
        return True
    if len(ids) == 1:
        return single_allowed(ids[0], strict_ordering)
    return ids in COMBOS


def validate_pipeline(ids: Sequence[FilterId], strict_ordering: bool = False):
    if not is_valid_pipeline(ids, strict_ordering):
        raise InvalidPipeline('pipeline ' + '+'.join(str(i) for i in ids) + ' violates the ordering constraints')


@dataclass
class DeploymentState:
    pipeline: Pipeline = field(default_factory=Pipeline)
    activated_at: Dict[FilterId, float] = field(default_factory=dict)
    strict_ordering: bool = False

    def __post_init__(self):
        validate_pipeline(self.pipeline.ids, self.strict_ordering)
        fq = self.pipeline.get(FQ_t)
        if fq is not None and not getattr(fq, 'deployable', True):
            raise RuleCapExceeded(f'{len(fq.rules)} FQ_t rules exceed the cap of {fq.params.fq_rule_cap}')

    @classmethod
    def of(cls, filters: Sequence[Filter], now: float, strict_ordering: bool = False,
           previous: 'DeploymentState' = None) -> 'DeploymentState':
        """a deployment of `filters`; filters already active in `previous` keep their activation time"""
        activated = {}
        for f in filters:
            if previous is not None and f.id in previous.activated_at:
                activated[f.id] = previous.activated_at[f.id]
            else:
                activated[f.id] = now
        return cls(Pipeline(filters), activated, strict_ordering)

    @property
    def ids(self) -> Tuple[FilterId, ...]:
        return self.pipeline.ids

    @property
    def empty(self) -> bool:
        return not self.pipeline

    def deployed_since(self) -> Optional[float]:
        return max(self.activated_at.values()) if self.activated_at else None

    def replace(self, f: Filter) -> 'DeploymentState':
        """the same pipeline with the filter of f's id swapped for f (rule refresh)"""
        filters = [f if g.id is f.id else g for g in self.pipeline]
        return DeploymentState(Pipeline(filters), dict(self.activated_at), self.strict_ordering)

    def without(self, fid: FilterId) -> 'DeploymentState':
        filters = [g for g in self.pipeline if g.id is not fid]
        activated = {k: v for k, v in self.activated_at.items() if k is not fid}
        return DeploymentState(Pipeline(filters), activated, self.strict_ordering)

    def label(self) -> str:
        return self.pipeline.label()

    def rules_snapshot(self) -> Dict[str, dict]:
        return {str(f.id): f.describe() for f in self.pipeline}
