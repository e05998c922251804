"""
Filter selection. Every selection tick the candidate filters are emulated on the current traffic
(drop) and on the peace sample (collateral damage). A single filter is deployed when one brings the
load down to AL; the one with the least collateral damage wins. Otherwise filters are chained along
the pipeline grammar, each filter seeing only what its upstream passed, and the cheapest
combination that reaches AL is deployed.
"""

import logging
from collections import deque
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from .Deployment import COMBOS, DeploymentState, single_allowed, is_valid_pipeline
from ..exceptions import InvalidPipeline, NoSingle
from ..filters.Estimation import CandidateEvaluation
from ..filters.Filter import sequential_drops
from ..filters.Verdict import FILTER_ORDER, FilterId


logger = logging.getLogger(__name__)


# a filter is effective when it removes at least this share of the excess load
EFFECTIVE_FRACTION = 0.05

_ORDER = {fid: i for i, fid in enumerate(FILTER_ORDER)}


class TickOutcome(NamedTuple):
    """what the deployed pipeline did during one tick"""
    ts: float
    incoming: float
    passed: float
    drops: Dict[FilterId, float]


class Reevaluation(NamedTuple):
    action: str                         # keep | reselect | retire
    filter_id: Optional[FilterId] = None


class SelectorAction(NamedTuple):
    ts: float
    action: str                         # deploy | keep | reselect | retire
    pipeline: str
    detail: Optional[dict] = None


def candidates(evals: Sequence[CandidateEvaluation], cl: float, al: float) -> List[CandidateEvaluation]:
    """filters with a positive projected drop, marked effective when they remove 5% of the excess"""
    excess = max(cl - al, 0.0)
    out = []
    for ev in evals:
        if ev.drop_qps <= 0:
            continue
        ev.effective = ev.drop_qps >= EFFECTIVE_FRACTION * excess
        out.append(ev)
    return out


def deploy_single(cands: Sequence[CandidateEvaluation], cl: float, al: float, now: float = 0.0,
                  strict_ordering: bool = False) -> DeploymentState:
    """the feasible single filter with the least collateral damage; raises NoSingle if none"""

    feasible = [
        c for c in cands
        if c.deployable and single_allowed(c.filter_id, strict_ordering) and cl - c.drop_qps <= al
    ]
    if not feasible:
        raise NoSingle(f'no single filter brings {cl:.1f} qps down to {al:.1f}')
    best = min(feasible, key=lambda c: (c.cd_estimate, -c.drop_qps, _ORDER[c.filter_id]))
    return DeploymentState.of([best.filter], now, strict_ordering)


def _union_fraction(masks: List[np.ndarray]) -> float:
    if not masks or masks[0] is None or not len(masks[0]):
        return 0.0
    union = np.logical_or.reduce(masks)
    return float(union.sum()) / len(union)


class _Combo(NamedTuple):
    ids: tuple
    cd: float
    dropped: int
    projected: float
    rank: int


def evaluate_combos(cands: Sequence[CandidateEvaluation], cl: float, al: float,
                    tick: float = 1.0) -> List[_Combo]:
    """every grammar combination whose filters are all present and all effective in sequence"""

    by_id = {c.filter_id: c for c in cands}
    fq_t = by_id.get(FilterId.FQ_t)
    fq_t_ok = fq_t is not None and fq_t.deployable
    excess = max(cl - al, 0.0)

    out = []
    for rank, combo in enumerate(COMBOS):
        if any(fid not in by_id for fid in combo):
            continue
        if FilterId.FQ_t in combo and not fq_t_ok:
            continue
        # FQ_s only stands in for an FQ_t with too many rules
        if FilterId.FQ_s in combo and (fq_t is None or fq_t_ok):
            continue

        evs = [by_id[fid] for fid in combo]
        marginals = sequential_drops([e.filter for e in evs], [e.attack_mask for e in evs])
        marginal_qps = [m.sum() / tick for m in marginals]
        if any(q <= 0 or q < EFFECTIVE_FRACTION * excess for q in marginal_qps):
            continue

        dropped = int(sum(m.sum() for m in marginals))
        out.append(_Combo(
            combo,
            _union_fraction([e.peace_mask for e in evs]),
            dropped,
            cl - dropped / tick,
            rank,
        ))
    return out


def deploy_combo(cands: Sequence[CandidateEvaluation], cl: float, al: float, now: float = 0.0,
                 strict_ordering: bool = False, tick: float = 1.0) -> DeploymentState:
    """
    The cheapest valid combination that reaches AL, else the one dropping most. Without any valid
    combination the single candidate dropping most is deployed, or nothing.
    """

    by_id = {c.filter_id: c for c in cands}
    combos = evaluate_combos(cands, cl, al, tick)

    chosen = None
    for c in sorted(combos, key=lambda c: (c.cd, -c.dropped, c.rank)):
        if c.projected <= al:
            chosen = c
            break
    if chosen is None and combos:
        chosen = min(combos, key=lambda c: (-c.dropped, c.cd, c.rank))

    if chosen is not None:
        return DeploymentState.of([by_id[fid].filter for fid in chosen.ids], now, strict_ordering)

    singles = [c for c in cands if c.deployable and single_allowed(c.filter_id, strict_ordering)]
    if not singles:
        return DeploymentState(strict_ordering=strict_ordering)
    best = min(singles, key=lambda c: (-c.drop_qps, c.cd_estimate, _ORDER[c.filter_id]))
    return DeploymentState.of([best.filter], now, strict_ordering)


def reevaluate(state: DeploymentState, history: Sequence[TickOutcome], al: float,
               reselect_after: int = 3, retire_after: int = 30,
               retire_fraction: float = 0.001) -> Reevaluation:
    """
    reselect once the passed load stayed above AL for `reselect_after` ticks of the current
    deployment; retire a filter that dropped less than `retire_fraction` of the incoming load for
    `retire_after` ticks
    """

    if state.empty:
        return Reevaluation('reselect')

    since = state.deployed_since()
    settled = [h for h in history if h.ts >= since]
    recent = settled[-reselect_after:]
    if len(recent) == reselect_after and all(h.passed > al for h in recent):
        return Reevaluation('reselect')

    for fid in state.ids:
        active = [h for h in history if h.ts >= state.activated_at[fid]][-retire_after:]
        if len(active) == retire_after and \
                all(h.drops.get(fid, 0.0) < retire_fraction * h.incoming for h in active):
            return Reevaluation('retire', fid)

    return Reevaluation('keep')


class FilterSelector:
    """
    Owns the deployment during replay: selects when an attack starts or the deployment stops
    working, retires idle filters, and retires everything when the attack ends.
    """

    def __init__(self, enabled: Sequence[FilterId], strict_ordering: bool = False,
                 reselect_after: int = 3, retire_after: int = 30, retire_fraction: float = 0.001,
                 tick: float = 1.0):
        self.enabled = tuple(enabled)
        self.strict_ordering = strict_ordering
        self.reselect_after = reselect_after
        self.retire_after = retire_after
        self.retire_fraction = retire_fraction
        self.tick = tick

        self.state = DeploymentState(strict_ordering=strict_ordering)
        self.history = deque(maxlen=max(reselect_after, retire_after))

    def observe(self, outcome: TickOutcome):
        self.history.append(outcome)

    def select(self, evals: Sequence[CandidateEvaluation], cl: float, al: float, now: float,
               reason: str = 'deploy') -> SelectorAction:
        cands = candidates([e for e in evals if e.filter_id in self.enabled], cl, al)
        try:
            new = deploy_single(cands, cl, al, now, self.strict_ordering)
            how = 'single'
        except NoSingle:
            new = deploy_combo(cands, cl, al, now, self.strict_ordering, self.tick)
            how = 'combo' if len(new.ids) > 1 else 'fallback'

        # filters that stay in place keep their activation time
        new = DeploymentState.of(list(new.pipeline), now, self.strict_ordering, previous=self.state) \
            if not new.empty else new
        changed = new.ids != self.state.ids
        self.state = new
        action = SelectorAction(now, reason if changed else 'keep', new.label(), {
            'how': how,
            'cl': round(cl, 3),
            'candidates': [c.to_dict() for c in sorted(cands, key=lambda c: _ORDER[c.filter_id])],
        })
        if changed:
            logger.info('%s at %s: [%s] (%s)', reason, now, new.label(), how)
            logger.debug('deployed filters: %s', new.rules_snapshot())
        return action

    def reevaluate(self, al: float) -> Reevaluation:
        return reevaluate(self.state, self.history, al, self.reselect_after, self.retire_after,
                          self.retire_fraction)

    def retire(self, fid: FilterId, now: float) -> Optional[SelectorAction]:
        """drops one filter; returns None when the remaining pipeline would be invalid"""
        if not is_valid_pipeline(tuple(i for i in self.state.ids if i is not fid), self.strict_ordering):
            return None
        try:
            self.state = self.state.without(fid)
        except InvalidPipeline:
            return None
        logger.info('retired %s at %s, pipeline [%s]', fid, now, self.state.label())
        return SelectorAction(now, 'retire', self.state.label(), {'filter': str(fid)})

    def retire_all(self, now: float) -> SelectorAction:
        self.state = DeploymentState(strict_ordering=self.strict_ordering)
        self.history.clear()
        logger.info('retired all filters at %s', now)
        return SelectorAction(now, 'retire', '', {'filter': 'all'})

    def refresh(self, f) -> None:
        """swaps in fresh rules for a deployed filter without changing the composition"""
        if self.state.pipeline.get(f.id) is not None:
            self.state = self.state.replace(f)
