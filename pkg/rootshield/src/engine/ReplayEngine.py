"""
The replay loop. The peace trace primes AL, the collateral-damage sample and the learners; the
attack trace is then fed through in 1-second ticks:

1. every record of the tick gets its disposition from the pipeline snapshot taken at tick start
2. the detector steps on the tick's load
3. calm ticks feed the learners, attack ticks drive WR scoring and the selector
4. tables due for refresh are rebuilt (or re-issued while under attack)

Only the selector's deployment and the learned tables change between ticks, and only at the end of
a tick, so every record sees one consistent pipeline.
"""

import json
import logging
from collections import Counter
from typing import Iterable, List, Optional

from .EngineConfig import EngineConfig
from .Metrics import MetricsReport, compute_metrics
from .Timeline import Timeline, TimelineRow
from ..WorkerThreadInterface import WorkerThreadInterface
from ..detector.AttackDetector import AttackDetector, DetectorEvent, LoadSample
from ..exceptions import EmptyWindow, NoBaseline
from ..filters.AggressiveRecursive import AggressiveRecursiveFilter, ar_select
from ..filters.Estimation import PeaceSample, estimate
from ..filters.FrequentQuery import FqLearner, FqSourceFilter, FqTextFilter, fq_detect, fq_identify_sources
from ..filters.HopCount import HcLearner, HopCountFilter
from ..filters.TableStore import FilterStateBundle
from ..filters.UnknownRecursive import AllowListFilter, UrLearner
from ..filters.Verdict import FilterId
from ..filters.WildRecursive import RateTracker, WildRecursiveFilter, WrLearner
from ..selector.FilterSelector import FilterSelector, TickOutcome
from ..trace.TraceStream import TraceStream, iter_ticks, read_trace


logger = logging.getLogger(__name__)


class ReplayEngine:

    def __init__(self, config: EngineConfig):
        self.config = config
        self.params = config.params
        self.tick = config.tick
        self.enabled = config.enabled

        self.worker = WorkerThreadInterface(threaded=config.threaded_learning)

        # LEARNERS
        self.ur_learner = UrLearner(self.params)
        self.hc_learner = HcLearner(self.params)
        self.wr_learner = WrLearner(self.params)
        self.fq_learner = FqLearner(self.params)        # peace-time names (baseline)
        self.fq_current = FqLearner(self.params)        # all incoming names

        self.detector = AttackDetector(config.start_streak, config.end_streak, config.end_blocked_fraction)
        self.selector = FilterSelector(
            self.enabled, config.strict_ordering, config.reselect_after, config.retire_after,
            config.retire_fraction, self.tick,
        )

        self.tables = FilterStateBundle()
        self.tracker: Optional[RateTracker] = None
        self.peace: Optional[PeaceSample] = None
        self.primed_until = None
        self.next_urhc = None
        self.next_wr = None

        self.timeline = Timeline()
        self.deployments: List[dict] = []
        self.attack_started_at = None

        self._ur_filter = None
        self._hc_filter = None
        self._fq_filter = None

    # CONTEXT

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()

    def shutdown(self):
        self.worker.shutdown()

    @property
    def al(self) -> float:
        return self.detector.al

    # PRIMING

    def prime(self, peace: Iterable):
        """AL, the collateral-damage sample and the initial tables from the peace trace"""

        if not isinstance(peace, (TraceStream, list, tuple)):
            peace = list(peace)

        al = self.detector.prime_al(peace, self.params.f_acc)
        self.peace = PeaceSample.reservoir(peace, self.config.cd_sample_size, self.config.seed)

        last = None
        for t, recs in iter_ticks(peace, self.tick):
            views = [r.view() for r in recs]
            if len(views) / self.tick <= al:
                self._learn(views)
            self.fq_current.extend(views)
            last = t
        if last is None:
            raise NoBaseline('the peace trace holds no records')

        now = last + self.tick
        self.primed_until = now
        self._build_peace_tables(now)
        logger.info(
            'primed on peace trace: AL %.3f qps, %d allowed sources, %d TTL entries, %d rate models, '
            'cd sample %d', al, len(self.tables.allow_list), len(self.tables.ttl_table),
            len(self.tables.rate_table), len(self.peace),
        )

    def _learn(self, views):
        self.ur_learner.extend(views)
        self.hc_learner.extend(views)
        self.fq_learner.extend(views)
        self.wr_learner.extend(views)

    def _build_peace_tables(self, now: float):
        run = self.worker.run
        self.tables.allow_list = run(self.ur_learner.build, (now,))
        self.tables.ttl_table = run(self.hc_learner.build, (now,))
        self.tables.rate_table = run(self.wr_learner.build, (now,))
        self.tables.fq_baseline = run(self.fq_learner.build, (now,))
        self.tracker = RateTracker(self.tables.rate_table) if self.tracker is None \
            else self.tracker.rebind(self.tables.rate_table)
        self.next_urhc = now + min(self.params.u_ur, self.params.u_hc)
        self.next_wr = now + self.params.wr_refresh

    def _align(self, first_second: int):
        """
        Puts the primed state on the attack trace's clock, so the attack trace continues right where
        the peace trace ended.
        """
        if self.primed_until is None or first_second == self.primed_until:
            return
        delta = first_second - self.primed_until
        logger.info('attack trace starts at %d, peace trace ended at %d: shifting learned state by %d s',
                    first_second, self.primed_until, delta)
        for learner in (self.ur_learner, self.hc_learner, self.wr_learner, self.fq_learner, self.fq_current):
            learner.shift(delta)
        t = self.tables
        t.allow_list = t.allow_list.with_built_at(first_second)
        t.ttl_table = t.ttl_table.with_built_at(first_second)
        t.rate_table = t.rate_table.with_built_at(first_second)
        self.tracker = RateTracker(t.rate_table)
        self.next_urhc = first_second + min(self.params.u_ur, self.params.u_hc)
        self.next_wr = first_second + self.params.wr_refresh
        self.primed_until = first_second

    # REPLAY

    def run(self, attack: Iterable) -> MetricsReport:
        if self.peace is None:
            raise NoBaseline('prime() must run before the attack trace is replayed')

        first = True
        max_attack = self.config.max_attack_seconds
        for t, recs in iter_ticks(attack, self.tick):
            if first:
                self._align(t)
                first = False
            self._step(t, recs)
            if max_attack is not None and self.attack_started_at is not None \
                    and t + self.tick - self.attack_started_at >= max_attack:
                logger.info('stopping %d s after the attack start', max_attack)
                break

        return compute_metrics(self.timeline, self.deployments, self.config.mode, self.al, self.config.seed)

    def _step(self, t: int, recs):
        tick = self.tick
        now = t + tick
        views = [r.view() for r in recs]
        pipeline = self.selector.state.pipeline
        al = self.al

        # DISPOSITIONS
        drops = Counter()
        legit_in = legit_dropped = attack_in = attack_dropped = 0
        size = 0
        disposition = pipeline.disposition if pipeline else (lambda v: None)
        for rec, v in zip(recs, views):
            fid = disposition(v)
            size += v.size
            if rec.label == 'legit':
                legit_in += 1
                if fid is not None:
                    legit_dropped += 1
            elif rec.label == 'attack':
                attack_in += 1
                if fid is not None:
                    attack_dropped += 1
            if fid is not None:
                drops[fid] += 1

        n = len(views)
        blocked = sum(drops.values())
        cl = n / tick
        sample = LoadSample(t, cl, (n - blocked) / tick, blocked / tick, size / tick)

        self.fq_current.extend(views)
        if self.tracker is not None:
            self._track(t, views)

        # DETECTION
        event = self.detector.step(sample)
        events = []
        if event is not DetectorEvent.NONE:
            events.append(event.value)

        if event is DetectorEvent.ATTACK_START:
            self._on_attack_start(now)

        if self.detector.under_attack:
            if self.tables.rate_table is not None:
                self.tables.rate_table.score_all(self.tracker.trailing_counts(), now)
            self.selector.observe(TickOutcome(t, cl, sample.passed_qps, {f: c / tick for f, c in drops.items()}))
            events += self._select(t, now, views, cl, event)
        else:
            if event is DetectorEvent.ATTACK_END:
                events += self._record(self.selector.retire_all(now))
            elif cl <= al:
                self._learn(views)

        events += self._refresh_tables(now)

        self.timeline.append(TimelineRow(
            ts=t, incoming_qps=cl, passed_qps=sample.passed_qps, blocked_qps=sample.blocked_qps, al=al,
            attack_flag=self.detector.under_attack, pipeline=pipeline.label(), events=events,
            incoming_bps=sample.incoming_bps, records_in=n,
            legit_in=legit_in, legit_dropped=legit_dropped, attack_in=attack_in, attack_dropped=attack_dropped,
            drops={str(f): c for f, c in drops.items()},
        ))

    def _track(self, t: int, views):
        if self.tick == 1:
            self.tracker.add_second(t, views)
            return
        by_second = {}
        for v in views:
            by_second.setdefault(int(v.ts), []).append(v)
        for second in range(t, t + self.tick):
            self.tracker.add_second(second, by_second.get(second, []))

    def _on_attack_start(self, now: float):
        if self.attack_started_at is None:
            self.attack_started_at = now - self.tick
        baseline = self.fq_learner.build(now)
        if baseline is not None:
            self.tables.fq_baseline = baseline
        if self.tables.rate_table is not None:
            self.tables.rate_table.reset()
        self._fq_filter = None

    # SELECTION

    def _record(self, action) -> List[str]:
        if action is None or action.action == 'keep':
            return []
        self.deployments.append({'ts': action.ts, 'action': action.action, 'pipeline': action.pipeline})
        return [f'{action.action}:{action.pipeline}' if action.pipeline else action.action]

    def _select(self, t: int, now: float, views, cl: float, event) -> List[str]:
        selector = self.selector
        reason = None
        if event is DetectorEvent.ATTACK_START:
            reason = 'deploy'
        elif selector.state.empty:
            if cl <= self.al:
                return []
            reason = 'deploy'
        else:
            decision = selector.reevaluate(self.al)
            if decision.action == 'reselect':
                reason = 'reselect'
            elif decision.action == 'retire':
                action = selector.retire(decision.filter_id, now)
                if action is not None:
                    return self._record(action)
                reason = 'reselect'

        if reason is None:
            self._refresh_deployed(views, cl)
            return []

        evals = self._evaluate(views, cl)
        return self._record(selector.select(evals, cl, self.al, now, reason))

    def _fq_rules(self):
        baseline = self.tables.fq_baseline
        if baseline is None:
            return []
        current = self.fq_current.build(min_freq=self.params.f_fq)
        if current is None:
            return []
        return fq_detect(baseline, current, self.params)

    def _current_ur(self) -> Optional[AllowListFilter]:
        table = self.tables.allow_list
        if table is None:
            return None
        if self._ur_filter is None or self._ur_filter.table is not table:
            self._ur_filter = AllowListFilter(table)
        return self._ur_filter

    def _current_hc(self) -> Optional[HopCountFilter]:
        table = self.tables.ttl_table
        if table is None:
            return None
        if self._hc_filter is None or self._hc_filter.table is not table:
            self._hc_filter = HopCountFilter(table)
        return self._hc_filter

    def _current_fq(self, rules) -> FqTextFilter:
        if self._fq_filter is None or self._fq_filter.rules != tuple(rules):
            self._fq_filter = FqTextFilter(rules, self.params)
        return self._fq_filter

    def _evaluate(self, views, cl: float) -> list:
        """candidate evaluations of every enabled filter on the tick's traffic"""

        enabled = self.enabled
        evals = []

        def add(f):
            ev = estimate(f, views, self.peace, self.tick)
            evals.append(ev)
            return ev

        ur = hc = None
        if FilterId.UR in enabled and self.tables.allow_list is not None:
            ur = add(self._current_ur())
        if FilterId.HC in enabled and self.tables.ttl_table is not None:
            hc = add(self._current_hc())
        if FilterId.WR in enabled and self.tables.rate_table is not None:
            add(WildRecursiveFilter(self.tables.rate_table))

        if FilterId.FQ_t in enabled or FilterId.FQ_s in enabled:
            rules = self._fq_rules()
            if rules and FilterId.FQ_t in enabled:
                add(self._current_fq(rules))
            if rules and FilterId.FQ_s in enabled and len(rules) > self.params.fq_rule_cap \
                    and ur is not None and hc is not None:
                upstream = ~(ur.attack_mask | hc.attack_mask)
                passed = [v for v, keep in zip(views, upstream) if keep]
                sources = fq_identify_sources(rules, passed, self.params.fq_s_threshold)
                if sources:
                    add(FqSourceFilter(sources, rules))

        if FilterId.AR in enabled:
            blocklist = self._ar_blocklist(views, cl)
            if blocklist:
                add(AggressiveRecursiveFilter(blocklist))

        return evals

    def _ar_blocklist(self, views, cl: float) -> list:
        rates = {src: c / self.tick for src, c in Counter(v.src for v in views).items()}
        return ar_select(rates, cl, self.al)

    def _refresh_deployed(self, views, cl: float):
        """fresh rules for the deployed filters whose rules follow the traffic"""
        state = self.selector.state
        if state.pipeline.get(FilterId.WR) is not None:
            self.selector.refresh(WildRecursiveFilter(self.tables.rate_table))

        fq_s = state.pipeline.get(FilterId.FQ_s)
        if fq_s is not None:
            upstream = [g for g in state.pipeline if g.id in (FilterId.UR, FilterId.HC)]
            passed = [v for v in views if not any(g.drops(v) for g in upstream)]
            sources = fq_identify_sources(fq_s.rules, passed, self.params.fq_s_threshold)
            self.selector.refresh(FqSourceFilter(sources, fq_s.rules))

        if state.pipeline.get(FilterId.AR) is not None:
            self.selector.refresh(AggressiveRecursiveFilter(self._ar_blocklist(views, cl)))

    # REFRESH SCHEDULE

    def _refresh_tables(self, now: float) -> List[str]:
        events = []
        under_attack = self.detector.under_attack
        tables = self.tables

        if self.next_urhc is not None and now >= self.next_urhc:
            rebuilt = False
            if not under_attack:
                try:
                    tables.allow_list = self.worker.run(self.ur_learner.build, (now,))
                    tables.ttl_table = self.worker.run(self.hc_learner.build, (now,))
                    rebuilt = True
                except EmptyWindow as e:
                    logger.warning('UR/HC refresh at %s found no calm traffic (%s), extending the last tables', now, e)
            else:
                logger.warning('UR/HC refresh at %s falls into an attack, extending the last tables', now)
            if not rebuilt:
                tables.allow_list = tables.allow_list.with_built_at(now)
                tables.ttl_table = tables.ttl_table.with_built_at(now)
            else:
                logger.info('rebuilt UR/HC at %s: %d sources', now, len(tables.allow_list))
            self.next_urhc = now + min(self.params.u_ur, self.params.u_hc)
            self.selector.refresh(AllowListFilter(tables.allow_list))
            self.selector.refresh(HopCountFilter(tables.ttl_table))
            events.append(('refresh' if rebuilt else 'extend') + ':UR+HC')

        if self.next_wr is not None and now >= self.next_wr:
            rebuilt = False
            if not under_attack:
                try:
                    table = self.worker.run(self.wr_learner.build, (now,))
                    self.tracker = self.tracker.rebind(table)
                    tables.rate_table = table
                    rebuilt = True
                except EmptyWindow as e:
                    logger.warning('WR refresh at %s found no calm traffic (%s), extending the last table', now, e)
            else:
                logger.warning('WR refresh at %s falls into an attack, extending the last table', now)
            if not rebuilt:
                tables.rate_table = tables.rate_table.with_built_at(now)
            else:
                logger.info('rebuilt WR at %s: %d rate models', now, len(tables.rate_table))
            self.next_wr = now + self.params.wr_refresh
            self.selector.refresh(WildRecursiveFilter(tables.rate_table))
            events.append(('refresh' if rebuilt else 'extend') + ':WR')

        return events


def replay(config: EngineConfig) -> MetricsReport:
    """replays the configured peace and attack traces and returns the metrics"""

    config.validate()
    logger.info('replay config: %s', json.dumps(config.to_dict(), sort_keys=True))

    peace = read_trace(config.peace_path)
    attack = read_trace(config.attack_path)
    with ReplayEngine(config) as engine:
        engine.prime(peace)
        report = engine.run(attack)

    if config.timeline_path:
        report.timeline.to_csv(config.timeline_path)
    logger.info('%s: controlled %.1f%%, collateral %.2f%%, delay %s', config.mode,
                report.controlled_load_pct, report.collateral_damage_pct, report.selection_delay_s)
    return report
