"""
Replay metrics:

controlled load
    share of attack seconds whose passed load stayed at or below AL. Attack seconds are the seconds
    carrying attack-labeled queries; a trace without attack labels falls back to the seconds the
    detector flagged
collateral damage
    share of legitimate queries dropped while the defense was active
selection delay
    seconds from the first attack second to the first controlled one
ULQ
    share of legitimate queries an undefended server would have left unanswered, with the queries
    above AL capacity dropped at random
"""

import dataclasses
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .Timeline import Timeline, TimelineRow
from ..utils import dump_json, load_json


logger = logging.getLogger(__name__)


@dataclass
class MetricsReport:
    mode: str
    al: float
    controlled_load_pct: float
    collateral_damage_pct: float
    selection_delay_s: Optional[float]
    ulq_pct: float
    attack_seconds: int
    records: int
    passed: int
    dropped: int
    drops_by_filter: Dict[str, int]
    legit_records: int
    legit_dropped: int
    attack_records: int
    attack_dropped: int
    uncontrolled_runs: List[int] = field(default_factory=list)
    deployments: List[dict] = field(default_factory=list)
    trajectory: List[str] = field(default_factory=list)
    timeline: Optional[Timeline] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != 'timeline'}
        d['drops_by_filter'] = dict(sorted(self.drops_by_filter.items()))
        return d

    def save(self, path: str):
        dump_json(self.to_dict(), path)

    @classmethod
    def from_dict(cls, d: dict) -> 'MetricsReport':
        names = {f.name for f in dataclasses.fields(cls)} - {'timeline'}
        missing = names - d.keys()
        if missing:
            raise ValueError(f'report lacks {sorted(missing)}')
        return cls(**{k: d[k] for k in names})

    @classmethod
    def load(cls, path: str) -> 'MetricsReport':
        return cls.from_dict(load_json(path))

    def summary_row(self) -> dict:
        return {
            'mode': self.mode,
            'con': round(self.controlled_load_pct, 1),
            'cd': round(self.collateral_damage_pct, 2),
            'delay': self.selection_delay_s,
            'ulq': round(self.ulq_pct, 2),
            'trajectory': '>'.join(self.trajectory),
        }


def ulq_baseline(rows: Sequence[TimelineRow], seed: int = 0) -> float:
    """percent of legit queries an undefended server would have left unanswered over `rows`"""
    rng = np.random.default_rng(seed)
    legit = 0
    lost = 0
    for r in rows:
        legit += r.legit_in
        if r.incoming_qps > r.al and r.legit_in:
            keep = r.al / r.incoming_qps
            lost += int(rng.binomial(r.legit_in, 1.0 - keep))
    return 100.0 * lost / legit if legit else 0.0


def labeled_attack_rows(rows: Sequence[TimelineRow]) -> List[TimelineRow]:
    """the rows carrying attack-labeled queries, or the detector-flagged rows of an unlabeled trace"""
    if any(r.attack_in for r in rows):
        return [r for r in rows if r.attack_in > 0]
    return [r for r in rows if r.attack_flag]


def _runs(flags: Sequence[bool]) -> List[int]:
    runs = []
    n = 0
    for f in flags:
        if f:
            n += 1
        elif n:
            runs.append(n)
            n = 0
    if n:
        runs.append(n)
    return runs


def compute_metrics(timeline: Timeline, deployments: List[dict] = (), mode: str = '', al: float = None,
                    seed: int = 0) -> MetricsReport:
    """
    `timeline` rows carry the per-tick dispositions and ground-truth counts; `deployments` are the
    selector's actions in order.
    """

    rows = list(timeline)
    if al is None:
        al = rows[0].al if rows else 0.0

    attack_rows = labeled_attack_rows(rows)
    controlled = sum(1 for r in attack_rows if r.controlled)
    con = 100.0 * controlled / len(attack_rows) if attack_rows else 100.0

    # the defense is active while under attack and while a pipeline is still deployed
    defended = [r for r in rows if r.attack_flag or r.pipeline]
    legit_def = sum(r.legit_in for r in defended)
    legit_drop_def = sum(r.legit_dropped for r in defended)
    cd = 100.0 * legit_drop_def / legit_def if legit_def else 0.0

    delay = None
    start = next((r.ts for r in attack_rows), None)
    if start is not None:
        first = next((r.ts for r in attack_rows if r.controlled), None)
        if first is not None:
            delay = float(first - start)

    drops = Counter()
    for r in rows:
        drops.update(r.drops)

    trajectory = []
    for d in deployments:
        if d['action'] in ('deploy', 'reselect') and d['pipeline']:
            tail = d['pipeline'].split('+')[-1]
            if not trajectory or trajectory[-1] != tail:
                trajectory.append(tail)

    total = sum(r.records_in for r in rows)
    dropped = sum(drops.values())
    return MetricsReport(
        mode=mode,
        al=al,
        controlled_load_pct=con,
        collateral_damage_pct=cd,
        selection_delay_s=delay,
        ulq_pct=ulq_baseline(attack_rows, seed),
        attack_seconds=len(attack_rows),
        records=total,
        passed=total - dropped,
        dropped=dropped,
        drops_by_filter=dict(drops),
        legit_records=sum(r.legit_in for r in rows),
        legit_dropped=sum(r.legit_dropped for r in rows),
        attack_records=sum(r.attack_in for r in rows),
        attack_dropped=sum(r.attack_dropped for r in rows),
        uncontrolled_runs=_runs([not r.controlled for r in attack_rows]),
        deployments=list(deployments),
        trajectory=trajectory,
        timeline=timeline,
    )


def compare_frame(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    """one row per report, in the column layout of a con/cd comparison table"""
    return pd.DataFrame([r.summary_row() for r in reports],
                        columns=['mode', 'con', 'cd', 'delay', 'ulq', 'trajectory'])


def format_reports(reports: Sequence[MetricsReport]) -> str:
    return compare_frame(reports).to_string(index=False)
