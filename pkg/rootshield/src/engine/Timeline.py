"""
Per-tick records of a replay. The CSV holds the public columns; the label counters stay in memory
for the metrics.
"""

from dataclasses import dataclass, field
from typing import Dict, List

import pandas as pd


CSV_COLUMNS = ['ts', 'incoming_qps', 'passed_qps', 'blocked_qps', 'al', 'attack_flag', 'pipeline', 'events']


@dataclass
class TimelineRow:
    ts: int
    incoming_qps: float
    passed_qps: float
    blocked_qps: float
    al: float
    attack_flag: bool
    pipeline: str
    events: List[str] = field(default_factory=list)

    incoming_bps: float = 0.0
    records_in: int = 0
    legit_in: int = 0
    legit_dropped: int = 0
    attack_in: int = 0
    attack_dropped: int = 0
    drops: Dict[str, int] = field(default_factory=dict)

    @property
    def controlled(self) -> bool:
        return self.passed_qps <= self.al


class Timeline:
    def __init__(self):
        self.rows: List[TimelineRow] = []

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def append(self, row: TimelineRow):
        self.rows.append(row)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                [r.ts, r.incoming_qps, r.passed_qps, r.blocked_qps, r.al, int(r.attack_flag),
                 r.pipeline, ';'.join(r.events)]
                for r in self.rows
            ],
            columns=CSV_COLUMNS,
        )

    def to_csv(self, path: str = None):
        """writes the CSV to `path`, or returns it as text; floats keep their shortest exact repr"""
        return self.to_frame().to_csv(path, index=False, lineterminator='\n')
