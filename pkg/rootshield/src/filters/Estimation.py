"""
Filter emulation on samples. The attack sample is the traffic of the current tick; the peace sample
is a fixed reservoir sample of peace-time traffic, so the collateral damage of a filter is the share
of peace queries it would drop.
"""

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .Filter import Filter
from .Verdict import FilterId


@dataclass
class CandidateEvaluation:
    filter_id: FilterId
    drop_estimate: float            # fraction of the attack sample dropped
    drop_qps: float                 # projected qps removed
    cd_estimate: float              # fraction of the peace sample dropped
    deployable: bool = True
    effective: bool = False
    filter: Optional[Filter] = field(default=None, repr=False, compare=False)
    attack_mask: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    peace_mask: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            'filter': str(self.filter_id),
            'drop_estimate': round(self.drop_estimate, 6),
            'drop_qps': round(self.drop_qps, 3),
            'cd_estimate': round(self.cd_estimate, 6),
            'deployable': self.deployable,
            'effective': self.effective,
        }


class PeaceSample:
    """peace-time record views with a per-source index"""

    def __init__(self, records: Sequence):
        self.records = list(records)
        self.by_source: Dict[str, List[int]] = defaultdict(list)
        for i, rec in enumerate(self.records):
            self.by_source[rec.src].append(i)
        self.by_source = dict(self.by_source)

    def __len__(self):
        return len(self.records)

    @classmethod
    def reservoir(cls, records: Iterable, size: int, seed: int = 0, batch: int = 4096) -> 'PeaceSample':
        """uniform sample of at most `size` records, in trace order"""
        rng = np.random.default_rng(seed)
        kept = []
        pending = []
        i = 0
        for rec in records:
            if i < size:
                kept.append((i, rec))
            else:
                pending.append((i, rec))
                if len(pending) >= batch:
                    cls._replace(kept, pending, rng)
                    pending = []
            i += 1
        if pending:
            cls._replace(kept, pending, rng)
        kept.sort(key=lambda t: t[0])
        return cls(rec.view() if hasattr(rec, 'view') else rec for _, rec in kept)

    @staticmethod
    def _replace(kept, pending, rng):
        idx = np.array([i for i, _ in pending])
        draws = rng.integers(0, idx + 1)
        size = len(kept)
        for (i, rec), j in zip(pending, draws):
            if j < size:
                kept[j] = (i, rec)

    def source_mask(self, sources) -> np.ndarray:
        mask = np.zeros(len(self.records), dtype=bool)
        by_source = self.by_source
        if len(sources) < len(by_source):
            for src in sources:
                rows = by_source.get(src)
                if rows:
                    mask[rows] = True
        else:
            for src, rows in by_source.items():
                if src in sources:
                    mask[rows] = True
        return mask

    def fraction(self, mask: np.ndarray) -> float:
        if not len(self.records):
            return 0.0
        return float(mask.sum()) / len(self.records)


def estimate(filter_: Filter, attack_sample: Sequence, peace_sample: PeaceSample,
             tick: float = 1.0, attack_mask: np.ndarray = None) -> CandidateEvaluation:
    """drop share of the attack sample and collateral damage on the peace sample"""

    if attack_mask is None:
        attack_mask = filter_.drop_mask(attack_sample)
    dropped = int(attack_mask.sum())
    n = len(attack_sample)
    peace_mask = filter_.peace_mask(peace_sample)
    return CandidateEvaluation(
        filter_id=filter_.id,
        drop_estimate=dropped / n if n else 0.0,
        drop_qps=dropped / tick,
        cd_estimate=peace_sample.fraction(peace_mask),
        deployable=getattr(filter_, 'deployable', True),
        filter=filter_,
        attack_mask=attack_mask,
        peace_mask=peace_mask,
    )
