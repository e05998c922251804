"""
Aggressive recursive filter (AR), kept for comparison runs: block the heaviest sources, highest
rate first, until the remaining load is acceptable. It cannot tell a bot from a busy recursive.
"""

from typing import List, Mapping

from .Filter import SourceSetFilter
from .Verdict import FilterId
from ..utils import ip_to_int


def _address_key(addr: str):
    try:
        return 0, ip_to_int(addr), addr
    except ValueError:
        return 1, 0, addr


def ar_select(rates: Mapping[str, float], cl: float, al: float) -> List[str]:
    """minimal prefix of the sources by descending rate whose removal brings the load to AL"""

    if cl <= al:
        return []
    order = sorted(rates.items(), key=lambda kv: (-kv[1], _address_key(kv[0])))
    load = cl
    blocked = []
    for src, rate in order:
        if load <= al:
            break
        blocked.append(src)
        load -= rate
    return blocked


class AggressiveRecursiveFilter(SourceSetFilter):
    id = FilterId.AR
    title = 'aggressive recursive'

    def __init__(self, blocklist):
        super().__init__(blocklist)
        self.blocklist = list(blocklist)
