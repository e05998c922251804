"""
Legitimate background traffic. A LegitPopulation fixes who the recursives are (address, query rate,
hop distance); gen_legit draws Poisson arrivals for them. Peace and attack traces built from the
same population share their sources, like consecutive captures at one server.
"""

import logging
from typing import List, Sequence

import numpy as np

from .Profiles import LegitProfile
from ..trace.QueryRecord import QueryRecord
from ..trace.TraceStream import TraceStream
from ..utils import int_to_ip


logger = logging.getLogger(__name__)


TLDS = ('com', 'net', 'org', 'arpa', 'de', 'uk', 'jp', 'cn', 'br', 'ru', 'fr', 'it', 'nl', 'au',
        'info', 'io', 'edu', 'gov', 'in', 'pl')
QTYPES = ('A', 'AAAA', 'NS', 'DS', 'MX', 'TXT', 'SOA', 'PTR')
_QTYPE_WEIGHTS = np.array([40, 25, 10, 8, 6, 5, 3, 3], dtype=float) / 100

# 1.0.0.0 up to the multicast range
_ADDR_LOW = 1 << 24
_ADDR_HIGH = 224 << 24

JUNK_LABEL_LEN = 10


def random_addresses(rng: np.random.Generator, n: int, exclude: np.ndarray = None) -> np.ndarray:
    """n distinct unicast addresses as integers, none of them in `exclude`"""
    out = np.empty(0, dtype=np.int64)
    while len(out) < n:
        draw = rng.integers(_ADDR_LOW, _ADDR_HIGH, size=2 * (n - len(out)) + 16, dtype=np.int64)
        if exclude is not None and len(exclude):
            draw = draw[~np.isin(draw, exclude)]
        merged = np.concatenate([out, draw])
        _, first = np.unique(merged, return_index=True)
        out = merged[np.sort(first)]
    return out[:n]


def random_labels(rng: np.random.Generator, n: int, length: int = JUNK_LABEL_LEN) -> List[str]:
    codes = rng.integers(ord('a'), ord('z') + 1, size=(n, length), dtype=np.uint8)
    return [b.decode('ascii') for b in codes.view(f'S{length}').ravel()]


def query_sizes(qnames: Sequence[str], rng: np.random.Generator) -> np.ndarray:
    # IP + UDP + DNS header, the question, and an OPT record on most queries
    lengths = np.fromiter((len(q) for q in qnames), dtype=np.int64, count=len(qnames))
    return 28 + 12 + lengths + 6 + 11 * (rng.random(len(qnames)) < 0.8)


class LegitPopulation:
    """the known recursives: addresses, rates (q/s) and their fixed TTL as seen at the server"""

    def __init__(self, profile: LegitProfile):
        self.profile = profile
        rng = np.random.default_rng([profile.seed, 0])
        n = profile.n_sources

        self.address_ints = random_addresses(rng, n)
        self.addresses = [int_to_ip(int(a)) for a in self.address_ints]

        log_rates = rng.uniform(np.log(profile.rate_min), np.log(profile.rate_max), size=n)
        # pin the extremes so the configured range is always covered
        log_rates[0] = np.log(profile.rate_min)
        log_rates[1] = np.log(profile.rate_max)
        self.rates = np.exp(rng.permutation(log_rates))

        self.ttls = rng.integers(profile.ttl_min, profile.ttl_max + 1, size=n)
        self.labels = random_labels(rng, 2000, 8)
        self.label_lengths = rng.integers(3, 9, size=len(self.labels))
        self.labels = [lab[:k] for lab, k in zip(self.labels, self.label_lengths)]
        # zipf-like popularity of the TLDs
        w = 1.0 / np.arange(1, len(TLDS) + 1)
        self.tld_weights = w / w.sum()

        self.index = {a: i for i, a in enumerate(self.addresses)}

    def __len__(self):
        return len(self.addresses)

    @property
    def aggregate_rate(self) -> float:
        return float(self.rates.sum())

    @property
    def known(self) -> frozenset:
        return frozenset(self.addresses)

    def ttl_of(self, addr: str) -> int:
        return int(self.ttls[self.index[addr]])

    def qnames(self, rng: np.random.Generator, n: int) -> List[str]:
        """the legit name mix: valid names under real TLDs, the rest single random labels"""
        valid = rng.random(n) < self.profile.valid_fraction
        n_valid = int(valid.sum())
        tlds = rng.choice(len(TLDS), size=n_valid, p=self.tld_weights)
        labels = rng.integers(0, len(self.labels), size=n_valid)
        junk = iter(random_labels(rng, n - n_valid))
        good = iter(f'{self.labels[l]}.{TLDS[t]}' for l, t in zip(labels, tlds))
        return [next(good) if v else next(junk) for v in valid]


def build_records(ts: np.ndarray, src_idx: np.ndarray, addresses: Sequence[str], ttls: np.ndarray,
                  qnames: Sequence[str], rng: np.random.Generator, label: str,
                  tcp_fraction: float = 0.0, qtypes: np.ndarray = None) -> List[QueryRecord]:
    """time-sorted QueryRecords from per-query arrays"""
    order = np.argsort(ts, kind='stable')
    ts = np.round(ts[order], 6)
    src_idx = src_idx[order]
    ttls = ttls[order]
    qnames = [qnames[i] for i in order]
    sizes = query_sizes(qnames, rng)
    tcp = rng.random(len(ts)) < tcp_fraction
    if qtypes is None:
        qtypes = rng.choice(len(QTYPES), size=len(ts), p=_QTYPE_WEIGHTS)
    else:
        qtypes = qtypes[order]
    return [
        QueryRecord(float(t), addresses[s], int(ttl), 'tcp' if p else 'udp', q, QTYPES[k], int(size), label)
        for t, s, ttl, p, q, k, size in zip(ts, src_idx, ttls, tcp, qnames, qtypes, sizes)
    ]


def gen_legit(profile: LegitProfile, population: LegitPopulation = None, stream: int = 1) -> TraceStream:
    """
    Poisson arrivals for every source of the population over [start, start + duration).
    `stream` separates independent draws (peace trace, attack-trace background) from one seed.
    """

    population = population or LegitPopulation(profile)
    rng = np.random.default_rng([profile.seed, stream])

    counts = rng.poisson(population.rates * profile.duration)
    src_idx = np.repeat(np.arange(len(population)), counts)
    ts = profile.start + rng.random(len(src_idx)) * profile.duration
    qnames = population.qnames(rng, len(src_idx))

    records = build_records(
        ts, src_idx, population.addresses, population.ttls[src_idx], qnames, rng, 'legit',
        profile.tcp_fraction,
    )
    logger.debug('generated %d legit queries from %d sources', len(records), len(population))
    return TraceStream.from_records(records, name='legit')
