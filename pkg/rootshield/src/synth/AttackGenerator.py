"""
The five adversary strategies:

p1  random spoofed sources, one fixed name
p2  random spoofed sources, random names
p3  sources spoofed from recursives active in peace time, random TTL per packet, random names
p4  like p3 but with each spoofed source's real TTL
p5  like p1 with 90% random and 10% fixed names

Attack volume is `multiplier` times the legit aggregate rate, spread uniformly over the phase.
"""

import logging
from typing import Set, Tuple

import numpy as np

from .LegitGenerator import LegitPopulation, build_records, random_addresses, random_labels
from .Profiles import ATTACK_KINDS, AttackSpec, FlashCrowdSpec
from ..exceptions import ConfigError
from ..trace.TraceStream import TraceStream
from ..utils import int_to_ip


logger = logging.getLogger(__name__)

# expected peace-window queries that make a recursive reliably known
KNOWN_MIN_QUERIES = 10


def attack_volume(spec: AttackSpec, population: LegitPopulation, rng: np.random.Generator) -> int:
    expected = spec.multiplier * population.aggregate_rate * spec.duration
    return int(rng.poisson(expected))


def known_sources(population: LegitPopulation) -> np.ndarray:
    """
    Indices of the recursives a spoofer can count on being known: the ones expected to send at
    least KNOWN_MIN_QUERIES queries over the peace window. A population too quiet for that falls
    back to its busiest source.
    """
    expected = population.rates * population.profile.duration
    known = np.flatnonzero(expected >= KNOWN_MIN_QUERIES)
    if not len(known):
        known = np.array([int(np.argmax(population.rates))])
    return known


def gen_attack(spec: AttackSpec, population: LegitPopulation) -> TraceStream:
    """labeled attack queries of one phase; `population` is the legit context being attacked"""

    if population is None or not len(population):
        raise ConfigError(f'{spec.kind} attack needs the legit population it is sized against')

    rng = np.random.default_rng([spec.seed, 100 + ATTACK_KINDS.index(spec.kind)])
    n = attack_volume(spec, population, rng)
    ts = spec.start + rng.random(n) * spec.duration

    if not spec.needs_known_sources:
        # a fresh random address per query: nearly every source is new
        ints = random_addresses(rng, n, exclude=population.address_ints)
        ints = rng.permutation(ints)
        addresses = [int_to_ip(int(a)) for a in ints]
        src_idx = np.arange(n)
        ttls = rng.integers(32, 251, size=n)
    else:
        known = known_sources(population)
        k = max(1, int(round(spec.known_fraction * len(known))))
        chosen = np.sort(rng.choice(known, size=k, replace=False))
        addresses = [population.addresses[i] for i in chosen]
        src_idx = rng.integers(0, k, size=n)
        if spec.kind == 'p3':
            ttls = rng.integers(0, 256, size=n)
        else:
            ttls = population.ttls[chosen][src_idx]

    if spec.kind == 'p1':
        qnames = [spec.qname] * n
    elif spec.kind == 'p5':
        fixed = rng.random(n) < spec.fixed_fraction
        junk = iter(random_labels(rng, int((~fixed).sum())))
        qnames = [spec.qname if f else next(junk) for f in fixed]
    else:
        qnames = random_labels(rng, n)

    records = build_records(ts, src_idx, addresses, ttls, qnames, rng, 'attack',
                            qtypes=np.zeros(n, dtype=np.int64))
    logger.debug('generated %d %s attack queries over [%s, %s)', len(records), spec.kind, spec.start, spec.end)
    return TraceStream.from_records(records, name=spec.kind)


def gen_flash_crowd(spec: FlashCrowdSpec, population: LegitPopulation) -> Tuple[TraceStream, Set[str]]:
    """
    The extra legit queries of a surge of known sources, and the surging sources. The background
    traffic of those sources continues separately.
    """

    rng = np.random.default_rng([spec.seed, 200])
    k = max(1, int(round(spec.surge_fraction * len(population))))
    chosen = np.sort(rng.choice(len(population), size=k, replace=False))

    duration = spec.end - spec.start
    counts = rng.poisson(population.rates[chosen] * (spec.surge_factor - 1.0) * duration)
    local = np.repeat(np.arange(k), counts)
    ts = spec.start + rng.random(len(local)) * duration
    addresses = [population.addresses[i] for i in chosen]
    qnames = population.qnames(rng, len(local))

    records = build_records(ts, local, addresses, population.ttls[chosen][local], qnames, rng, 'legit',
                            population.profile.tcp_fraction)
    logger.debug('generated %d flash crowd queries from %d sources', len(records), k)
    return TraceStream.from_records(records, name='flash-crowd'), set(addresses)
