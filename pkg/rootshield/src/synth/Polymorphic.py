import heapq
import logging
from typing import Iterable, List, Sequence, Tuple

from .AttackGenerator import gen_attack, gen_flash_crowd
from .LegitGenerator import LegitPopulation, gen_legit
from .Profiles import AttackPlan, AttackSpec, LegitProfile
from ..trace.TraceStream import TraceStream


logger = logging.getLogger(__name__)


def merge_streams(streams: Sequence[Iterable], name: str = None) -> TraceStream:
    """time-sorted merge; records with equal timestamps keep the order of `streams`"""
    records = list(heapq.merge(*streams, key=lambda r: r.ts))
    return TraceStream.from_records(records, name=name)


def background_profile(profile: LegitProfile, start: float, end: float) -> LegitProfile:
    return LegitProfile.load({'start': start, 'duration': end - start}, base=profile)


def gen_polymorphic(specs: Sequence[AttackSpec], profile: LegitProfile, population: LegitPopulation = None,
                    lead: float = 60.0, tail: float = 60.0) -> TraceStream:
    """
    The attack phases over legit background that runs from `lead` seconds before the first phase
    to `tail` seconds after the last.
    """

    population = population or LegitPopulation(profile)
    start = min(s.start for s in specs) - lead
    end = max(s.end for s in specs) + tail
    background = gen_legit(background_profile(profile, max(start, 0.0), end), population, stream=2)
    phases = [gen_attack(s, population) for s in specs]
    logger.info('polymorphic trace: %s over [%s, %s)', '>'.join(s.kind for s in specs), start, end)
    return merge_streams([background] + phases, name='polymorphic')


def gen_scenario(plan: AttackPlan, profile: LegitProfile) -> Tuple[TraceStream, TraceStream, dict]:
    """
    A peace trace over the profile's window and an attack trace carrying the plan, both drawn from
    one population. Returns (peace, attack, provenance).
    """

    population = LegitPopulation(profile)
    peace = gen_legit(profile, population, stream=1)

    first, last = plan.span()
    bg_start = plan.background_start if plan.background_start is not None else max(profile.end, first - 60.0)
    bg_end = plan.background_end if plan.background_end is not None else last + 60.0
    background = gen_legit(background_profile(profile, bg_start, bg_end), population, stream=2)

    streams: List = [background]
    streams += [gen_attack(s, population) for s in plan.attacks]
    surging = set()
    for crowd in plan.flash_crowds:
        stream, sources = gen_flash_crowd(crowd, population)
        streams.append(stream)
        surging |= sources

    attack = merge_streams(streams, name='attack')
    provenance = {
        'profile': profile.to_dict(),
        'plan': plan.to_dict(),
        'background': [bg_start, bg_end],
        'aggregate_legit_qps': population.aggregate_rate,
        'surging_sources': sorted(surging),
    }
    return peace, attack, provenance
