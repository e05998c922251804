import pytest

from rootshield.src.filters.FilterParams import FilterParams
from rootshield.src.synth.Profiles import LegitProfile
from rootshield.src.trace.QueryRecord import QueryRecord


def make_record(ts, src='192.0.2.1', ttl=64, qname='example.com', label='legit', proto='udp',
                qtype='A', size=64) -> QueryRecord:
    return QueryRecord(float(ts), src, ttl, proto, qname, qtype, size, label)


@pytest.fixture
def rec():
    """factory for single query records"""
    return make_record


@pytest.fixture
def small_params():
    # ten-minute learning periods instead of two hours
    return FilterParams(l_fq=2000, l_ur=600, l_hc=600, u_ur=600, u_hc=600, l_wr=600, wr_refresh=300)


@pytest.fixture
def small_profile():
    return LegitProfile(n_sources=300, duration=900, rate_min=1e-2, rate_max=2.0, seed=7)


@pytest.fixture
def legit_records(small_profile):
    from rootshield.src.synth.LegitGenerator import gen_legit
    return list(gen_legit(small_profile))
