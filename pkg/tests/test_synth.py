import pytest

from rootshield.src.exceptions import ConfigError
from rootshield.src.filters import hc_build, hc_verdict, ur_build
from rootshield.src.synth import AttackPlan, AttackSpec, FlashCrowdSpec, LegitPopulation, LegitProfile, \
    gen_attack, gen_flash_crowd, gen_legit, gen_polymorphic, gen_scenario, known_sources, polymorphic_specs


@pytest.fixture
def population(small_profile):
    return LegitPopulation(small_profile)


# LEGIT

def test_population_covers_rate_range(small_profile, population):
    assert len(population) == 300
    assert population.rates.min() == pytest.approx(small_profile.rate_min)
    assert population.rates.max() == pytest.approx(small_profile.rate_max)
    assert len(set(population.addresses)) == 300


def test_legit_is_deterministic(small_profile):
    a = list(gen_legit(small_profile))
    b = list(gen_legit(small_profile))
    assert a == b
    c = list(gen_legit(LegitProfile.load({'seed': 8}, base=small_profile)))
    assert a != c


def test_legit_trace_shape(small_profile, legit_records, population):
    ts = [r.ts for r in legit_records]
    assert ts == sorted(ts)
    assert small_profile.start <= ts[0] and ts[-1] < small_profile.end
    assert {r.label for r in legit_records} == {'legit'}
    assert {r.src for r in legit_records} <= population.known
    # every source keeps its hop distance
    assert all(r.ttl == population.ttl_of(r.src) for r in legit_records[:5000])


def test_legit_name_mix(small_profile, legit_records):
    valid = sum('.' in r.qname for r in legit_records) / len(legit_records)
    assert valid == pytest.approx(small_profile.valid_fraction, abs=0.02)


def test_legit_volume(small_profile, legit_records, population):
    expected = population.aggregate_rate * small_profile.duration
    assert len(legit_records) == pytest.approx(expected, rel=0.05)


# ATTACKS

def test_unknown_attack_kind():
    with pytest.raises(ConfigError):
        AttackSpec(kind='p6')
    with pytest.raises(ConfigError):
        AttackSpec.load({'kind': 'p1', 'volume': 3})


def test_attack_needs_population():
    with pytest.raises(ConfigError):
        gen_attack(AttackSpec('p2'), None)


def test_attack_volume(population):
    spec = AttackSpec('p2', start=0, end=30, multiplier=10)
    records = list(gen_attack(spec, population))
    assert len(records) == pytest.approx(10 * population.aggregate_rate * 30, rel=0.05)
    assert all(0 <= r.ts < 30 for r in records)
    assert {r.label for r in records} == {'attack'}


def test_p1_fixed_name_random_sources(population):
    records = list(gen_attack(AttackSpec('p1', start=0, end=10, qname='x.attack'), population))
    assert {r.qname for r in records} == {'x.attack'}
    sources = [r.src for r in records]
    assert len(set(sources)) == len(sources)
    assert not set(sources) & population.known


def test_p2_random_names(population):
    records = list(gen_attack(AttackSpec('p2', start=0, end=10), population))
    names = {r.qname for r in records}
    assert len(names) > 0.99 * len(records)
    assert not {r.src for r in records} & population.known


def test_p3_spoofs_known_sources(population):
    spec = AttackSpec('p3', start=0, end=10, known_fraction=0.05)
    records = list(gen_attack(spec, population))
    sources = {r.src for r in records}
    assert sources <= population.known
    assert len(sources) <= 15
    assert any(r.ttl != population.ttl_of(r.src) for r in records)


@pytest.mark.slow
def test_p4_passes_hop_count():
    # the default rate span, where a large share of the sources stays silent in peace time
    profile = LegitProfile(n_sources=100, duration=300, seed=7)
    population = LegitPopulation(profile)
    legit_records = list(gen_legit(profile, population))
    records = list(gen_attack(AttackSpec('p4', start=0, end=10, known_fraction=0.05), population))
    assert {r.src for r in records} <= population.known
    table = hc_build(legit_records)
    assert not any(hc_verdict(table, r).dropped for r in records)
    allow = ur_build(legit_records)
    assert all(r.src in allow for r in records)


def test_known_sources_are_active_in_peace_time():
    profile = LegitProfile(n_sources=200, duration=600, seed=3)
    population = LegitPopulation(profile)
    known = known_sources(population)
    assert 0 < len(known) < len(population)
    assert (population.rates[known] * profile.duration >= 10).all()
    spec = AttackSpec('p3', start=0, end=10, known_fraction=0.5)
    sources = {r.src for r in gen_attack(spec, population)}
    assert sources <= {population.addresses[i] for i in known}

    quiet = LegitPopulation(LegitProfile(n_sources=10, duration=1, rate_min=1e-3, rate_max=1e-2))
    assert list(known_sources(quiet)) == [int(quiet.rates.argmax())]


def test_p5_name_mix(population):
    records = list(gen_attack(AttackSpec('p5', start=0, end=20, qname='x.attack'), population))
    fixed = sum(r.qname == 'x.attack' for r in records) / len(records)
    assert fixed == pytest.approx(0.1, abs=0.02)


def test_attack_seed(population):
    a = list(gen_attack(AttackSpec('p2', start=0, end=5, seed=1), population))
    b = list(gen_attack(AttackSpec('p2', start=0, end=5, seed=1), population))
    c = list(gen_attack(AttackSpec('p2', start=0, end=5, seed=2), population))
    assert a == b
    assert a != c


def test_flash_crowd(population):
    stream, sources = gen_flash_crowd(FlashCrowdSpec(start=0, end=60, surge_fraction=0.1, surge_factor=20),
                                      population)
    records = list(stream)
    assert len(sources) == 30
    assert sources <= population.known
    assert {r.src for r in records} <= sources
    assert {r.label for r in records} == {'legit'}
    expected = sum(population.rates[population.index[s]] for s in sources) * 19 * 60
    assert len(records) == pytest.approx(expected, rel=0.1)


# POLYMORPHIC AND SCENARIOS

def test_polymorphic_phases(small_profile, population):
    specs = polymorphic_specs(start=100, phase_seconds=30, multiplier=5)
    assert [s.kind for s in specs] == ['p1', 'p2', 'p3', 'p4', 'p5']
    records = list(gen_polymorphic(specs, small_profile, population))
    ts = [r.ts for r in records]
    assert ts == sorted(ts)
    assert min(ts) >= 40 and max(ts) < 310

    attack = [r for r in records if r.label == 'attack']
    for spec in specs:
        inside = [r for r in attack if spec.start <= r.ts < spec.end]
        assert inside
    p1 = [r for r in attack if r.ts < 130]
    assert {r.qname for r in p1} == {specs[0].qname}
    assert any(r.label == 'legit' for r in records if r.ts < 100)


def test_scenario(small_profile):
    plan = AttackPlan.load({
        'attacks': [{'kind': 'p2', 'start': 1000, 'end': 1060}],
        'flash_crowds': [{'start': 1010, 'end': 1040, 'surge_fraction': 0.05}],
    })
    peace, attack, provenance = gen_scenario(plan, small_profile)

    peace_ts = [r.ts for r in peace]
    assert max(peace_ts) < small_profile.end
    assert provenance['background'] == [940.0, 1120.0]
    assert provenance['aggregate_legit_qps'] == pytest.approx(LegitPopulation(small_profile).aggregate_rate)
    assert len(provenance['surging_sources']) == 15

    records = list(attack)
    assert records[0].ts >= 940.0 and records[-1].ts < 1120.0
    labels = {r.label for r in records}
    assert labels == {'legit', 'attack'}


def test_attack_plan_loading():
    plan = AttackPlan.load([{'kind': 'p3', 'start': 5, 'end': 10}])
    assert plan.attacks[0].kind == 'p3'
    assert plan.flash_crowds == []
    assert plan.span() == (5, 10)
    with pytest.raises(ConfigError):
        AttackPlan.load({'attacks': [], 'extra': 1})
    with pytest.raises(ConfigError):
        AttackPlan.load({'attacks': []})
    with pytest.raises(ConfigError):
        AttackPlan.load('p1')
