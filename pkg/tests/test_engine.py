import io

import pandas as pd
import pytest

from rootshield.src.engine import EngineConfig, MetricsReport, ReplayEngine, Timeline, TimelineRow, \
    compute_metrics, parse_mode, CSV_COLUMNS
from rootshield.src.exceptions import ConfigError, NoBaseline
from rootshield.src.synth import AttackPlan, LegitPopulation, LegitProfile, gen_legit, gen_scenario, polymorphic_specs
from rootshield.src.synth.Polymorphic import background_profile


def scenario(profile, **plan):
    peace, attack, provenance = gen_scenario(AttackPlan.load(plan), profile)
    return list(peace), list(attack), provenance


def run_engine(peace, attack, **config):
    config.setdefault('cd_sample_size', 5000)
    with ReplayEngine(EngineConfig(**config)) as engine:
        engine.prime(peace)
        return engine.run(attack)


# CONFIG

def test_modes():
    assert parse_mode('ddidd') == 'ddidd'
    assert parse_mode('fq_t') == 'FQ'
    assert parse_mode('ur') == 'UR'
    with pytest.raises(ConfigError):
        parse_mode('everything')
    assert EngineConfig(mode='partial').enabled == ('UR', 'HC', 'WR')


def test_config_loading():
    config = EngineConfig.load({'mode': 'HC', 'params': {'l_ur': 600}, 'seed': 'default'})
    assert config.mode == 'HC'
    assert config.params.l_ur == 600
    assert config.seed == 0
    with pytest.raises(ConfigError):
        EngineConfig.load({'speed': 3})
    with pytest.raises(ConfigError):
        EngineConfig().validate()


# METRICS

def row(ts, passed, flagged, pipeline='', legit_in=10, legit_dropped=0, al=20.0, attack_in=0):
    return TimelineRow(ts=ts, incoming_qps=passed, passed_qps=passed, blocked_qps=0.0, al=al,
                       attack_flag=flagged, pipeline=pipeline, legit_in=legit_in, legit_dropped=legit_dropped,
                       attack_in=attack_in)


def test_compute_metrics():
    timeline = Timeline()
    for r in [
        row(0, 10, False),
        row(1, 50, True),
        row(2, 50, True, 'UR', legit_dropped=1),
        row(3, 10, True, 'UR', legit_dropped=1),
        row(4, 10, True, 'UR'),
        row(5, 10, False),
    ]:
        timeline.append(r)
    deployments = [
        {'ts': 2, 'action': 'deploy', 'pipeline': 'UR+HC'},
        {'ts': 5, 'action': 'reselect', 'pipeline': 'UR+HC'},
        {'ts': 8, 'action': 'reselect', 'pipeline': 'UR+HC+WR'},
        {'ts': 9, 'action': 'retire', 'pipeline': ''},
    ]
    report = compute_metrics(timeline, deployments, mode='partial')
    assert report.controlled_load_pct == pytest.approx(50.0)
    assert report.collateral_damage_pct == pytest.approx(5.0)
    assert report.selection_delay_s == 2.0
    assert report.attack_seconds == 4
    assert report.uncontrolled_runs == [2]
    assert report.trajectory == ['HC', 'WR']
    assert 0.0 <= report.ulq_pct <= 100.0


def test_metrics_count_labeled_attack_seconds():
    timeline = Timeline()
    for r in [
        row(0, 10, False),
        # overloaded before the detector flags it
        row(1, 50, False, attack_in=40),
        row(2, 50, True, attack_in=40),
        row(3, 10, True, 'UR', attack_in=40),
        row(4, 10, True, 'UR', attack_in=40),
        # end streak: flagged, but the attack is over
        row(5, 10, True, 'UR'),
        row(6, 10, True, 'UR'),
        row(7, 10, False),
    ]:
        timeline.append(r)
    report = compute_metrics(timeline, mode='UR')
    assert report.attack_seconds == 4
    assert report.controlled_load_pct == pytest.approx(50.0)
    assert report.selection_delay_s == 2.0
    assert report.uncontrolled_runs == [2]


def test_metrics_without_attack():
    timeline = Timeline()
    for t in range(5):
        timeline.append(row(t, 10, False))
    report = compute_metrics(timeline)
    assert report.controlled_load_pct == 100.0
    assert report.collateral_damage_pct == 0.0
    assert report.selection_delay_s is None
    assert report.ulq_pct == 0.0


def test_report_file(tmp_path):
    timeline = Timeline()
    timeline.append(row(0, 50, True))
    report = compute_metrics(timeline, mode='UR')
    path = str(tmp_path / 'report.json')
    report.save(path)
    loaded = MetricsReport.load(path)
    assert loaded.summary_row() == report.summary_row()
    assert loaded.timeline is None
    with pytest.raises(ValueError):
        MetricsReport.from_dict({'mode': 'UR'})


def test_timeline_csv():
    timeline = Timeline()
    r = row(7, 12.5, True, 'UR+HC')
    r.events = ['attack_start', 'deploy:UR+HC']
    timeline.append(r)
    lines = timeline.to_csv().splitlines()
    assert lines[0] == ','.join(CSV_COLUMNS)
    assert lines[1] == '7,12.5,12.5,0.0,20.0,1,UR+HC,attack_start;deploy:UR+HC'


def test_timeline_csv_keeps_full_precision():
    timeline = Timeline()
    timeline.append(row(7, 1 / 3, False, al=282.60000000000002))
    timeline.append(row(8, 1234567.891, False, al=282.60000000000002))
    frame = pd.read_csv(io.StringIO(timeline.to_csv()), float_precision='round_trip')
    assert list(frame['passed_qps']) == [1 / 3, 1234567.891]
    assert list(frame['al']) == [282.60000000000002] * 2


# REPLAY

def test_replay_needs_priming():
    with ReplayEngine(EngineConfig()) as engine:
        with pytest.raises(NoBaseline):
            engine.run([])
        with pytest.raises(NoBaseline):
            engine.prime([])


@pytest.mark.slow
def test_peace_only_replay(small_profile, small_params, legit_records):
    population = LegitPopulation(small_profile)
    calm = list(gen_legit(background_profile(small_profile, 900, 1500), population, stream=2))
    report = run_engine(legit_records, calm, mode='ddidd', params=small_params)

    assert report.attack_seconds == 0
    assert report.controlled_load_pct == 100.0
    assert report.dropped == 0
    assert report.trajectory == []
    events = [e for r in report.timeline for e in r.events]
    assert 'refresh:WR' in events
    assert 'refresh:UR+HC' in events


@pytest.mark.slow
def test_unknown_recursive_mode_on_random_spoofing(small_profile):
    peace, attack, _ = scenario(small_profile, attacks=[{'kind': 'p2', 'start': 1000, 'end': 1120}])
    report = run_engine(peace, attack, mode='UR')

    assert report.attack_seconds > 100
    assert report.controlled_load_pct >= 95.0
    assert report.trajectory[0] == 'UR'
    assert report.attack_dropped / report.attack_records >= 0.95
    assert report.collateral_damage_pct < 1.0
    assert report.drops_by_filter.keys() == {'UR'}


@pytest.mark.slow
def test_replay_is_deterministic_and_label_blind(small_profile):
    peace, attack, _ = scenario(small_profile, attacks=[{'kind': 'p1', 'start': 1000, 'end': 1060}])
    a = run_engine(peace, attack, mode='ddidd')
    b = run_engine(peace, attack, mode='ddidd')
    assert a.timeline.to_csv() == b.timeline.to_csv()
    assert a.to_dict() == b.to_dict()

    unlabeled = [r._replace(label=None) for r in attack]
    c = run_engine(peace, unlabeled, mode='ddidd')
    assert c.timeline.to_csv() == a.timeline.to_csv()
    assert c.dropped == a.dropped
    assert c.legit_records == c.attack_records == 0


@pytest.mark.slow
def test_threaded_builds_land_on_tick_boundaries(small_profile, small_params):
    peace, attack, _ = scenario(small_profile, attacks=[{'kind': 'p2', 'start': 1000, 'end': 1060}],
                                background_end=2200)
    inline = run_engine(peace, attack, mode='ddidd', params=small_params)
    threaded = run_engine(peace, attack, mode='ddidd', params=small_params, threaded_learning=True)
    assert threaded.timeline.to_csv() == inline.timeline.to_csv()
    events = [e for r in threaded.timeline for e in r.events]
    assert 'refresh:WR' in events


@pytest.mark.slow
def test_conservation(small_profile):
    peace, attack, _ = scenario(small_profile, attacks=[{'kind': 'p3', 'start': 1000, 'end': 1060}])
    report = run_engine(peace, attack, mode='partial')

    assert report.records == len(attack)
    assert report.passed + report.dropped == report.records
    assert report.legit_records + report.attack_records == report.records
    assert sum(report.drops_by_filter.values()) == report.dropped
    for r in report.timeline:
        assert r.incoming_qps == pytest.approx(r.passed_qps + r.blocked_qps)
        assert sum(r.drops.values()) == round(r.blocked_qps)


@pytest.mark.slow
def test_max_attack_seconds(small_profile):
    peace, attack, _ = scenario(small_profile, attacks=[{'kind': 'p2', 'start': 1000, 'end': 1120}])
    report = run_engine(peace, attack, mode='UR', max_attack_seconds=10)
    assert report.timeline.rows[-1].ts < 1015


@pytest.mark.slow
def test_flash_crowd_hits_surging_sources(small_profile):
    peace, attack, provenance = scenario(
        small_profile,
        flash_crowds=[{'start': 1000, 'end': 1120, 'surge_fraction': 0.1, 'surge_factor': 40}],
    )
    surging = set(provenance['surging_sources'])
    # mark the surge so the metrics count its seconds and drops separately
    attack = [r._replace(label='attack' if r.src in surging and 1000 <= r.ts < 1120 else 'legit') for r in attack]
    report = run_engine(peace, attack, mode='ddidd')

    assert 100 <= report.attack_seconds <= 120
    assert report.controlled_load_pct >= 90.0
    assert 'WR' in report.trajectory
    assert report.dropped > 0
    assert report.attack_dropped / report.dropped >= 0.8


# END TO END

@pytest.fixture
def busy_profile():
    return LegitProfile(n_sources=1000, rate_max=2.0, duration=600, seed=11)


@pytest.mark.slow
@pytest.mark.parametrize('kind, expected', [('p1', 'FQ_t'), ('p2', 'UR'), ('p3', 'HC'), ('p4', 'WR')])
def test_each_attack_gets_its_filter(busy_profile, small_params, kind, expected):
    peace, attack, _ = scenario(busy_profile, attacks=[{'kind': kind, 'start': 660, 'end': 780}])
    report = run_engine(peace, attack, mode='ddidd', params=small_params)

    assert report.trajectory[0] == expected
    assert report.controlled_load_pct >= 95.0
    assert report.attack_dropped / report.attack_records >= 0.95


@pytest.mark.slow
def test_hop_count_is_harmless_to_ttl_keeping_spoofers(busy_profile, small_params):
    peace, attack, _ = scenario(busy_profile, attacks=[{'kind': 'p4', 'start': 660, 'end': 780}])
    report = run_engine(peace, attack, mode='ddidd', params=small_params)
    assert report.drops_by_filter.get('UR', 0) <= 0.01 * report.attack_records
    assert report.drops_by_filter.get('HC', 0) <= 0.01 * report.attack_records


@pytest.mark.slow
def test_polymorphic_attack(busy_profile, small_params):
    specs = polymorphic_specs(start=660, phase_seconds=120, multiplier=10)
    peace, attack, _ = gen_scenario(AttackPlan(specs, []), busy_profile)
    report = run_engine(list(peace), list(attack), mode='ddidd', params=small_params)

    # the closing mix of random sources is cheapest to stop by source, not by name
    assert report.trajectory == ['FQ_t', 'UR', 'HC', 'WR', 'UR']
    assert report.controlled_load_pct >= 95.0
    assert report.collateral_damage_pct <= 2.0
    assert max(report.uncontrolled_runs, default=0) <= 4
