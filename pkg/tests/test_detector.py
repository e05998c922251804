import pytest

from rootshield.src.detector import AttackDetector, DetectorEvent, DetectorState, LoadSample, prime_al, \
    al_from_rates, step
from rootshield.src.exceptions import NoBaseline, NotPrimed


def run(detector, qps_series, blocked=0.0):
    return [detector.step(LoadSample(t, q, q - min(blocked, q), min(blocked, q))) for t, q in enumerate(qps_series)]


def test_prime_al_constant_rate(rec):
    peace = [rec(s + i / 7, src='10.0.0.1') for s in range(100) for i in range(7)]
    assert prime_al(peace) == pytest.approx(17.5)


def test_prime_al_empty():
    with pytest.raises(NoBaseline):
        prime_al([])
    with pytest.raises(NoBaseline):
        al_from_rates([])


def test_al_from_rates():
    assert al_from_rates([4, 6], f_acc=2.0) == pytest.approx(10.0)


def test_step_requires_al():
    with pytest.raises(NotPrimed):
        step(DetectorState(), LoadSample.unfiltered(0, 10.0))
    with pytest.raises(NoBaseline):
        AttackDetector().prime(0)


def test_attack_start_after_streak():
    d = AttackDetector()
    d.prime(250)
    events = run(d, [200, 300, 300])
    assert events == [DetectorEvent.NONE, DetectorEvent.NONE, DetectorEvent.ATTACK_START]
    assert d.under_attack
    assert d.state.attack_start == 2


def test_single_spike_is_not_an_attack():
    d = AttackDetector()
    d.prime(250)
    assert DetectorEvent.ATTACK_START not in run(d, [300, 100, 300, 100, 300])
    assert not d.under_attack


def test_attack_end_after_calm_period():
    d = AttackDetector(end_streak=5)
    d.prime(100)
    run(d, [500, 500])
    assert d.under_attack

    # blocking still heavy: no end
    assert DetectorEvent.ATTACK_END not in run(d, [500] * 10, blocked=450)
    events = run(d, [50] * 5)
    assert events[-1] is DetectorEvent.ATTACK_END
    assert not d.under_attack
    assert d.state.attack_end == 4


def test_calm_streak_resets():
    d = AttackDetector(end_streak=3)
    d.prime(100)
    run(d, [500, 500])
    events = run(d, [50, 50, 500, 50, 50])
    assert DetectorEvent.ATTACK_END not in events
    assert d.under_attack


def test_load_sample_conservation():
    with pytest.raises(ValueError):
        LoadSample(0, 10.0, 4.0, 4.0)
    with pytest.raises(ValueError):
        LoadSample(0, -1.0, -1.0, 0.0)
