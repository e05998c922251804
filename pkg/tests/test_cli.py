import json
import os

import pytest

from rootshield.src.cli.main import main, EXIT_OK, EXIT_FAILURE, EXIT_USAGE


PROFILE = {'n_sources': 50, 'duration': 300, 'rate_min': 0.05, 'rate_max': 1.0, 'seed': 1}
ATTACKS = [{'kind': 'p1', 'start': 320, 'end': 340, 'qname': 'x.attack'}]


def write_json(path, data):
    with open(path, 'w') as f:
        json.dump(data, f)
    return str(path)


@pytest.fixture
def traces(tmp_path):
    """a small synthesized peace/attack pair"""
    profile = write_json(tmp_path / 'profile.json', PROFILE)
    attacks = write_json(tmp_path / 'attacks.json', ATTACKS)
    out = str(tmp_path / 'attack.jsonl')
    assert main(['synth', '--profile', profile, '--attacks', attacks, '--out', out]) == EXIT_OK
    return str(tmp_path / 'attack.peace.jsonl'), out


def test_usage_errors(tmp_path):
    assert main([]) == EXIT_USAGE
    assert main(['replay', '--peace', str(tmp_path / 'missing.jsonl'), '--attack', 'x.jsonl']) == EXIT_USAGE
    assert main(['learn', '--peace', str(tmp_path / 'missing.jsonl'), '--out', str(tmp_path)]) == EXIT_USAGE


def test_bad_log_level(traces, tmp_path):
    peace, _ = traces
    assert main(['learn', '--peace', peace, '--out', str(tmp_path / 't'), '--log-level', 'LOUD']) == EXIT_USAGE


def test_unknown_attack_kind(tmp_path):
    attacks = write_json(tmp_path / 'attacks.json', [{'kind': 'p6', 'start': 0, 'end': 10}])
    assert main(['synth', '--attacks', attacks, '--out', str(tmp_path / 'a.jsonl')]) == EXIT_USAGE


def test_bad_seed_env(tmp_path, monkeypatch):
    monkeypatch.setenv('DDIDD_SEED', 'abc')
    attacks = write_json(tmp_path / 'attacks.json', ATTACKS)
    assert main(['synth', '--attacks', attacks, '--out', str(tmp_path / 'a.jsonl')]) == EXIT_USAGE


def test_malformed_trace(tmp_path):
    peace = tmp_path / 'peace.jsonl'
    peace.write_text('{"ts": 0, "src": "192.0.2.1"\n')
    assert main(['learn', '--peace', str(peace), '--out', str(tmp_path / 't')]) == EXIT_FAILURE


def test_synth_outputs(traces, tmp_path):
    peace, attack = traces
    assert os.path.isfile(peace)
    manifest = json.loads((tmp_path / 'attack.manifest.json').read_text())
    assert manifest['peace_records'] > 0 and manifest['attack_records'] > 0
    assert manifest['plan']['attacks'][0]['kind'] == 'p1'


def test_synth_seed_is_reproducible(tmp_path):
    attacks = write_json(tmp_path / 'attacks.json', ATTACKS)
    profile = write_json(tmp_path / 'profile.json', PROFILE)
    for name in ('a', 'b'):
        assert main(['synth', '--profile', profile, '--attacks', attacks, '--seed', '5',
                     '--out', str(tmp_path / f'{name}.jsonl')]) == EXIT_OK
    assert (tmp_path / 'a.jsonl').read_text() == (tmp_path / 'b.jsonl').read_text()
    assert (tmp_path / 'a.peace.jsonl').read_text() == (tmp_path / 'b.peace.jsonl').read_text()


def test_learn_and_render(traces, tmp_path):
    peace, _ = traces
    tables = str(tmp_path / 'tables')
    assert main(['learn', '--peace', peace, '--out', tables]) == EXIT_OK
    assert sorted(os.listdir(tables)) == ['allowlist.json', 'fqbaseline.json', 'ratetable.json', 'ttltable.json']

    out = tmp_path / 'rules.txt'
    assert main(['render', '--tables', tables, '--pipeline', 'UR,HC', '--out', str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == 'ALLOW_SET ur'
    assert 'DEFAULT_DROP ur' in lines
    assert any(l.startswith('BLOCK_SRC_TTL_MISMATCH ') for l in lines)

    assert main(['render', '--tables', tables, '--pipeline', 'HC,UR']) == EXIT_USAGE
    assert main(['render', '--pipeline', 'UR']) == EXIT_USAGE


def test_render_qname_rules(capsys):
    assert main(['render', '--pipeline', 'FQ_t', '--qname', 'tld:evil', '--qname', 'exact:a.b.c']) == EXIT_OK
    assert capsys.readouterr().out == 'BLOCK_QNAME_EXACT fq_t a.b.c\nBLOCK_QNAME_SUFFIX fq_t evil\n'

    args = ['render', '--pipeline', 'FQ_t']
    for i in range(6):
        args += ['--qname', f'tld:n{i}']
    assert main(args) == EXIT_FAILURE
    assert main(['render', '--pipeline', 'FQ_t', '--qname', 'evil']) == EXIT_USAGE


def test_render_blocklist(tmp_path, capsys):
    sources = tmp_path / 'wild.txt'
    sources.write_text('# wild\n10.0.0.10\n10.0.0.9\n')
    assert main(['render', '--pipeline', 'WR', '--block-src', str(sources), '--block-filter', 'WR',
                 '--format', 'ipset']) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[1:] == ['add rootshield-wr 10.0.0.9', 'add rootshield-wr 10.0.0.10']


def test_render_blocklist_bad_address(tmp_path):
    sources = tmp_path / 'wild.txt'
    sources.write_text('10.0.0.10\n10.0.0.300\n')
    assert main(['render', '--pipeline', 'WR', '--block-src', str(sources), '--block-filter', 'WR']) == EXIT_USAGE


def test_non_utf8_trace(tmp_path):
    peace = tmp_path / 'peace.jsonl'
    peace.write_bytes(b'{"ts":0,"src":"192.0.2.1","ttl":57,"proto":"udp","qname":"caf\xe9","qtype":"A","size":64}\n')
    assert main(['learn', '--peace', str(peace), '--out', str(tmp_path / 't')]) == EXIT_FAILURE


@pytest.mark.slow
def test_replay_and_report(traces, tmp_path, capsys):
    peace, attack = traces
    report = str(tmp_path / 'report.json')
    assert main(['replay', '--peace', peace, '--attack', attack, '--mode', 'UR', '--out', report]) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed['mode'] == 'UR'
    assert printed['attack_seconds'] > 0
    assert os.path.isfile(str(tmp_path / 'report.timeline.csv'))

    assert main(['report', '--in', report]) == EXIT_OK
    table = capsys.readouterr().out
    assert table.splitlines()[0].split() == ['mode', 'con', 'cd', 'delay', 'ulq', 'trajectory']

    bogus = write_json(tmp_path / 'bogus.json', {'mode': 'UR'})
    assert main(['report', '--in', bogus]) == EXIT_USAGE


@pytest.mark.slow
def test_compare_modes(traces, tmp_path, capsys):
    peace, attack = traces
    out = str(tmp_path / 'compare.json')
    assert main(['compare', '--peace', peace, '--attack', attack, '--modes', 'UR,HC', '--out', out]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].split()[:2] == ['mode', 'con']
    assert [line.split()[0] for line in lines[1:]] == ['UR', 'HC']
    for mode in ('UR', 'HC'):
        assert os.path.isfile(str(tmp_path / f'compare.{mode}.timeline.csv'))

    with open(out) as f:
        assert [r['mode'] for r in json.load(f)] == ['UR', 'HC']
    assert main(['report', '--in', out]) == EXIT_OK
    assert len(capsys.readouterr().out.strip().splitlines()) == 3
