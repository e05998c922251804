import json

import pytest

from rootshield.src.exceptions import BadAddress, EmptyName, MalformedLine, MonotonicityViolation, OutOfRange, \
    TraceIOError
from rootshield.src.trace.QnameSegments import segment_qname, is_suffix
from rootshield.src.trace.QueryRecord import QueryRecord, format_trace_line, parse_trace_line
from rootshield.src.trace.TraceStream import TraceStream, iter_ticks, read_trace, write_trace


LINE = '{"ts":100.0,"src":"192.0.2.1","ttl":57,"proto":"udp","qname":"example.com","qtype":"A","size":64}'


def test_parse_line():
    r = parse_trace_line(LINE)
    assert r == QueryRecord(100.0, '192.0.2.1', 57, 'udp', 'example.com', 'A', 64, None)
    assert segment_qname(r.qname).tld == 'com'


def test_qname_normalized():
    obj = json.loads(LINE)
    obj['qname'] = 'WWW.Example.COM.'
    assert parse_trace_line(json.dumps(obj)).qname == 'www.example.com'


@pytest.mark.parametrize('qname', ['Example.COM..', 'a..b', '..', '.example.com'])
def test_qname_with_empty_label_rejected(qname):
    obj = json.loads(LINE)
    obj['qname'] = qname
    with pytest.raises(MalformedLine) as e:
        parse_trace_line(json.dumps(obj), 9)
    assert e.value.line == 9


def test_root_qname_is_empty():
    obj = json.loads(LINE)
    obj['qname'] = '.'
    assert parse_trace_line(json.dumps(obj)).qname == ''


@pytest.mark.parametrize('key, value, error', [
    ('ttl', 300, OutOfRange),
    ('ttl', -1, OutOfRange),
    ('size', 0, OutOfRange),
    ('ts', -3.0, OutOfRange),
    ('src', '2001:db8::1', BadAddress),
    ('src', '300.1.1.1', BadAddress),
    ('proto', 'icmp', MalformedLine),
    ('ttl', 'x', MalformedLine),
])
def test_parse_errors(key, value, error):
    obj = json.loads(LINE)
    obj[key] = value
    with pytest.raises(error):
        parse_trace_line(json.dumps(obj), 4)


def test_parse_error_carries_line():
    with pytest.raises(MalformedLine) as e:
        parse_trace_line('{"ts": 1', 17)
    assert e.value.line == 17
    assert 'line 17' in str(e.value)


def test_unknown_and_missing_keys():
    obj = json.loads(LINE)
    obj['port'] = 53
    with pytest.raises(MalformedLine):
        parse_trace_line(json.dumps(obj))
    del obj['port']
    del obj['qtype']
    with pytest.raises(MalformedLine):
        parse_trace_line(json.dumps(obj))


def test_view_drops_label(rec):
    r = rec(1.0, label='attack')
    assert r.is_attack()
    assert not hasattr(r.view(), 'label')


@pytest.mark.parametrize('name, expected', [
    ('www.example.com', ('com', 'example.com', 'www.example.com')),
    ('com', ('com', 'com', 'com')),
    ('a.b.c.d.example.xyz', ('xyz', 'example.xyz', 'a.b.c.d.example.xyz')),
])
def test_segments(name, expected):
    segs = segment_qname(name)
    assert tuple(segs) == expected
    assert segs.full == name
    assert segs.full.endswith(segs.subdomain) and segs.subdomain.endswith(segs.tld)


def test_root_query_has_no_segments():
    with pytest.raises(EmptyName):
        segment_qname('')


def test_suffix_on_label_boundary():
    assert is_suffix('x.evil', 'evil')
    assert is_suffix('evil', 'evil')
    assert not is_suffix('xevil', 'evil')


def test_write_then_read(tmp_path, rec):
    records = [rec(1.0, label='legit'), rec(1.5, src='198.51.100.7', ttl=120, label='attack'), rec(2.25, label=None)]
    path = str(tmp_path / 'trace.jsonl')
    assert write_trace(records, path) == 3
    assert list(read_trace(path)) == records
    with open(path) as f:
        assert f.readline().rstrip('\n') == format_trace_line(records[0])


def test_monotonicity_violation_line(tmp_path, rec):
    path = tmp_path / 'bad.jsonl'
    path.write_text(format_trace_line(rec(5.0)) + '\n' + format_trace_line(rec(4.9)) + '\n')
    with pytest.raises(MonotonicityViolation) as e:
        list(read_trace(str(path)))
    assert e.value.line == 2


def test_invalid_utf8_names_line(tmp_path, rec):
    path = tmp_path / 'latin1.jsonl'
    path.write_bytes(format_trace_line(rec(1.0)).encode() + b'\n'
                     + LINE.replace('example', 'caf\xe9').encode('latin-1') + b'\n')
    with pytest.raises(MalformedLine) as e:
        list(read_trace(str(path)))
    assert e.value.line == 2


def test_empty_file(tmp_path):
    path = tmp_path / 'empty.jsonl'
    path.write_text('')
    assert list(read_trace(str(path))) == []


def test_missing_file(tmp_path):
    with pytest.raises(TraceIOError):
        read_trace(str(tmp_path / 'nope.jsonl'))


def test_stream_is_reiterable(rec):
    stream = TraceStream.from_records([rec(0.5), rec(1.5)])
    assert list(stream) == list(stream)


def test_ticks_include_empty_seconds(rec):
    ticks = list(iter_ticks([rec(10.2), rec(10.9), rec(13.0)]))
    assert [t for t, _ in ticks] == [10, 11, 12, 13]
    assert [len(b) for _, b in ticks] == [2, 0, 0, 1]
