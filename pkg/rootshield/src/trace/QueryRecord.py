"""
The query record data model and the JSON-lines codec for a single trace line.

Filters, the detector and the selector only ever receive a `QueryView`, the record without its
evaluation label, so ground truth can only influence metrics.
"""

import ipaddress
import json
import math
from typing import NamedTuple, Optional

from ..exceptions import MalformedLine, OutOfRange, BadAddress


PROTOCOLS = ('udp', 'tcp')
LABELS = ('legit', 'attack')

# malformed UDP payloads and TCP SYNs that never parse into a question
MALFORMED_QNAME = '_malformed'
NONE_QTYPE = 'NONE'

FIELDS = ('ts', 'src', 'ttl', 'proto', 'qname', 'qtype', 'size')
_ALL_KEYS = frozenset(FIELDS + ('label',))
_REQUIRED_KEYS = frozenset(FIELDS)


class QueryView(NamedTuple):
    """a query arrival as seen by the defense (no label)"""
    ts: float
    src: str
    ttl: int
    proto: str
    qname: str
    qtype: str
    size: int


class QueryRecord(NamedTuple):
    ts: float
    src: str
    ttl: int
    proto: str
    qname: str
    qtype: str
    size: int
    label: Optional[str] = None

    def view(self) -> QueryView:
        return QueryView(self.ts, self.src, self.ttl, self.proto, self.qname, self.qtype, self.size)

    def is_attack(self) -> bool:
        return self.label == 'attack'


def normalize_qname(name: str, line_no: int = None) -> str:
    """lowercase, no trailing dot; the root query '.' becomes ''. Empty labels are malformed."""
    name = name.lower()
    if name.endswith('.'):
        name = name[:-1]
    if name and '' in name.split('.'):
        raise MalformedLine(f'qname {name!r} has an empty label', line_no)
    return name


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v) -> bool:
    return (isinstance(v, (int, float))) and not isinstance(v, bool)


def parse_trace_line(line: str, line_no: int = None) -> QueryRecord:
    """Parses one JSON-lines trace record into a validated, normalized QueryRecord."""

    try:
        obj = json.loads(line)
    except ValueError as e:
        raise MalformedLine(f'not valid JSON ({e})', line_no)

    if not isinstance(obj, dict):
        raise MalformedLine('record is not a JSON object', line_no)

    keys = obj.keys()
    unknown = keys - _ALL_KEYS
    if unknown:
        raise MalformedLine(f'unknown keys {sorted(unknown)}', line_no)
    missing = _REQUIRED_KEYS - keys
    if missing:
        raise MalformedLine(f'missing keys {sorted(missing)}', line_no)

    ts = obj['ts']
    if not _is_number(ts):
        raise MalformedLine('ts must be a number', line_no)
    ts = float(ts)
    if not math.isfinite(ts) or ts < 0:
        raise OutOfRange(f'ts {ts} out of range', line_no)

    src = obj['src']
    if not isinstance(src, str):
        raise BadAddress('src must be a dotted-quad string', line_no)
    try:
        src = str(ipaddress.IPv4Address(src))
    except ValueError:
        raise BadAddress(f'{src!r} is not an IPv4 dotted-quad', line_no)

    ttl = obj['ttl']
    if not _is_int(ttl):
        raise MalformedLine('ttl must be an integer', line_no)
    if not 0 <= ttl <= 255:
        raise OutOfRange(f'ttl {ttl} out of range 0-255', line_no)

    proto = obj['proto']
    if proto not in PROTOCOLS:
        raise MalformedLine(f'proto must be one of {PROTOCOLS}', line_no)

    qname = obj['qname']
    if not isinstance(qname, str):
        raise MalformedLine('qname must be a string', line_no)

    qtype = obj['qtype']
    if not isinstance(qtype, str) or not qtype:
        raise MalformedLine('qtype must be a non-empty string', line_no)

    size = obj['size']
    if not _is_int(size):
        raise MalformedLine('size must be an integer', line_no)
    if size < 1:
        raise OutOfRange(f'size {size} must be positive', line_no)

    label = obj.get('label')
    if label is not None and label not in LABELS:
        raise MalformedLine(f'label must be one of {LABELS}', line_no)

    return QueryRecord(ts, src, ttl, proto, normalize_qname(qname, line_no), qtype.upper(), size, label)


def format_trace_line(rec: QueryRecord) -> str:
    """inverse of parse_trace_line, canonical key order, no trailing newline"""
    obj = {
        'ts': rec.ts,
        'src': rec.src,
        'ttl': rec.ttl,
        'proto': rec.proto,
        'qname': rec.qname,
        'qtype': rec.qtype,
        'size': rec.size,
    }
    if rec.label is not None:
        obj['label'] = rec.label
    return json.dumps(obj, separators=(',', ':'))
