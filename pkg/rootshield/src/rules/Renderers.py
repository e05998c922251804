"""
Rule text renderers. Rules are emitted, never installed.

neutral   the canonical format, one rule per line, parsed back by parse_neutral
ipset     `ipset restore` input: one hash:ip set per source block
iptables  a ROOTSHIELD chain referencing those sets, plus string matches for FQ_t

Stock ipset has no ip+TTL set type, so HC renders as comment-annotated pseudo-commands in both
ipset and iptables output.
"""

import logging
from typing import Callable, Dict, List, Union

from .RuleSet import AllowSetBlock, QnameBlock, RuleBlock, RuleSet, SourceBlock, SourceSet, TtlMismatchBlock
from ..exceptions import RuleFormatError
from ..filters.FilterParams import FilterParams
from ..filters.Verdict import FilterId
from ..selector.Deployment import DeploymentState
from ..utils import ip_to_int


logger = logging.getLogger(__name__)


SET_NAMES = {
    FilterId.FQ_t: 'fq_t',
    FilterId.UR: 'ur',
    FilterId.HC: 'hc',
    FilterId.WR: 'wr',
    FilterId.FQ_s: 'fq_s',
    FilterId.AR: 'ar',
}
_BY_SET_NAME = {v: k for k, v in SET_NAMES.items()}

CHAIN = 'ROOTSHIELD'
SET_PREFIX = 'rootshield-'
# IPv4 header without options plus UDP header plus DNS header
QNAME_OFFSET = 20 + 8 + 12


def _ruleset(obj: Union[RuleSet, DeploymentState], params: FilterParams = None) -> RuleSet:
    if isinstance(obj, DeploymentState):
        return RuleSet.from_deployment(obj, params)
    return obj


def _join(lines: List[str]) -> str:
    return '\n'.join(lines)


# NEUTRAL

def _neutral_block(b: RuleBlock) -> List[str]:
    name = SET_NAMES[b.filter_id]
    if isinstance(b, AllowSetBlock):
        return [f'ALLOW_SET {name}'] + [f'ADD {name} {a}' for a in b.sources.addresses()] + [f'DEFAULT_DROP {name}']
    if isinstance(b, TtlMismatchBlock):
        return [f'BLOCK_SRC_TTL_MISMATCH {r.value} {",".join(str(t) for t in sorted(r.ttls))}' for r in b.rules()]
    if isinstance(b, SourceBlock):
        return [f'BLOCK_SRC {name} {a}' for a in b.sources.addresses()]
    if isinstance(b, QnameBlock):
        return [f'{r.kind} {name} {r.value}' for r in b.rules()]
    raise TypeError(f'cannot render {b!r}')


def render_neutral(rules: Union[RuleSet, DeploymentState], params: FilterParams = None) -> str:
    """deterministic canonical text; an empty deployment renders as the empty string"""
    lines = []
    for b in _ruleset(rules, params):
        lines += _neutral_block(b)
    return _join(lines)


def parse_neutral(text: str, fq_rule_cap: int = FilterParams.fq_rule_cap) -> RuleSet:
    """
    Reads the neutral format back into a RuleSet. Blocks take the order in which their filter
    first appears.
    """

    order: List[FilterId] = []
    allow: Dict[FilterId, list] = {}
    closed = set()
    ttl_entries: Dict[int, frozenset] = {}
    blocked: Dict[FilterId, list] = {}
    suffixes, exact = [], []

    def seen(fid: FilterId, line_no: int):
        if fid not in order:
            order.append(fid)
        elif order[-1] is not fid:
            raise RuleFormatError(f'rules of {fid} are not contiguous', line_no)

    def set_name(token: str, line_no: int) -> FilterId:
        try:
            return _BY_SET_NAME[token]
        except KeyError:
            raise RuleFormatError(f'unknown set {token!r}', line_no)

    def address(token: str, line_no: int) -> int:
        try:
            return ip_to_int(token)
        except ValueError:
            raise RuleFormatError(f'bad address {token!r}', line_no)

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        parts = line.split()
        keyword = parts[0]

        if keyword == 'ALLOW_SET' and len(parts) == 2:
            fid = set_name(parts[1], line_no)
            if fid is not FilterId.UR:
                raise RuleFormatError('only ur is an allow-set', line_no)
            seen(fid, line_no)
            allow.setdefault(fid, [])
        elif keyword == 'ADD' and len(parts) == 3:
            fid = set_name(parts[1], line_no)
            if fid not in allow or fid in closed:
                raise RuleFormatError('ADD outside of an open allow-set', line_no)
            allow[fid].append(address(parts[2], line_no))
        elif keyword == 'DEFAULT_DROP' and len(parts) == 2:
            fid = set_name(parts[1], line_no)
            if fid not in allow or fid in closed:
                raise RuleFormatError('DEFAULT_DROP without an open allow-set', line_no)
            closed.add(fid)
        elif keyword == 'BLOCK_SRC_TTL_MISMATCH' and len(parts) == 3:
            seen(FilterId.HC, line_no)
            try:
                ttls = frozenset(int(t) for t in parts[2].split(','))
            except ValueError:
                raise RuleFormatError(f'bad TTL list {parts[2]!r}', line_no)
            if any(not 0 <= t <= 255 for t in ttls):
                raise RuleFormatError('TTL out of range 0-255', line_no)
            ttl_entries[address(parts[1], line_no)] = ttls
        elif keyword == 'BLOCK_SRC' and len(parts) == 3:
            fid = set_name(parts[1], line_no)
            if fid not in (FilterId.WR, FilterId.FQ_s, FilterId.AR):
                raise RuleFormatError(f'{parts[1]} is not a blocklist', line_no)
            seen(fid, line_no)
            blocked.setdefault(fid, []).append(address(parts[2], line_no))
        elif keyword in ('BLOCK_QNAME_SUFFIX', 'BLOCK_QNAME_EXACT') and len(parts) == 3:
            if set_name(parts[1], line_no) is not FilterId.FQ_t:
                raise RuleFormatError('query name rules belong to fq_t', line_no)
            seen(FilterId.FQ_t, line_no)
            (suffixes if keyword == 'BLOCK_QNAME_SUFFIX' else exact).append(parts[2])
        else:
            raise RuleFormatError(f'cannot parse {line!r}', line_no)

    if set(allow) - closed:
        raise RuleFormatError('allow-set without DEFAULT_DROP')

    blocks = []
    for fid in order:
        if fid is FilterId.UR:
            blocks.append(AllowSetBlock(SourceSet(allow[fid])))
        elif fid is FilterId.HC:
            blocks.append(TtlMismatchBlock(ttl_entries))
        elif fid is FilterId.FQ_t:
            blocks.append(QnameBlock(suffixes, exact))
        else:
            blocks.append(SourceBlock(fid, SourceSet(blocked[fid])))
    return RuleSet(blocks, fq_rule_cap)


# IPSET

def set_name_of(fid: FilterId) -> str:
    return SET_PREFIX + SET_NAMES[fid].replace('_', '-')


def _create(name: str, n: int, kind: str = 'hash:ip') -> str:
    return f'create {name} {kind} family inet hashsize 1024 maxelem {max(65536, n)}'


def _ipset_block(b: RuleBlock) -> List[str]:
    name = set_name_of(b.filter_id)
    if isinstance(b, (AllowSetBlock, SourceBlock)):
        return [_create(name, len(b.sources))] + [f'add {name} {a}' for a in b.sources.addresses()]
    if isinstance(b, TtlMismatchBlock):
        lines = [f'# {name}: stock ipset has no ip+ttl type, the entries need a TTL-matching set module',
                 '# ' + _create(name, len(b.entries), 'hash:ip,ttl')]
        lines += [f'# add {name} {r.value} ttl {",".join(str(t) for t in sorted(r.ttls))}' for r in b.rules()]
        return lines
    return []


def render_ipset(rules: Union[RuleSet, DeploymentState], params: FilterParams = None) -> str:
    lines = []
    for b in _ruleset(rules, params):
        lines += _ipset_block(b)
    return _join(lines)


# IPTABLES

def qname_wire_hex(name: str, terminate: bool = True) -> str:
    """the name in DNS wire format as an iptables hex-string, e.g. |03 63 6f 6d 00|"""
    data = b''
    for label in name.split('.'):
        encoded = label.encode('utf-8')
        data += bytes([len(encoded)]) + encoded
    if terminate:
        data += b'\x00'
    return '|' + ' '.join(f'{c:02x}' for c in data) + '|'


def _iptables_block(b: RuleBlock) -> List[str]:
    rule = f'iptables -A {CHAIN}'
    name = set_name_of(b.filter_id)
    if isinstance(b, AllowSetBlock):
        return [f'{rule} -m set ! --match-set {name} src -j DROP']
    if isinstance(b, SourceBlock):
        return [f'{rule} -m set --match-set {name} src -j DROP']
    if isinstance(b, TtlMismatchBlock):
        return [f'# {rule} -m set --match-set {name} src,ttl-mismatch -j DROP']
    if isinstance(b, QnameBlock):
        # approximation: the question is assumed to start right after the DNS header of an
        # option-less IPv4/UDP packet
        lines = []
        for name_ in sorted(b.exact):
            lines.append(f'{rule} -p udp --dport 53 -m string --algo bm --icase '
                         f'--from {QNAME_OFFSET} --to {QNAME_OFFSET + 1} '
                         f'--hex-string "{qname_wire_hex(name_)}" -j DROP')
        for seg in sorted(b.suffixes):
            lines.append(f'{rule} -p udp --dport 53 -m string --algo bm --icase '
                         f'--from {QNAME_OFFSET} --hex-string "{qname_wire_hex(seg)}" -j DROP')
        return lines
    return []


def render_iptables(rules: Union[RuleSet, DeploymentState], params: FilterParams = None) -> str:
    """the ROOTSHIELD chain; the sets it references come from render_ipset"""
    ruleset = _ruleset(rules, params)
    if not ruleset.blocks:
        return ''
    lines = [
        f'iptables -N {CHAIN}',
        f'iptables -F {CHAIN}',
    ]
    for b in ruleset:
        lines += _iptables_block(b)
    lines += [
        f'iptables -A {CHAIN} -j RETURN',
        f'iptables -I INPUT -p udp --dport 53 -j {CHAIN}',
        f'iptables -I INPUT -p tcp --dport 53 -j {CHAIN}',
    ]
    return _join(lines)


RENDERERS: Dict[str, Callable[..., str]] = {
    'neutral': render_neutral,
    'ipset': render_ipset,
    'iptables': render_iptables,
}


def render(rules: Union[RuleSet, DeploymentState], fmt: str = 'neutral', params: FilterParams = None) -> str:
    try:
        renderer = RENDERERS[fmt]
    except KeyError:
        raise ValueError(f'unknown rule format {fmt!r}, expected one of {", ".join(RENDERERS)}')
    text = renderer(rules, params)
    logger.debug('rendered %d lines of %s rules', text.count('\n') + 1 if text else 0, fmt)
    return text
