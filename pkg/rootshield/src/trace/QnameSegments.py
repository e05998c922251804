from typing import NamedTuple

from ..exceptions import EmptyName


class QnameSegments(NamedTuple):
    tld: str
    subdomain: str
    full: str


# segment levels from least to most specific
LEVELS = ('tld', 'subdomain', 'full')


def segment_qname(qname: str) -> QnameSegments:
    """Splits a normalized name into its TLD, last-two-labels subdomain and the full name."""

    if not qname:
        raise EmptyName('the root query has no segments')

    parts = qname.rsplit('.', 2)
    tld = parts[-1]
    if len(parts) == 1:
        return QnameSegments(tld, tld, qname)
    return QnameSegments(tld, parts[-2] + '.' + tld, qname)


def is_suffix(name: str, suffix: str) -> bool:
    """suffix match on label boundaries"""
    return name == suffix or name.endswith('.' + suffix)
