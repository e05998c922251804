"""
Versioned JSON files for the learned tables, so `learn` and `replay` can run as separate
invocations. Every file carries a header with the format version, the table kind, built_at and
learn_span; the payload follows under "data".
"""

import logging
import os
from dataclasses import dataclass
from typing import Optional

from .FilterParams import FilterParams
from .FrequentQuery import QnameFreqTable
from .HopCount import TtlTable
from .UnknownRecursive import AllowList
from .WildRecursive import RateTable
from ..GlobalAttributes import TABLE_FORMAT_TAG, TABLE_FORMAT_VERSION
from ..exceptions import TableFormatError
from ..utils import dump_json, load_json, sort_addresses


logger = logging.getLogger(__name__)


ALLOWLIST_FILE = 'allowlist.json'
TTLTABLE_FILE = 'ttltable.json'
RATETABLE_FILE = 'ratetable.json'
FQBASELINE_FILE = 'fqbaseline.json'


@dataclass
class FilterStateBundle:
    allow_list: Optional[AllowList] = None
    ttl_table: Optional[TtlTable] = None
    rate_table: Optional[RateTable] = None
    fq_baseline: Optional[QnameFreqTable] = None


def _header(kind: str, built_at: float, learn_span: float, data: dict) -> dict:
    return {
        'format': TABLE_FORMAT_TAG,
        'version': TABLE_FORMAT_VERSION,
        'kind': kind,
        'built_at': built_at,
        'learn_span': learn_span,
        'data': data,
    }


def _read(path: str, kind: str) -> dict:
    try:
        doc = load_json(path)
    except ValueError as e:
        raise TableFormatError(f'{path}: not valid JSON ({e})')
    if not isinstance(doc, dict) or doc.get('format') != TABLE_FORMAT_TAG:
        raise TableFormatError(f'{path}: not a rootshield table file')
    if doc.get('version') != TABLE_FORMAT_VERSION:
        raise TableFormatError(f'{path}: unsupported table version {doc.get("version")!r}')
    if doc.get('kind') != kind:
        raise TableFormatError(f'{path}: expected a {kind}, found {doc.get("kind")!r}')
    for key in ('built_at', 'learn_span', 'data'):
        if key not in doc:
            raise TableFormatError(f'{path}: missing {key!r}')
    return doc


def save_tables(bundle: FilterStateBundle, directory: str) -> list:
    """writes every table of the bundle and returns the written paths"""

    os.makedirs(directory, exist_ok=True)
    written = []

    if bundle.allow_list is not None:
        al = bundle.allow_list
        path = os.path.join(directory, ALLOWLIST_FILE)
        dump_json(_header(al.kind, al.built_at, al.learn_span, {'sources': sort_addresses(al.sources)}), path)
        written.append(path)

    if bundle.ttl_table is not None:
        tt = bundle.ttl_table
        path = os.path.join(directory, TTLTABLE_FILE)
        entries = {src: sorted(tt.entries[src]) for src in sort_addresses(tt.entries)}
        dump_json(_header(tt.kind, tt.built_at, tt.learn_span, {'entries': entries}), path)
        written.append(path)

    if bundle.rate_table is not None:
        rt = bundle.rate_table
        path = os.path.join(directory, RATETABLE_FILE)
        dump_json(_header(rt.kind, rt.built_at, rt.learn_span, rt.to_dict()), path)
        written.append(path)

    if bundle.fq_baseline is not None:
        fq = bundle.fq_baseline
        path = os.path.join(directory, FQBASELINE_FILE)
        dump_json(_header('fq-baseline', fq.built_at, 0.0, fq.to_dict()), path)
        written.append(path)

    logger.info('saved %d tables to %s', len(written), directory)
    return written


def load_tables(directory: str, params: FilterParams = None) -> FilterStateBundle:
    """loads whichever of the four table files exist in `directory`"""

    params = params or FilterParams()
    bundle = FilterStateBundle()

    try:
        path = os.path.join(directory, ALLOWLIST_FILE)
        if os.path.isfile(path):
            doc = _read(path, AllowList.kind)
            bundle.allow_list = AllowList(
                frozenset(doc['data']['sources']), doc['built_at'], doc['learn_span'], params.u_ur
            )

        path = os.path.join(directory, TTLTABLE_FILE)
        if os.path.isfile(path):
            doc = _read(path, TtlTable.kind)
            bundle.ttl_table = TtlTable(
                {src: frozenset(int(t) for t in ttls) for src, ttls in doc['data']['entries'].items()},
                doc['built_at'], doc['learn_span'], params.u_hc,
            )

        path = os.path.join(directory, RATETABLE_FILE)
        if os.path.isfile(path):
            doc = _read(path, RateTable.kind)
            if tuple(doc['data']['windows']) != params.windows:
                raise TableFormatError(
                    f'{path}: windows {doc["data"]["windows"]} differ from the configured {list(params.windows)}'
                )
            bundle.rate_table = RateTable.from_dict(doc['data'], doc['built_at'], doc['learn_span'], params)

        path = os.path.join(directory, FQBASELINE_FILE)
        if os.path.isfile(path):
            doc = _read(path, 'fq-baseline')
            bundle.fq_baseline = QnameFreqTable.from_dict(doc['data'], doc['built_at'])

    except (KeyError, TypeError, ValueError) as e:
        raise TableFormatError(f'{path}: malformed table ({e})')

    return bundle
