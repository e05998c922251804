import logging
import os
from typing import Callable, Iterable, Iterator, List, Tuple

from .QueryRecord import QueryRecord, parse_trace_line, format_trace_line
from ..exceptions import MalformedLine, MonotonicityViolation, TraceIOError


logger = logging.getLogger(__name__)


class TraceStream:
    """
    An ordered sequence of query records with non-decreasing timestamps. The stream is lazy:
    iterating it re-reads its source, so memory stays bounded independent of the trace size.
    Violations of the ordering raise MonotonicityViolation with the (1-based) line number.
    """

    def __init__(self, factory: Callable[[], Iterator[Tuple[int, QueryRecord]]], name: str = None):
        self._factory = factory
        self.name = name

    @classmethod
    def from_records(cls, records: Iterable[QueryRecord], name: str = None) -> 'TraceStream':
        records = list(records)
        return cls(lambda: enumerate(records, start=1), name=name)

    def __iter__(self) -> Iterator[QueryRecord]:
        last_ts = None
        for line_no, rec in self._factory():
            if last_ts is not None and rec.ts < last_ts:
                raise MonotonicityViolation(
                    f'ts {rec.ts} precedes previous ts {last_ts}', line_no
                )
            last_ts = rec.ts
            yield rec

    def seconds(self, tick: int = 1) -> Iterator[Tuple[int, List[QueryRecord]]]:
        return iter_ticks(self, tick)


def iter_ticks(records: Iterable[QueryRecord], tick: int = 1) -> Iterator[Tuple[int, List[QueryRecord]]]:
    """Groups a time-ordered stream into (tick start, records) pairs, emitting empty ticks too."""

    current = None
    bucket = []
    for rec in records:
        t = int(rec.ts // tick) * tick
        if current is None:
            current = t
        while t > current:
            yield current, bucket
            bucket = []
            current += tick
        bucket.append(rec)
    if current is not None:
        yield current, bucket


def read_trace(path: str) -> TraceStream:
    if not os.path.isfile(path):
        raise TraceIOError(f'no such trace file: {path}')

    def lines():
        try:
            with open(path, 'rb') as f:
                for line_no, raw in enumerate(f, start=1):
                    try:
                        line = raw.decode('utf-8')
                    except UnicodeDecodeError as e:
                        raise MalformedLine(f'not valid UTF-8 ({e.reason} at byte {e.start})', line_no)
                    if not line.strip():
                        continue
                    yield line_no, parse_trace_line(line, line_no)
        except OSError as e:
            raise TraceIOError(f'reading {path} failed: {e}')

    return TraceStream(lines, name=path)


def write_trace(stream: Iterable[QueryRecord], path: str) -> int:
    """Writes the stream as JSON lines and returns the number of records written."""

    if not isinstance(stream, TraceStream):
        records = stream
        stream = TraceStream(lambda: enumerate(records, start=1))

    n = 0
    try:
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            for rec in stream:
                f.write(format_trace_line(rec))
                f.write('\n')
                n += 1
    except OSError as e:
        raise TraceIOError(f'writing {path} failed: {e}')

    logger.debug('wrote %d records to %s', n, path)
    return n
