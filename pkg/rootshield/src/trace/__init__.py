from .QueryRecord import QueryRecord, QueryView, parse_trace_line, format_trace_line, normalize_qname, \
    MALFORMED_QNAME, NONE_QTYPE, PROTOCOLS, LABELS
from .QnameSegments import QnameSegments, segment_qname, is_suffix, LEVELS
from .TraceStream import TraceStream, read_trace, write_trace, iter_ticks
