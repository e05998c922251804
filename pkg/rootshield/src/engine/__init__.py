from .EngineConfig import EngineConfig, MODES, parse_mode
from .Timeline import Timeline, TimelineRow, CSV_COLUMNS
from .Metrics import MetricsReport, compute_metrics, compare_frame, format_reports, ulq_baseline
from .ReplayEngine import ReplayEngine, replay
