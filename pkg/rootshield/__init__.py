from .src.exceptions import *

# trace model
from .src.trace import QueryRecord, QueryView, TraceStream, read_trace, write_trace, parse_trace_line, \
    format_trace_line, iter_ticks

# filters
from .src.filters import FilterParams, FilterId, Verdict, Action, Filter, Pipeline, \
    AllowList, TtlTable, RateTable, QnameFreqTable, FqRule, \
    ur_build, ur_verdict, hc_build, hc_verdict, wr_learn, wr_score, wr_verdict, \
    fq_learn, fq_detect, fq_verdict_t, fq_identify_sources, fq_verdict_s, ar_select, \
    estimate, PeaceSample, CandidateEvaluation, save_tables, load_tables, FilterStateBundle

# detection and selection
from .src.detector import AttackDetector, DetectorState, DetectorEvent, LoadSample, prime_al, step
from .src.selector import DeploymentState, FilterSelector, deploy_single, deploy_combo, reevaluate, \
    is_valid_pipeline

# replay
from .src.engine import EngineConfig, ReplayEngine, MetricsReport, Timeline, replay, compute_metrics, MODES

# traffic generation
from .src.synth import LegitProfile, AttackSpec, FlashCrowdSpec, AttackPlan, LegitPopulation, gen_legit, \
    gen_attack, gen_flash_crowd, gen_polymorphic, gen_scenario, polymorphic_specs

# rules
from .src.rules import RuleSet, SourceSet, render, render_neutral, render_ipset, render_iptables, parse_neutral
