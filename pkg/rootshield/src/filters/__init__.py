from .FilterParams import FilterParams
from .Verdict import FilterId, Action, Verdict, verdict_for, FILTER_ORDER
from .Filter import Filter, SourceSetFilter, Pipeline, sequential_drops
from .FrequentQuery import QnameFreqTable, FqRule, FqMatcher, FqLearner, FqTextFilter, FqSourceFilter, \
    fq_learn, fq_detect, fq_verdict_t, fq_identify_sources, fq_verdict_s, check_rule_cap
from .UnknownRecursive import AllowList, AllowListFilter, UrLearner, ur_build, ur_verdict
from .HopCount import TtlTable, HopCountFilter, HcLearner, hc_build, hc_verdict
from .WildRecursive import RateTable, RateTracker, WrLearner, WildRecursiveFilter, fit_rate_model, \
    wr_learn, wr_score, wr_verdict
from .AggressiveRecursive import AggressiveRecursiveFilter, ar_select
from .Estimation import CandidateEvaluation, PeaceSample, estimate
from .TableStore import FilterStateBundle, save_tables, load_tables
