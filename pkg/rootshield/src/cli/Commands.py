"""
The operator commands. Each takes the parsed arguments and returns an exit code; usage problems
raise ConfigError, which main() turns into exit code 2.
"""

import ipaddress
import json
import logging
import os
import sys
from typing import List, Optional

from ..engine.EngineConfig import EngineConfig, parse_mode
from ..engine.Metrics import MetricsReport, format_reports
from ..engine.ReplayEngine import ReplayEngine, replay
from ..exceptions import ConfigError, InvalidPipeline
from ..filters.FilterParams import FilterParams
from ..filters.FrequentQuery import FqRule
from ..filters.TableStore import load_tables, save_tables
from ..filters.Verdict import FilterId
from ..rules.Renderers import RENDERERS, render
from ..rules.RuleSet import AllowSetBlock, QnameBlock, RuleSet, SourceBlock, SourceSet, TtlMismatchBlock
from ..selector.Deployment import validate_pipeline
from ..synth.Polymorphic import gen_scenario
from ..synth.Profiles import AttackPlan, LegitProfile
from ..trace.TraceStream import read_trace, write_trace
from ..utils import dump_json, load_json


logger = logging.getLogger(__name__)


PARAM_FLAGS = ('l_fq', 'f_fq', 'l_ur', 'l_hc', 'u_ur', 'u_hc', 'l_wr', 'wr_refresh', 't_wr', 'f_acc', 'fq_rule_cap')
SEED_ENV = 'DDIDD_SEED'


# HELPERS

def require_file(path: Optional[str], what: str) -> str:
    if not path:
        raise ConfigError(f'{what} is required')
    if not os.path.isfile(path):
        raise ConfigError(f'{what} {path} does not exist')
    return path


def resolve_seed(args) -> Optional[int]:
    """--seed, else the DDIDD_SEED environment variable, else None"""
    if getattr(args, 'seed', None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == '':
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f'{SEED_ENV}={env!r} is not an integer')


def resolve_config(args, **fields) -> EngineConfig:
    """defaults < --config file < explicit flags"""

    config = EngineConfig.load_from_config(require_file(args.config, '--config')) if args.config \
        else EngineConfig()

    overrides = {k: getattr(args, k, None) for k in PARAM_FLAGS}
    params = config.params.with_overrides(**overrides)

    seed = resolve_seed(args)
    fields = {k: v for k, v in fields.items() if v is not None}
    if seed is not None:
        fields['seed'] = seed
    try:
        return EngineConfig.load({k: v for k, v in fields.items() if k != 'params'},
                                 base=config.with_overrides(params=params))
    except ValueError as e:
        raise ConfigError(str(e))


def log_config(command: str, data: dict):
    logger.info('%s config: %s', command, json.dumps(data, sort_keys=True))


def emit(text: str, out: Optional[str] = None):
    if out:
        with open(out, 'w', encoding='utf-8') as f:
            f.write(text)
            if text and not text.endswith('\n'):
                f.write('\n')
    else:
        sys.stdout.write(text)
        if text and not text.endswith('\n'):
            sys.stdout.write('\n')


def _stem(path: str) -> str:
    base, ext = os.path.splitext(path)
    return base if ext in ('.jsonl', '.json', '.csv', '.txt') else path


# COMMANDS

def cmd_learn(args) -> int:
    peace = require_file(args.peace, '--peace')
    config = resolve_config(args, peace_path=peace)
    config.validate(check_paths=False)
    log_config('learn', config.to_dict())

    with ReplayEngine(config) as engine:
        engine.prime(read_trace(peace))
        written = save_tables(engine.tables, args.out)
    for path in written:
        logger.info('wrote %s', path)
    return 0


def cmd_synth(args) -> int:
    profile = LegitProfile.load_from_config(require_file(args.profile, '--profile')) if args.profile \
        else LegitProfile()
    plan = AttackPlan.load_from_config(require_file(args.attacks, '--attacks'))

    seed = resolve_seed(args)
    if seed is not None:
        profile = LegitProfile.load({'seed': seed}, base=profile)
        plan = AttackPlan(
            [a.load({'seed': seed + i + 1}, base=a) for i, a in enumerate(plan.attacks)],
            [c.load({'seed': seed + 100 + i}, base=c) for i, c in enumerate(plan.flash_crowds)],
            plan.background_start, plan.background_end,
        )

    stem = _stem(args.out)
    peace_out = args.peace_out or stem + '.peace.jsonl'
    manifest_out = stem + '.manifest.json'
    log_config('synth', {'profile': profile.to_dict(), 'plan': plan.to_dict(),
                         'out': args.out, 'peace_out': peace_out})

    peace, attack, provenance = gen_scenario(plan, profile)
    n_peace = write_trace(peace, peace_out)
    n_attack = write_trace(attack, args.out)

    provenance.update({'peace_trace': peace_out, 'peace_records': n_peace,
                       'attack_trace': args.out, 'attack_records': n_attack})
    dump_json(provenance, manifest_out)
    logger.info('wrote %d peace and %d attack records, manifest %s', n_peace, n_attack, manifest_out)
    return 0


def _replay_config(args, mode: str, timeline: Optional[str]) -> EngineConfig:
    return resolve_config(
        args,
        peace_path=require_file(args.peace, '--peace'),
        attack_path=require_file(args.attack, '--attack'),
        mode=mode,
        max_attack_seconds=args.max_attack_seconds,
        strict_ordering=True if args.strict_ordering else None,
        threaded_learning=True if args.threaded else None,
        timeline_path=timeline,
    )


def cmd_replay(args) -> int:
    mode = parse_mode(args.mode)
    if args.timeline:
        timeline = args.timeline
    elif args.out:
        timeline = _stem(args.out) + '.timeline.csv'
    else:
        timeline = f'{_stem(args.attack)}.{mode}.timeline.csv'

    report = replay(_replay_config(args, mode, timeline))
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.out:
        report.save(args.out)
    emit(text)
    return 0


def cmd_compare(args) -> int:
    modes = [parse_mode(m) for m in args.modes.split(',') if m.strip()]
    if not modes:
        raise ConfigError('--modes lists no mode')

    reports: List[MetricsReport] = []
    for mode in modes:
        timeline = f'{_stem(args.out)}.{mode}.timeline.csv' if args.out else None
        reports.append(replay(_replay_config(args, mode, timeline)))

    if args.out:
        dump_json([r.to_dict() for r in reports], args.out)
    if args.json:
        emit(json.dumps([r.summary_row() for r in reports], indent=2))
    else:
        emit(format_reports(reports))
    return 0


def parse_qname_rule(spec: str) -> FqRule:
    """KIND:VALUE with KIND one of tld, subdomain, full (suffix and exact are accepted as aliases)"""
    kind, sep, value = spec.partition(':')
    kind = {'suffix': 'subdomain', 'exact': 'full'}.get(kind.strip().lower(), kind.strip().lower())
    if not sep or not value or kind not in ('tld', 'subdomain', 'full'):
        raise ConfigError(f'--qname expects KIND:VALUE with KIND tld|subdomain|full, got {spec!r}')
    return FqRule(kind, value.strip().lower().rstrip('.'), 0.0)


def read_sources(path: str) -> List[str]:
    """one IPv4 address per line; blank lines and # comments are skipped"""
    sources = []
    with open(require_file(path, '--block-src'), 'rb') as f:
        for line_no, raw in enumerate(f, start=1):
            try:
                line = raw.decode('utf-8').strip()
            except UnicodeDecodeError:
                raise ConfigError(f'{path} line {line_no}: not valid UTF-8')
            if not line or line.startswith('#'):
                continue
            try:
                sources.append(str(ipaddress.IPv4Address(line)))
            except ValueError:
                raise ConfigError(f'{path} line {line_no}: {line!r} is not an IPv4 dotted-quad')
    return sources


def cmd_render(args) -> int:
    config = resolve_config(args)
    params: FilterParams = config.params
    try:
        ids = [FilterId.parse(s) for s in args.pipeline.split(',') if s.strip()]
        validate_pipeline(ids, config.strict_ordering)
    except (ValueError, InvalidPipeline) as e:
        raise ConfigError(f'--pipeline: {e}')
    if args.format not in RENDERERS:
        raise ConfigError(f'--format must be one of {", ".join(RENDERERS)}')

    tables = None
    if FilterId.UR in ids or FilterId.HC in ids:
        if not args.tables or not os.path.isdir(args.tables):
            raise ConfigError(f'--tables {args.tables} is not a directory')
        tables = load_tables(args.tables, params)

    blocked = read_sources(args.block_src) if args.block_src else []
    block_filter = FilterId.parse(args.block_filter) if args.block_filter else None
    log_config('render', {'pipeline': [str(i) for i in ids], 'format': args.format,
                          'qname': args.qname or [], 'block_filter': str(block_filter or ''),
                          'blocked_sources': len(blocked), 'params': params.to_dict()})

    blocks = []
    for fid in ids:
        if fid is FilterId.UR:
            if tables.allow_list is None:
                raise ConfigError(f'{args.tables} holds no allow-list')
            blocks.append(AllowSetBlock(SourceSet.of(tables.allow_list.sources)))
        elif fid is FilterId.HC:
            if tables.ttl_table is None:
                raise ConfigError(f'{args.tables} holds no TTL table')
            blocks.append(TtlMismatchBlock.of(tables.ttl_table.entries))
        elif fid is FilterId.FQ_t:
            if not args.qname:
                raise ConfigError('FQ_t needs at least one --qname')
            blocks.append(QnameBlock.of([parse_qname_rule(q) for q in args.qname]))
        else:
            if block_filter is not fid:
                raise ConfigError(f'{fid} needs --block-src FILE --block-filter {fid}')
            blocks.append(SourceBlock(fid, SourceSet.of(blocked)))

    emit(render(RuleSet(blocks, params.fq_rule_cap), args.format, params), args.out)
    return 0


def cmd_report(args) -> int:
    reports = []
    for path in args.inputs:
        doc = load_json(require_file(path, '--in'))
        try:
            reports += [MetricsReport.from_dict(d) for d in (doc if isinstance(doc, list) else [doc])]
        except (TypeError, ValueError) as e:
            raise ConfigError(f'{path}: not a replay report ({e})')
    emit(format_reports(reports))
    return 0


COMMANDS = {
    'learn': cmd_learn,
    'synth': cmd_synth,
    'replay': cmd_replay,
    'compare': cmd_compare,
    'render': cmd_render,
    'report': cmd_report,
}
