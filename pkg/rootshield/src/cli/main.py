import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from .Commands import COMMANDS
from ..engine.EngineConfig import MODES
from ..exceptions import ConfigError, RootShieldError
from ..rules.Renderers import RENDERERS


LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'
LOG_LEVEL_ENV = 'ROOTSHIELD_LOG_LEVEL'

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def setup_logging(level: str) -> logging.Handler:
    """one stream handler on the package logger"""
    logger = logging.getLogger('rootshield')
    try:
        logger.setLevel(level.upper())
    except ValueError:
        raise ConfigError(f'unknown log level {level!r}')
    for h in list(logger.handlers):
        if getattr(h, '_rootshield', False):
            logger.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._rootshield = True
    logger.addHandler(handler)
    return handler


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='engine settings JSON; explicit flags take precedence')
    common.add_argument('--log-level', default=os.environ.get(LOG_LEVEL_ENV, 'INFO'),
                        help=f'logging level (default: INFO, env {LOG_LEVEL_ENV})')
    common.add_argument('--seed', type=int, default=None, help='random seed (fallback: env DDIDD_SEED)')

    params = common.add_argument_group('filter parameters')
    params.add_argument('--l-fq', type=int, help='queries per FQ learning sample')
    params.add_argument('--f-fq', type=float, help='FQ frequency-increase threshold')
    params.add_argument('--l-ur', type=float, help='UR learning period (s)')
    params.add_argument('--l-hc', type=float, help='HC learning period (s)')
    params.add_argument('--u-ur', type=float, help='UR use period (s)')
    params.add_argument('--u-hc', type=float, help='HC use period (s)')
    params.add_argument('--l-wr', type=float, help='WR learning and use period (s)')
    params.add_argument('--wr-refresh', type=float, help='WR rebuild interval (s)')
    params.add_argument('--t-wr', type=float, help='WR deviance threshold')
    params.add_argument('--f-acc', type=float, help='acceptable-load multiplier')
    params.add_argument('--fq-rule-cap', type=int, help='maximum number of FQ_t rules')
    return common


def _replay_arguments(p: argparse.ArgumentParser):
    p.add_argument('--peace', required=True, help='peace-time trace (JSON lines)')
    p.add_argument('--attack', required=True, help='trace to defend (JSON lines)')
    p.add_argument('--max-attack-seconds', type=int, help='stop this many seconds after the attack starts')
    p.add_argument('--strict-ordering', action='store_true', help='never run HC or WR alone')
    p.add_argument('--threaded', action='store_true', help='build tables on a worker thread')
    p.add_argument('--out', help='also write the report JSON here')


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog='rootshield',
        description='Learn, replay and compare DDoS filters for DNS root servers.',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('learn', parents=[common], help='learn filter tables from a peace trace')
    p.add_argument('--peace', required=True, help='peace-time trace (JSON lines)')
    p.add_argument('--out', required=True, help='directory for the table files')

    p = sub.add_parser('synth', parents=[common], help='generate labeled peace and attack traces')
    p.add_argument('--profile', help='legit profile JSON (default: built-in profile)')
    p.add_argument('--attacks', required=True, help='attacks JSON: a list of attacks or an attack plan')
    p.add_argument('--out', required=True, help='attack trace to write')
    p.add_argument('--peace-out', help='peace trace to write (default: next to --out)')

    p = sub.add_parser('replay', parents=[common], help='replay a trace through the defense')
    _replay_arguments(p)
    p.add_argument('--mode', default='ddidd', help=f'one of {", ".join(MODES)} (default: ddidd)')
    p.add_argument('--timeline', help='timeline CSV (default: next to the report)')

    p = sub.add_parser('compare', parents=[common], help='replay one trace under several modes')
    _replay_arguments(p)
    p.add_argument('--modes', default='FQ,UR,HC,WR,ddidd', help='comma-separated modes')
    p.add_argument('--json', action='store_true', help='print JSON rows instead of the aligned table')

    p = sub.add_parser('render', parents=[common], help='render firewall rules for a pipeline')
    p.add_argument('--tables', help='directory written by learn')
    p.add_argument('--pipeline', required=True, help='comma-separated filters in order, e.g. UR,HC')
    p.add_argument('--qname', action='append', metavar='KIND:VALUE', help='an FQ_t rule (repeatable)')
    p.add_argument('--block-src', help='file with one blocked address per line')
    p.add_argument('--block-filter', choices=['WR', 'FQ_s', 'AR'], help='the filter --block-src belongs to')
    p.add_argument('--format', default='neutral', choices=list(RENDERERS))
    p.add_argument('--out', help='write the rules here instead of stdout')

    p = sub.add_parser('report', parents=[common], help='print saved reports as a table')
    p.add_argument('--in', dest='inputs', nargs='+', required=True, help='report JSON files')

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    try:
        handler = setup_logging(args.log_level)
    except ConfigError as e:
        print(f'rootshield: {e}', file=sys.stderr)
        return EXIT_USAGE

    log = logging.getLogger(__name__)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f'rootshield {args.command}: {e}', file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as e:
        print(f'rootshield {args.command}: invalid JSON input ({e})', file=sys.stderr)
        return EXIT_USAGE
    except (RootShieldError, OSError) as e:
        log.debug('%s failed', args.command, exc_info=True)
        print(f'rootshield {args.command}: {e}', file=sys.stderr)
        return EXIT_FAILURE
    finally:
        logging.getLogger('rootshield').removeHandler(handler)


if __name__ == '__main__':
    sys.exit(main())
