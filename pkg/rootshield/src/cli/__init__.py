from .main import main, build_parser, setup_logging, EXIT_OK, EXIT_FAILURE, EXIT_USAGE
from .Commands import COMMANDS, cmd_learn, cmd_synth, cmd_replay, cmd_compare, cmd_render, cmd_report
