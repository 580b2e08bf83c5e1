import argparse
import logging
import sys

from box import Box
from dotenv import load_dotenv

from pulse_iv import __version__
from pulse_iv.commands import diagnose, estimate, experiment, simulate
from pulse_iv.errors import PulseIVError
from pulse_iv.utils import load_config, render_template

_log = logging.getLogger(__name__)

COMMANDS = {module.NAME: module for module in (estimate, simulate, experiment, diagnose)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pulse_iv", description="K-class and PULSE instrumental-variable estimation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at INFO level")
    parser.add_argument("--app-config", help="Application config (default $PULSE_CONFIG or config.yaml)")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, module in COMMANDS.items():
        module.add_arguments(subparsers.add_parser(name, help=module.HELP))
    return parser


def main(argv: list[str] | None = None) -> int:
    """Run one subcommand and return its exit code."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.INFO)
    try:
        config: Box = load_config(args.app_config)
        return COMMANDS[args.command].main(args, config)
    except PulseIVError as e:
        _log.error(f"{type(e).__name__}: {e}")
        print(render_template("messages", "error", message=str(e)), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
