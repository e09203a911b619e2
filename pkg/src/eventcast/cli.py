"""Command-line entry point: ``eventcast <command> [--config FILE] [--section.key VALUE ...]``."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from . import __version__
from .config import config_keys, load_config
from .errors import EventcastError
from .pipeline import cmd_forecast, cmd_preprocess, cmd_report, cmd_sweep, cmd_train
from .synth import write_synth

COMMANDS = {
    "preprocess": (cmd_preprocess, "encode, discretize and variance-filter the dataset"),
    "train": (cmd_train, "train and compare learners, reduce features, save the winning bundle"),
    "sweep": (cmd_sweep, "metrics against the number of selected features (kbest or rfe)"),
    "forecast": (cmd_forecast, "classify the event space of the saved bundle"),
    "report": (cmd_report, "collect run artifacts into summary tables"),
}

log = logging.getLogger("eventcast")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="TOML config file")
    group = p.add_argument_group("config overrides (each flag mirrors its config key)")
    for key, default in config_keys().items():
        shown = ",".join(default) if isinstance(default, list) else default
        group.add_argument(f"--{key}", dest=key, metavar="VALUE", default=None,
                           help=f"default: {shown!s}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eventcast", description=__doc__)
    parser.add_argument("--version", action="version", version=f"eventcast {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        _add_config_flags(sub.add_parser(name, help=help_text, description=help_text))
    s = sub.add_parser("synth", help="write a synthetic flow CSV with a planted class signal")
    s.add_argument("--n_rows", type=int, default=4000)
    s.add_argument("--n_classes", type=int, default=6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, metavar="CSV")
    return parser


def _overrides(ns: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(ns).items() if k in config_keys() and v is not None}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        if ns.command == "synth":
            path = write_synth(ns.out, ns.n_rows, ns.n_classes, ns.seed)
            print(f"wrote {ns.n_rows} rows ({ns.n_classes} classes) to {path}")
            return 0
        cfg = load_config(ns.config, _overrides(ns))
        COMMANDS[ns.command][0](cfg)
        return 0
    except EventcastError as exc:
        print(f"eventcast {ns.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # anything else is a bug, not bad input
        log.debug("internal error", exc_info=True)
        print(f"eventcast {ns.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
