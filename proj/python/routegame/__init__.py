"""Repeated routing games with learning and LLM agents."""

from ._routegame import *  # noqa: F401,F403
from ._routegame import RUNLOG_SCHEMA_VERSION, cli

__all__ = [name for name in dir() if not name.startswith("_")]


def main() -> int:
    import sys

    code, out, err = cli(sys.argv[1:])
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
