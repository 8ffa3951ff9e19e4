"""plots: render figures from archived experiment CSVs.

Exit codes: 0 success, 1 input/validation error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import sys

from .io import ResultsFormatError
from .render import KINDS, render


class _ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ValidationError(message)


def main(argv=None) -> int:
    parser = _Parser(prog="plots", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    r = sub.add_parser("render", help="render one figure from a results.csv")
    r.add_argument("--kind", required=True, choices=KINDS)
    r.add_argument("--in", dest="input", required=True, help="results.csv path")
    r.add_argument("--out", dest="output", required=True, help="output image (.svg or .png)")
    try:
        args = parser.parse_args(argv)
        render(args.kind, args.input, args.output)
        return 0
    except (_ValidationError, ResultsFormatError, ValueError) as exc:
        print(f"plots: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"plots: runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
