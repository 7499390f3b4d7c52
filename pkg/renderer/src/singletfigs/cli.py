"""Batch figure rendering: render --spec plot.json

Exit codes: 0 success, 2 spec or input-schema error (missing columns are
named), 1 anything else.
"""
from __future__ import annotations

import argparse
import sys

from .render import render
from .schema import MissingColumnsError, SpecError, load_plot_spec


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render simulator CSV/JSON outputs as figures.")
    parser.add_argument("--spec", required=True, action="append",
                        help="plot spec JSON (repeatable)")
    args = parser.parse_args(argv)
    try:
        for spec_path in args.spec:
            spec = load_plot_spec(spec_path)
            out = render(spec)
            print(out)
    except MissingColumnsError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except (SpecError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
