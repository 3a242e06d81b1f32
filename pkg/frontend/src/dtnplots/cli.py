"""``dtnplots render --kind <spectrum|fd|decay|energy|shape> --in ... --out ...``"""
from __future__ import annotations

import argparse
import sys

from .figures import RENDERERS
from .io import SchemaError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dtnplots", description="Render figures from dtnlab run artifacts."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure")
    p.add_argument("--kind", required=True, choices=sorted(RENDERERS))
    p.add_argument("--in", dest="in_path", required=True,
                   help="input CSV/JSON artifact")
    p.add_argument("--out", dest="out_path", required=True,
                   help="output image path")
    args = parser.parse_args(argv)
    try:
        info = RENDERERS[args.kind](args.in_path, args.out_path)
    except SchemaError as exc:
        print(f"dtnplots: {exc}", file=sys.stderr)
        return 2
    details = ", ".join(f"{k}={v}" for k, v in info.items())
    print(f"render[{args.kind}]: wrote {args.out_path} ({details})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
