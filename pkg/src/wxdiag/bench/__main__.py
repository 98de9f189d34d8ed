"""Rebuild the shipped benchmark tree: python3 -m wxdiag.bench <out_root>."""

import sys

from .suite import build_all


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if len(argv) != 1:
        print("usage: python3 -m wxdiag.bench <out_root>", file=sys.stderr)
        return 64
    built = build_all(argv[0])
    for suite, paths in sorted(built.items()):
        print(f"{suite}: {len(paths)} cases")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
