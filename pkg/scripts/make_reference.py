"""Regenerate the bundled heated-cavity reference solve.

Records the exact provenance of the artifact shipped under data/:
quadratic-velocity, linear-pressure, quadratic-temperature discretization
at zero penalty (pinned pressure mean), marched to steady state.  The
default size fits a ~6 GB desk machine; raise --n on bigger hardware.
"""

import argparse

from natconv.cli import main as cli_main


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--ra", type=float, default=1e4)
    ap.add_argument("--pr", type=float, default=0.71)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    argv = ["reference", "--n", str(args.n), "--ra", str(args.ra),
            "--pr", str(args.pr)]
    if args.out:
        argv += ["--out", args.out]
    raise SystemExit(cli_main(argv))


if __name__ == "__main__":
    main()
