"""Projection convergence tables for the manufactured Stokes pairs.

Sweeps the penalized projection over the mesh sequence for the P1-P1 and
P1-P0 pairs and every penalty policy, then writes one CSV and one
markdown table per pair.  The equal-order pair shows the h^{1/2} loss of
the small-penalty limit and the recovery under the h-scaled policies;
the discontinuous-pressure pair shows penalty blow-up under the h^2
policy.
"""

import argparse
import pathlib

from natconv.analysis import emit_table
from natconv.study import StudyConfig, run_study


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="mp-bur", choices=("mp-bur", "mp-nc"))
    ap.add_argument("--mesh-seq", default="20,40,80,160")
    ap.add_argument("--quick", action="store_true",
                    help="small meshes only, for a smoke run")
    ap.add_argument("--deep", action="store_true",
                    help="append the 320 subdivision row")
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    meshes = (4, 8, 16) if args.quick else tuple(
        int(t) for t in args.mesh_seq.split(","))
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    for elements in ("p1-p1", "p1-p0"):
        config = StudyConfig(case=args.case, elements=elements,
                             mesh_sizes=meshes, deep=args.deep)
        table = run_study(config)
        stem = out / f"{args.case}-{elements}"
        stem.with_suffix(".csv").write_text(emit_table(table, "csv"))
        stem.with_suffix(".md").write_text(emit_table(table, "markdown"))
        print(emit_table(table, "markdown"))
        print(f"wrote {stem}.csv and {stem}.md")


if __name__ == "__main__":
    main()
