"""Transient convergence tables for the coupled convection system.

Two sweeps: the manufactured transient (exact errors at the final time,
step tied to the mesh) and the heated-cavity benchmark (errors against
the stored fine-grid reference at steady state).  The cavity sweep needs
the reference bundle; generate it once with `natconv reference` or pass
--reference-path.
"""

import argparse
import pathlib

from natconv.analysis import emit_table
from natconv.study import StudyConfig, run_study


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mesh-seq", default="20,40,80")
    ap.add_argument("--quick", action="store_true",
                    help="small meshes only, for a smoke run")
    ap.add_argument("--skip-cavity", action="store_true",
                    help="manufactured sweep only (no reference needed)")
    ap.add_argument("--reference-path", default="")
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    meshes = (4, 8) if args.quick else tuple(
        int(t) for t in args.mesh_seq.split(","))
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    sweeps = [StudyConfig(case="nc-nour", mesh_sizes=meshes)]
    if not args.skip_cavity:
        sweeps.append(StudyConfig(case="nc-sq", mesh_sizes=meshes,
                                  reference_path=args.reference_path))
    for config in sweeps:
        table = run_study(config)
        stem = out / config.case
        stem.with_suffix(".csv").write_text(emit_table(table, "csv"))
        stem.with_suffix(".md").write_text(emit_table(table, "markdown"))
        print(emit_table(table, "markdown"))
        print(f"wrote {stem}.csv and {stem}.md")


if __name__ == "__main__":
    main()
