"""Command line front end.

Four subcommands:

  project    penalized Stokes projection sweep (cases mp-bur, mp-nc)
  convect    coupled transient sweep (cases nc-nour, nc-sq)
  study      the same sweep machinery driven by a YAML config
  reference  generate and store the fine-grid cavity solve

project/convect are thin presets over the study runner; every flag they
accept is also a config key, and explicit flags win over the file.
Tables go to --out (or stdout) as csv or markdown.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import yaml

from .analysis import emit_table
from .cases import GAMMA_POLICIES, make_case
from .reference import default_reference_path, generate_reference, save_reference
from .study import StudyConfig, run_study

log = logging.getLogger(__name__)


def _int_list(text: str) -> tuple:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _str_list(text: str) -> tuple:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _add_study_flags(p: argparse.ArgumentParser, case_choices) -> None:
    p.add_argument("--case", choices=case_choices, default=None,
                   help="benchmark case id")
    p.add_argument("--elements", default=None,
                   help="element triple or pair, e.g. p1-p1-p1 or p1-p0")
    p.add_argument("--mesh-seq", type=_int_list, default=None, metavar="N,N,...",
                   help="mesh subdivision counts, e.g. 20,40,80,160")
    p.add_argument("--gamma", type=_str_list, default=None, metavar="POL,...",
                   help="penalty policies (%s)" % ", ".join(GAMMA_POLICIES))
    p.add_argument("--scheme", choices=("bdf1", "bdf2"), default=None)
    p.add_argument("--dt-rule", default=None,
                   help="time step rule: h, h/2, 2h, tf/16 or a number")
    p.add_argument("--norms", type=_str_list, default=None, metavar="NORM,...",
                   help="error norms to record (default per case)")
    p.add_argument("--steady-tol", type=float, default=None)
    p.add_argument("--reference-path", default=None,
                   help="stored reference bundle for cases without exact fields")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes for independent cells")
    p.add_argument("--deep", action="store_true", default=None,
                   help="extend the sweep with a 320 subdivision row")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "markdown"), default=None,
                   help="table format (default csv, or by --out suffix)")
    p.add_argument("--norm", default=None,
                   help="emit a single norm block instead of all recorded ones")
    p.add_argument("--config", default=None, help="YAML config file")
    p.add_argument("--quiet", action="store_true", help="suppress progress logs")


_FLAG_KEYS = ("case", "elements", "mesh_seq", "gamma", "scheme", "dt_rule",
              "norms", "steady_tol", "reference_path", "jobs", "deep")
_CONFIG_KEYS = {
    "case": "case", "elements": "elements", "mesh_seq": "mesh_sizes",
    "gamma": "gamma_policies", "scheme": "scheme", "dt_rule": "dt_rule",
    "norms": "norms", "steady_tol": "steady_tol",
    "reference_path": "reference_path", "jobs": "jobs", "deep": "deep",
}


def _study_config(args, default_case: str | None = None) -> StudyConfig:
    raw: dict = {}
    if args.config:
        with open(args.config) as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"{args.config}: expected a mapping at top level")
        raw.update(loaded)
    for flag in _FLAG_KEYS:
        val = getattr(args, flag)
        if val is not None:
            raw[_CONFIG_KEYS[flag]] = val
    if default_case is not None:
        # subcommand preset; must not override a case named in the file
        raw.setdefault("case", default_case)
    for seq_key in ("mesh_sizes", "gamma_policies", "norms"):
        if seq_key in raw and raw[seq_key] is not None:
            raw[seq_key] = tuple(raw[seq_key])
    try:
        config = StudyConfig(**raw)
    except TypeError as exc:
        raise ValueError(f"bad config: {exc}") from None
    for pol in config.gamma_policies:
        if pol not in GAMMA_POLICIES:
            raise ValueError(f"unknown penalty policy {pol!r}; "
                             f"choose from {', '.join(GAMMA_POLICIES)}")
    make_case(config.case)  # raises on unknown ids
    return config


def _emit(table, args) -> int:
    fmt = args.format
    if fmt is None:
        if args.out and args.out.endswith((".md", ".markdown")):
            fmt = "markdown"
        else:
            fmt = "csv"
    text = emit_table(table, fmt, norm=args.norm)
    if args.out:
        parent = os.path.dirname(os.path.abspath(args.out))
        os.makedirs(parent, exist_ok=True)
        with open(args.out, "w") as fh:
            fh.write(text)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)
    if not any(r.ok for r in table.records):
        log.error("every cell of the sweep failed")
        return 1
    return 0


def _run_sweep(args, kind: str | None, default_case: str | None = None) -> int:
    config = _study_config(args, default_case)
    case = make_case(config.case)
    if kind is not None and case.study != kind:
        raise ValueError(
            f"case {config.case!r} is a {case.study} case; "
            f"use the {'project' if case.study == 'projection' else 'convect'} "
            f"subcommand or plain 'study'")
    table = run_study(config)
    return _emit(table, args)


def cmd_project(args) -> int:
    return _run_sweep(args, "projection", default_case="mp-bur")


def cmd_convect(args) -> int:
    return _run_sweep(args, "transient", default_case="nc-nour")


def cmd_study(args) -> int:
    return _run_sweep(args, None)


def cmd_reference(args) -> int:
    path = args.out or default_reference_path(args.n)
    ref, diag = generate_reference(
        n=args.n, Ra=args.ra, Pr=args.pr, steady_tol=args.steady_tol,
    )
    save_reference(ref, path)
    log.info("steady in %d steps; wrote %s", len(diag.steps), path)
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="natconv",
        description="penalized equal-order schemes for buoyancy-driven flow",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="Stokes projection convergence sweep")
    _add_study_flags(p, ("mp-bur", "mp-nc"))
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("convect", help="coupled transient convergence sweep")
    _add_study_flags(p, ("nc-nour", "nc-sq"))
    p.set_defaults(func=cmd_convect)

    p = sub.add_parser("study", help="config-driven convergence sweep")
    _add_study_flags(p, ("mp-bur", "mp-nc", "nc-nour", "nc-sq"))
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("reference", help="generate the stored cavity reference")
    p.add_argument("--n", type=int, default=128, help="mesh subdivisions")
    p.add_argument("--ra", type=float, default=1e4)
    p.add_argument("--pr", type=float, default=0.71)
    p.add_argument("--steady-tol", type=float, default=1e-8)
    p.add_argument("--out", default=None, help="npz path (default data tree)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_reference)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
