"""Command-line entry point.

One subcommand per pipeline stage plus ``report``:

    latticewave validate --config run.json
    latticewave simulate --config run.json --out override_dir
    latticewave report --out run_dir

The subcommand names the terminal stage; dependencies are pulled in
automatically (and noted in the manifest).  ``--stage`` adds further
stages, ``--seed`` and ``--jobs`` override the config values.

Exit codes: 0 all requested work succeeded and validations passed,
1 usage or configuration error, 2 a numerical stage failed,
3 stages ran but a validation check is red.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import parse_config
from .errors import LatticeWaveError, SchemaError
from .pipeline import STAGES, emit_report, run_pipeline

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticewave",
        description="periodic wavetrains of lattice systems: profiles, "
        "Bloch spectra, modulation systems, ring dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration (JSON)")
    common.add_argument("--out", help="override the output directory")
    common.add_argument(
        "--stage",
        action="append",
        default=[],
        choices=STAGES,
        help="additional stage to run (repeatable)",
    )
    common.add_argument("--jobs", type=int, help="worker count override")
    common.add_argument("--seed", type=int, help="seed override")

    for name in STAGES:
        sub.add_parser(name, parents=[common], help=f"run through the {name} stage")

    rep = sub.add_parser("report", help="summarize an existing run directory")
    rep.add_argument("--out", help="run directory (or take it from --config)")
    rep.add_argument("--config", help="config whose 'out' names the run directory")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "report":
        out = args.out
        if out is None and args.config is not None:
            try:
                out = parse_config(args.config).out
            except (SchemaError, OSError) as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 1
        if out is None:
            print("error: report needs --out or --config", file=sys.stderr)
            return 1
        try:
            emit_report(out)
        except LatticeWaveError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(f"report written under {out}")
        return 0

    try:
        cfg = parse_config(args.config)
    except SchemaError as exc:
        print("configuration invalid:", file=sys.stderr)
        for path, msg in exc.violations:
            print(f"  {path}: {msg}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    overrides = {}
    if args.out is not None:
        overrides["out"] = args.out
    if args.jobs is not None:
        if args.jobs < 1:
            print("error: --jobs must be >= 1", file=sys.stderr)
            return 1
        overrides["jobs"] = args.jobs
    if args.seed is not None:
        if args.seed < 0:
            print("error: --seed must be >= 0", file=sys.stderr)
            return 1
        overrides["seed"] = args.seed
    if overrides:
        cfg = replace(cfg, **overrides)

    stages = list(dict.fromkeys([args.command] + args.stage))
    manifest = run_pipeline(cfg, stages)
    for name, status in manifest.stages.items():
        print(f"{name}: {status}")
    if manifest.validation_passed is not None:
        print(f"validation: {'pass' if manifest.validation_passed else 'FAIL'}")
    print(f"manifest: {cfg.out}/manifest.json")

    if any(s.startswith("failed") for s in manifest.stages.values()):
        return 2
    if manifest.validation_passed is False:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
