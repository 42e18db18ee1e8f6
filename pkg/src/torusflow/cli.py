"""Command-line entry point: ``torusflow <experiment> [--config PATH] [flags]``."""

from __future__ import annotations

import os

# one BLAS thread per process; parallelism comes from the k-sweep pool
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse  # noqa: E402
import sys  # noqa: E402

from .harness import config as cfgmod  # noqa: E402
from .harness.experiments import run  # noqa: E402


def build_parser():
    p = argparse.ArgumentParser(prog="torusflow", description=__doc__)
    p.add_argument("experiment", choices=cfgmod.EXPERIMENTS + ("run",),
                   help="experiment name, or 'run' to take it from the config file")
    p.add_argument("--config", metavar="PATH", help="JSON config (see docs/config_schema.md)")
    p.add_argument("--out", metavar="DIR", help="artifact directory")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--threads", type=int, metavar="N")
    p.add_argument("--grid", type=int, metavar="G", help="time-grid size for interval estimators")
    p.add_argument("--kA", type=float, metavar="A", help="k-interval half-width")
    p.add_argument("--kM", type=int, metavar="M", help="number of k nodes")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    user = {}
    if args.config:
        try:
            user = cfgmod.load(args.config)
        except (OSError, cfgmod.ConfigError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    if not isinstance(user, dict):
        print("config error at <root>: config must be a JSON object", file=sys.stderr)
        return 2
    if args.experiment != "run":
        if user.get("experiment", args.experiment) != args.experiment:
            print(f"config error at experiment: config names {user['experiment']!r}", file=sys.stderr)
            return 2
        user = {**user, "experiment": args.experiment}
    overrides = {}
    for key in ("seed", "threads", "grid"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    k = {name: val for name, val in (("A", args.kA), ("M", args.kM)) if val is not None}
    if k:
        overrides["k"] = k
    code, out_dir = run(user, overrides, out=args.out)
    if out_dir is not None:
        print(out_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
