"""Command line entry point: ``relgain {verify,conserve,converge,kinematics-selftest}``."""
from __future__ import annotations

import argparse
import sys

from . import experiments as ex
from .config import ConfigError, ExperimentConfig, load_config


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="TOML experiment file")
    common.add_argument("--out", type=str, help="output directory (overrides outputs.directory)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads, 0 = all (fallback: RELGAIN_THREADS)")
    common.add_argument("--seed", type=int, default=None, help="seed for random probes/sampling")

    p = argparse.ArgumentParser(prog="relgain", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="gradient-norm ratio sweeps")
    v.add_argument("--envelopes", type=str, help="envelope file (default: bundled)")
    v.add_argument("--freeze-envelope", action="store_true",
                   help="record this run's family maxima as the envelopes")
    sub.add_parser("conserve", parents=[common], help="moment and entropy audit")
    c = sub.add_parser("converge", parents=[common], help="grid refinement table")
    c.add_argument("--levels", type=int, default=None)
    c.add_argument("--max-cost", type=float, default=None)
    k = sub.add_parser("kinematics-selftest", parents=[common], help="random-sampling audits")
    k.add_argument("--scale", type=float, default=1.0, help="multiplier on the sample counts")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.seed is not None and args.seed < 0:
        print("--seed: must be a nonnegative integer", file=sys.stderr)
        return ex.EXIT_INVALID
    try:
        if args.config:
            cfg = load_config(args.config)
        elif args.command == "kinematics-selftest":
            cfg = ExperimentConfig()
        else:
            raise ConfigError(["--config: required for this subcommand"])
        threads = ex.resolve_threads(args.threads)
        common = dict(out_dir=args.out, seed=args.seed, threads=threads)
        if args.command == "verify":
            res = ex.run_verify(cfg, envelopes=args.envelopes, freeze=args.freeze_envelope, **common)
        elif args.command == "conserve":
            res = ex.run_conservation(cfg, **common)
        elif args.command == "converge":
            res = ex.run_convergence(cfg, levels=args.levels, max_cost=args.max_cost, **common)
        else:
            res = ex.run_selftest(cfg, scale=args.scale, **common)
    except ConfigError as exc:
        for line in exc.problems:
            print(f"config error: {line}", file=sys.stderr)
        return ex.EXIT_INVALID
    for msg in res.messages:
        print(msg, file=sys.stderr)
    print(f"{args.command}: exit {res.exit_code}, outputs in {res.out_dir}")
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
