"""Command-line front end: run / compare / replay."""

import argparse
import dataclasses
import json
import sys

from .errors import ConfigurationError
from .harness import (
    POLICIES,
    ExperimentConfig,
    compare_policies,
    replay_events,
    run_experiment,
)

_FLAG_SKIP = {"policy", "seed"}  # bound explicitly per subcommand


def _add_config_flags(parser: argparse.ArgumentParser):
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in _FLAG_SKIP:
            continue
        flag = "--" + f.name.replace("_", "-")
        kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
        if "bool" in kind:
            parser.add_argument(flag, type=_parse_bool, default=None, metavar="BOOL")
        elif kind == "tuple":
            parser.add_argument(flag, type=_parse_int_tuple, default=None, metavar="N,N,...")
        elif kind == "int":
            parser.add_argument(flag, type=int, default=None)
        elif kind == "float":
            parser.add_argument(flag, type=float, default=None)
        else:
            parser.add_argument(flag, type=str, default=None)


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _parse_int_tuple(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x)


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_dict(json.load(fh))
    elif args.paper_defaults:
        cfg = ExperimentConfig.paper_defaults()
    else:
        cfg = ExperimentConfig()
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in _FLAG_SKIP:
            continue
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vnfmigsim",
        description="VNF forwarding-graph migration simulator for edge-core networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one policy for a number of episodes")
    run_p.add_argument("--policy", choices=POLICIES, default="a2c-dt")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--out-dir", default="runs/run")
    run_p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    run_p.add_argument(
        "--paper-defaults",
        action="store_true",
        help="restore every Table-I value verbatim (including learning rate 0.1)",
    )
    _add_config_flags(run_p)

    cmp_p = sub.add_parser("compare", help="run several policies across seeds")
    cmp_p.add_argument(
        "--policies", default="a2c-dt,threshold,random", help="comma-separated list"
    )
    cmp_p.add_argument("--seeds", default="0", help="comma-separated integer seeds")
    cmp_p.add_argument("--out-dir", default="runs/compare")
    cmp_p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    cmp_p.add_argument("--paper-defaults", action="store_true")
    cmp_p.add_argument("--seed", type=int, default=None, help=argparse.SUPPRESS)
    _add_config_flags(cmp_p)

    rep_p = sub.add_parser("replay", help="recompute metrics from an event log")
    rep_p.add_argument("--events", required=True, help="path to events.jsonl")
    rep_p.add_argument("--out", help="write recomputed metrics to this JSON file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _config_from_args(args)
            cfg.policy = args.policy
            result = run_experiment(cfg, args.out_dir)
            last = result.metrics[-1]
            print(f"wrote {args.out_dir}/metrics.csv ({len(result.metrics)} episodes)")
            print(
                f"last episode: avg_delay={last.avg_delay_ms:.3f} ms "
                f"avg_energy={last.avg_energy:.2f} accept_rate={last.accept_rate:.2f}"
            )
        elif args.command == "compare":
            cfg = _config_from_args(args)
            policies = [p for p in args.policies.split(",") if p]
            seeds = [int(s) for s in args.seeds.split(",") if s]
            for p in policies:
                if p not in POLICIES:
                    raise ConfigurationError(f"unknown policy {p!r}")
            summary = compare_policies(
                cfg,
                policies,
                seeds,
                args.out_dir,
                progress=lambda p, s: print(f"running {p} seed {s} ...", flush=True),
            )
            print(json.dumps(summary["policies"], indent=2))
            print(json.dumps(summary["reductions"], indent=2))
            print(f"wrote {args.out_dir}/summary.json and metrics.csv")
        elif args.command == "replay":
            episodes = replay_events(args.events)
            text = json.dumps(episodes, indent=2)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(text)
                print(f"wrote {args.out}")
            else:
                print(text)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
