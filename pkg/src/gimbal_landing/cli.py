"""Command-line entry point.

Exit codes: 0 success, 1 usage or input error, 2 trial ran but did not
land on the pad.  Outputs go under ``--out``, defaulting to
``$GIMBAL_LANDING_OUT`` or ``./runs``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import export
from .config import ConfigError, RunConfig
from .harness import run_campaign, run_trial
from .marker_model import PROFILE_NAMES

OUT_ENV = "GIMBAL_LANDING_OUT"
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_LANDED = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV) or "runs")


def _check_profile(name: str) -> str:
    if name not in PROFILE_NAMES:
        raise UsageError(f"unknown profile {name!r}; valid names: {', '.join(PROFILE_NAMES)}")
    return name


def _run_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    over = {}
    if getattr(args, "disable_ambiguity", False):
        over["flags.ambiguity"] = False
    if getattr(args, "disable_noise", False):
        over["flags.noise"] = False
    if getattr(args, "disable_latency", False):
        over["latency.enabled"] = False
    if args.seed is not None:
        over["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        over["workers"] = args.workers
    return cfg.with_overrides(**over)


def cmd_trial(args) -> int:
    name = _check_profile(args.profile)
    cfg = _run_config(args)
    out = Path(args.out) if args.out else default_out_dir() / f"trial_{name}_seed{cfg.seed}"
    tc = cfg.trial_config(name, cfg.seed, math.radians(args.pad_yaw))
    result = run_trial(tc)
    export.write_trial(result, out, cfg.echo())
    r = "-" if result.landing_radius is None else f"{result.landing_radius:.3f} m"
    print(f"{name}  seed {cfg.seed}  {result.termination.value}  radius {r}  ({out})")
    return EXIT_OK if result.success else EXIT_NOT_LANDED


def cmd_campaign(args) -> int:
    if args.all == (args.profile is not None):
        raise UsageError("give exactly one of --profile or --all")
    names = list(PROFILE_NAMES) if args.all else [_check_profile(args.profile)]
    cfg = _run_config(args)
    root = Path(args.out) if args.out else default_out_dir() / f"campaign_seed{cfg.seed}"
    print(f"{'profile':<18}{'successes':>10}{'median radius':>16}")
    for name in names:
        c = run_campaign(cfg.profile(name), cfg.seed, cfg.workers, **cfg.trial_overrides(name))
        export.write_campaign(c, root / name, cfg.echo())
        med = c.radius_summary()["median"]
        med_s = "-" if med is None else f"{med:.3f} m"
        print(f"{name:<18}{c.successes:>7}/20{med_s:>16}")
    return EXIT_OK


def cmd_plotdata(args) -> int:
    src = Path(args.input)
    dest = Path(args.out) if args.out else (src if src.is_dir() else src.parent) / f"plot_{args.figure}.csv"
    path = export.plot_data(args.figure, src, dest)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gimbal-landing", description="Gimbal-tracking fiducial landing simulator.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--seed", type=int, help="trial seed, or campaign base seed (default 1)")
        sp.add_argument("--config", help="YAML run config")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./runs)")
        sp.add_argument("--disable-ambiguity", action="store_true")
        sp.add_argument("--disable-noise", action="store_true")
        sp.add_argument("--disable-latency", action="store_true")

    t = sub.add_parser("trial", help="run one landing attempt")
    t.add_argument("--profile", required=True, help=", ".join(PROFILE_NAMES))
    t.add_argument("--pad-yaw", type=float, default=0.0, help="pad yaw in degrees")
    common(t)
    t.set_defaults(func=cmd_trial)

    c = sub.add_parser("campaign", help="run the 20-landing campaign")
    c.add_argument("--profile", help=", ".join(PROFILE_NAMES))
    c.add_argument("--all", action="store_true", help="all five profiles")
    c.add_argument("--workers", type=int, help="parallel worker processes")
    common(c)
    c.set_defaults(func=cmd_campaign)

    d = sub.add_parser("plotdata", help="emit plot-ready tables from outputs")
    d.add_argument("--input", required=True, help="trial directory, or campaign directory for radii")
    d.add_argument("--figure", required=True, choices=export.FIGURES)
    d.add_argument("--out", help="output CSV path")
    d.set_defaults(func=cmd_plotdata)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        return args.func(args)
    except (UsageError, ConfigError, export.ExportError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
