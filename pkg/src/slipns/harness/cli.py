"""Command-line entry point: `slipns <subcommand> [--config FILE] [--out DIR] ...`."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, ConfigError, RunConfig
from .experiments import RUNNERS
from .report import check_writable, emit_outputs

# Starting points per subcommand; a --config file and the flags override them.
PRESETS = {
    "kernel-check": dict(nu=(1e-5, 1e-4, 1e-3, 1e-2), beta=(1.0,), samples=100),
    "oracle-check": dict(nu=(1e-3, 1e-4), K=2, times=(0.1, 0.5, 1.0)),
    "stokes-run": dict(nu=(1e-3,), K=2, family="gaussian", T=1.0, dt=0.1),
    "ns-run": dict(nu=(1e-3,), K=8, family="two_mode", T=0.2, dt=0.02, smallness=2.0),
    "inviscid-rate": dict(nu=(1e-2, 1e-3, 1e-4, 1e-5), beta=(0.0, 0.5, 1.0), K=0, family="shear", T=1.0, dt=0.05),
    "bound-check": dict(nu=(1e-3, 1e-4, 1e-5), K=0, family="shear", T=1.0, dt=0.01),
}


def preset(experiment: str) -> RunConfig:
    return RunConfig(experiment=experiment, **PRESETS[experiment])


def _floats(text: str) -> tuple:
    return tuple(float(s) for s in text.split(",") if s.strip())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slipns", description="Navier-slip half-space solver and audit harness")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int, help="random seed (unsigned 64-bit)")
    ap.add_argument("--nu", type=_floats, help="viscosity or comma separated sweep")
    ap.add_argument("--beta", type=_floats, help="slip exponent or comma separated list")
    ap.add_argument("--modes", type=int, help="Fourier truncation K")
    ap.add_argument("--tfinal", type=float, help="final time T")
    ap.add_argument("--workers", type=int, help="concurrent sweep points")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve_config(args) -> RunConfig:
    cfg = preset(args.experiment)
    if args.config:
        cfg = RunConfig.load(args.config, base=cfg)
        cfg = cfg.replace(experiment=args.experiment)
    over = {}
    for flag, key in (("out", "out"), ("seed", "seed"), ("nu", "nu"), ("beta", "beta"), ("modes", "K"),
                      ("tfinal", "T"), ("workers", "workers")):
        val = getattr(args, flag)
        if val is not None:
            over[key] = val
    if "T" in over and cfg.times:
        over["times"] = tuple(t for t in cfg.times if t <= over["T"])
    return cfg.replace(**over) if over else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        check_writable(cfg.out)
    except (ConfigError, OSError) as exc:
        print(f"slipns: {exc}", file=sys.stderr)
        return 2
    report = RUNNERS[cfg.experiment](cfg)
    paths = emit_outputs([report], cfg.out, cfg)
    for q, ok in sorted(report.verdicts().items()):
        print(f"{'PASS' if ok else 'FAIL'}  {q}")
    for msg in report.failures:
        print(f"FAIL  {msg}")
    print(f"wrote {len(paths)} files to {cfg.out}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
