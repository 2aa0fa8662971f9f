"""``timelens-sim`` command line entry point.

Exit codes: 0 success, 1 compute or output error, 2 configuration error.
Outputs are written to a staging directory next to ``--out`` and moved into
place only after every file has been written, so a failed run leaves nothing
behind.
"""
from __future__ import annotations

import argparse
import json
import shutil
import sys
import tempfile
from dataclasses import replace
from importlib import resources
from pathlib import Path

from . import __version__, config, hom, runner
from .errors import ConfigurationError, TimelensError
from .outputs import write_manifest

EXIT_OK, EXIT_COMPUTE, EXIT_CONFIG = 0, 1, 2

BUNDLED = {"simulate": "experiment.toml", "optimize": "table_s1.toml", "analytic": "analytic.toml",
           "spectrum": "spectrum.toml"}


def bundled_config(name: str) -> str:
    return resources.files("timelens.configs").joinpath(name).read_text(encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timelens-sim",
        description="Time-lens bandwidth conversion and HOM interference simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "simulate": "run a converter pipeline and a HOM dip scan",
        "optimize": "search lens parameters that maximise visibility",
        "analytic": "closed-form visibility limit and collimation design numbers",
        "spectrum": "time-of-flight spectrometer view of a (converted) photon",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("config", nargs="?", type=Path,
                       help=f"TOML run configuration (default: bundled {BUNDLED[name]})")
        p.add_argument("--out", type=Path, help="output directory (default: config out_dir or ./timelens-out/<command>)")
        p.add_argument("--seed", type=int, help="override the configuration seed")
        p.add_argument("--grid-n", type=int, dest="grid_n", help="override the number of grid samples")
        p.add_argument("--convention", choices=hom.CONVENTIONS, help="visibility convention for reporting/optimisation")
        if name == "analytic":
            p.add_argument("--compression", type=float, action="append",
                           help="compression factor F (repeatable); replaces the configured list")
    return parser


def load_config(args) -> tuple[config.RunConfig, str]:
    if args.config is None:
        text = bundled_config(BUNDLED[args.command])
        cfg = config.parse_config_text(text, f"<bundled {BUNDLED[args.command]}>")
    else:
        cfg = config.parse_config(args.config)
    if cfg.command is not None and cfg.command != args.command:
        raise ConfigurationError(f"configuration declares command {cfg.command!r} but "
                                 f"{args.command!r} was requested")
    cfg = replace(cfg, command=args.command)
    return apply_overrides(cfg, args), args.command


def apply_overrides(cfg: config.RunConfig, args) -> config.RunConfig:
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigurationError("--seed must be >= 0")
        cfg = replace(cfg, seed=args.seed)
    if args.grid_n is not None:
        n = args.grid_n
        if n < 1024 or n & (n - 1):
            raise ConfigurationError(f"--grid-n must be a power of two >= 1024, got {n}")
        cfg = replace(cfg, grid=replace(cfg.grid, n_samples=n),
                      optimize=tuple(replace(j, scenario=replace(j.scenario, n_samples=n)) for j in cfg.optimize))
    if args.convention is not None:
        cfg = replace(cfg, convention=args.convention,
                      optimize=tuple(replace(j, scenario=replace(j.scenario, convention=args.convention))
                                     for j in cfg.optimize))
    if getattr(args, "compression", None):
        if any(not f > 0 for f in args.compression):
            raise ConfigurationError("--compression must be positive")
        spec = cfg.analytic or config.AnalyticSpec()
        cfg = replace(cfg, analytic=replace(spec, compressions=tuple(args.compression)))
    config.validate(cfg)
    return cfg


def _publish(staging: Path, out: Path) -> None:
    if out.exists():
        if not out.is_dir():
            raise OSError(f"{out} exists and is not a directory")
        if any(out.iterdir()) and not (out / "manifest.json").exists():
            raise OSError(f"refusing to overwrite non-empty directory {out} (no manifest.json)")
        shutil.rmtree(out)
    staging.rename(out)


def _report(command: str, results: dict, out: Path) -> None:
    print(f"{command}: outputs written to {out}")
    if command == "analytic":
        for f, row in results.items():
            print(f"  F = {f}: V_michelson = {row['visibility_michelson']:.6g}, "
                  f"V_depth = {row['visibility_depth']:.6g}, GDD = {row['gdd_ps2']:.4g} ps^2, "
                  f"A = {row['amplitude_pi']:.4g} pi rad at {row['modulation_frequency_GHz']:.4g} GHz")
    elif command == "optimize":
        print((out / "table.txt").read_text(encoding="utf-8"), end="")
    else:
        for k, v in results.items():
            if isinstance(v, float):
                print(f"  {k} = {v:.6g}")
            else:
                print(f"  {k} = {v}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, command = load_config(args)
    except ConfigurationError as exc:
        print(f"timelens-sim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out or (Path(cfg.out_dir) if cfg.out_dir else Path("timelens-out") / command)
    staging = None
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=f".{out.name}.partial-", dir=out.parent))
        results = runner.run(cfg, staging)
        write_manifest(staging, command=command, config_hash=config.physics_hash(cfg), seed=cfg.seed,
                       config_text=config.serialize_config(cfg), extra=json.loads(json.dumps(results, default=str)))
        _publish(staging, out)
        staging = None
    except ConfigurationError as exc:
        print(f"timelens-sim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TimelensError as exc:
        print(f"timelens-sim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except OSError as exc:
        print(f"timelens-sim: output error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    finally:
        if staging is not None:
            shutil.rmtree(staging, ignore_errors=True)
    _report(command, results, out)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
