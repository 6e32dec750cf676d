"""Command-line surface.

Usage:
  python -m src.main gen-data --out data/clean --scenes 16
  python -m src.main synth-noise --manifest data/clean/manifest.tsv --out data/noisy --preset low
  python -m src.main train --manifest data/clean/manifest.tsv --out runs/v3d --config configs/desk.cfg
  python -m src.main denoise --checkpoint runs/v3d/final.ckpt --manifest data/noisy/manifest.tsv --out runs/v3d/out
  python -m src.main eval --outputs runs/v3d/out/manifest.tsv --truth data/clean/manifest.tsv --out runs/v3d/eval
  python -m src.main gradcheck

Exit codes: 0 ok, 1 other failure, 2 usage, 3 missing file, 4 bad config,
5 gradient check failed, 6 training diverged, 7 bad image file.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import settings
from .errors import ConfigError, DenoiseError, ShapeError
from .gradcheck import CHECKS, require_pass, run_suite
from .imaging.manifest import read_manifest
from .imaging.noise import NoiseParams, preset
from .imaging.toydata import PATTERNS, ToyDatasetConfig, make_toy_dataset
from .model.checkpoint import load_checkpoint
from .observability import configure_logging, write_metrics
from .pipeline import denoise_manifest, evaluate_manifests, summarize, synth_noise_manifest, write_reports
from .training.config import build_configs, parse_assignments, read_config_file
from .training.trainer import train

logger = logging.getLogger(__name__)


def _noise_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=["low", "high"], help="Named noise level")
    p.add_argument("--sigma-s", type=float, help="Shot-noise coefficient (linear units)")
    p.add_argument("--sigma-r", type=float, help="Read-noise standard deviation (linear units)")


def _noise_from(args, required: bool) -> Optional[NoiseParams]:
    if args.preset and (args.sigma_s is not None or args.sigma_r is not None):
        raise ConfigError("use either --preset or --sigma-s/--sigma-r, not both")
    if args.preset:
        return preset(args.preset)
    if args.sigma_s is not None or args.sigma_r is not None:
        if args.sigma_s is None or args.sigma_r is None:
            raise ConfigError("--sigma-s and --sigma-r must be given together")
        try:
            return NoiseParams(args.sigma_s, args.sigma_r)
        except ValueError as e:
            raise ConfigError(str(e)) from e
    if required:
        raise ConfigError("noise level required: --preset or --sigma-s/--sigma-r")
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deformdenoise", description="Learned deformable-kernel denoising")
    parser.add_argument("--log-level", default=None, help="Override DEFORMDENOISE_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="Write a synthetic toy dataset")
    p.add_argument("--out", type=Path, default=settings.WORKDIR / "data" / "clean")
    p.add_argument("--scenes", type=int, default=8)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--frames", type=int, default=5)
    p.add_argument("--motion", type=int, default=2)
    p.add_argument("--pattern", choices=("mixed",) + PATTERNS, default="mixed")
    p.add_argument("--format", dest="pixel_format", choices=["png16", "png8", "pgm8"], default="png16")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("synth-noise", help="Add signal-dependent noise to a manifest")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    _noise_args(p)

    p = sub.add_parser("train", help="Train the offset/weight networks")
    p.add_argument("--manifest", type=Path, required=True, help="Clean training sequences")
    p.add_argument("--out", type=Path, default=settings.WORKDIR / "train")
    p.add_argument("--config", type=Path, help="key=value config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--mode", choices=["image2d", "video2d", "video3d"])
    p.add_argument("--blind", action="store_true")
    p.add_argument("--fixed-grid", action="store_true", help="Rigid kernels (offsets forced to zero)")
    p.add_argument("--no-anneal", action="store_true", help="Drop the annealed group regulariser")
    p.add_argument("--no-dynamic-weights", action="store_true", help="Uniform 1/N kernel weights")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--resume", type=Path, help="Continue from a checkpoint")

    p = sub.add_parser("denoise", help="Denoise a manifest with a trained checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--color", action="store_true", help="Process R, G, B independently")
    p.add_argument("--workers", type=int, default=1)
    _noise_args(p)

    p = sub.add_parser("eval", help="Score outputs against ground truth")
    p.add_argument("--outputs", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--noisy", type=Path, help="Noisy inputs, for the baseline columns")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("gradcheck", help="Finite-difference check of every operator")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=3)
    p.add_argument("--ops", nargs="*", choices=sorted(CHECKS))
    return parser


def train_settings(args) -> Dict[str, str]:
    """Config file, then --set overrides, then dedicated flags (last wins)."""
    raw: Dict[str, str] = read_config_file(args.config) if args.config else {}
    sets, errors = parse_assignments(args.overrides, "--set")
    if errors:
        raise ConfigError("malformed --set", errors)
    raw.update(sets)
    flags = {
        "mode": args.mode,
        "max_iters": args.max_iters,
        "seed": args.seed,
        "blind": True if args.blind else None,
        "fixed_grid": True if args.fixed_grid else None,
        "anneal": False if args.no_anneal else None,
        "dynamic_weights": False if args.no_dynamic_weights else None,
    }
    raw.update({k: str(v) for k, v in flags.items() if v is not None})
    return raw


def cmd_gen_data(args) -> int:
    try:
        cfg = ToyDatasetConfig(args.scenes, args.size, args.frames, args.motion, args.pattern, args.seed, args.pixel_format)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    manifest = make_toy_dataset(cfg, args.out)
    print(args.out / "manifest.tsv")
    return 0 if len(manifest) == args.scenes else 1


def cmd_synth_noise(args) -> int:
    noise = _noise_from(args, required=True)
    synth_noise_manifest(read_manifest(args.manifest), args.out, noise, args.seed)
    print(args.out / "manifest.tsv")
    return 0


def cmd_train(args) -> int:
    tcfg, ncfg = build_configs(train_settings(args))
    resume = load_checkpoint(args.resume) if args.resume else None
    ckpt = train(read_manifest(args.manifest), tcfg, ncfg, args.out, resume=resume)
    print(json.dumps({"iterations": ckpt.iteration, "checkpoint": str(args.out / "final.ckpt")}))
    return 0


def cmd_denoise(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    noise = _noise_from(args, required=False)
    denoise_manifest(read_manifest(args.manifest), ckpt, args.out, noise, color=args.color, workers=args.workers)
    print(args.out / "manifest.tsv")
    return 0


def cmd_eval(args) -> int:
    noisy = read_manifest(args.noisy) if args.noisy else None
    reports = evaluate_manifests(read_manifest(args.outputs), read_manifest(args.truth), noisy)
    paths = write_reports(reports, args.out)
    print(json.dumps({"mean": summarize(reports), "report": str(paths["tsv"])}))
    return 0


def cmd_gradcheck(args) -> int:
    results = run_suite(args.seed, args.instances, args.ops)
    for r in results:
        print(f"{r.op}\t{r.worst:.3e}\t{'ok' if r.passed else 'FAIL'}")
    require_pass(results)
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "synth-noise": cmd_synth_noise,
    "train": cmd_train,
    "denoise": cmd_denoise,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level.upper() if args.log_level else None)
    try:
        try:
            code = COMMANDS[args.command](args)
        except ShapeError as e:
            # inputs the command cannot use, e.g. frames smaller than the SSIM window
            raise ConfigError(f"unusable input: {e}") from e
    except DenoiseError as e:
        details = getattr(e, "errors", None) or []
        logger.error(str(e), extra={"command": args.command, "errors": details, "exit_code": e.exit_code})
        for d in details:
            print(f"  {d}", file=sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    finally:
        write_metrics()
    return code


if __name__ == "__main__":
    sys.exit(main())
