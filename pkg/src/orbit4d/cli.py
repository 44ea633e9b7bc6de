"""Command-line entry points for the pipeline.

Verbs: gen-dataset, curate, train, sample, reconstruct, eval, e2e,
render-cloud, init-config. Every stage verb takes --config, --workspace,
--seed, --force, --dry-run; ORBIT4D_WORKSPACE provides the workspace default.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import PipelineConfig, demo_config
from .errors import OrbitError
from .pipeline import run_e2e, run_stage
from .workspace import Workspace

log = logging.getLogger("orbit4d")

_STAGE_VERBS = {
    "gen-dataset": "gen_dataset",
    "curate": "curate",
    "train": "train",
    "sample": "sample",
    "reconstruct": "reconstruct",
    "eval": "eval",
}


def _add_stage_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="pipeline config JSON (default: demo preset)")
    p.add_argument(
        "--workspace",
        type=Path,
        default=os.environ.get("ORBIT4D_WORKSPACE"),
        help="workspace directory (env ORBIT4D_WORKSPACE)",
    )
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--force", action="store_true", help="re-run even if the stage marker is valid")
    p.add_argument("--dry-run", action="store_true", help="print the plan without writing")


def _add_curation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--s-high", type=float, help="override curation s_high")
    p.add_argument("--s-low", type=float, help="override curation s_low")
    p.add_argument("--margin", type=int, help="override curation boundary margin")


def _add_sampler_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--steps", type=int, help="override sampling step count")
    p.add_argument("--w1", type=float, help="override guidance weight w1")
    p.add_argument("--w2", type=float, help="override guidance weight w2")
    p.add_argument("--m", type=float, action="append", dest="m_levels",
                   help="motion level to sample (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbit4d", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for verb in _STAGE_VERBS:
        p = sub.add_parser(verb, help=f"run the {verb} stage")
        _add_stage_args(p)
        if verb == "curate":
            _add_curation_flags(p)
        if verb == "sample":
            _add_sampler_flags(p)

    p = sub.add_parser("e2e", help="run every stage in order")
    _add_stage_args(p)

    p = sub.add_parser("render-cloud", help="render an orbital sweep from a fitted cloud")
    p.add_argument("--cloud", type=Path, required=True, help="cloud checkpoint directory")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--static", action="store_true", help="freeze time at the first timestamp")
    p.add_argument("--resolution", type=int, default=64)

    p = sub.add_parser("init-config", help="write a config JSON to stdout or a file")
    p.add_argument("--out", type=Path, help="destination (default: stdout)")
    p.add_argument("--preset", choices=("demo", "full"), default="demo")
    return parser


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if args.config else demo_config()
    if getattr(args, "seed", None) is not None:
        config = config.with_seed(args.seed)
    overrides = {}
    for attr, section, key in (
        ("s_high", "curation", "s_high"),
        ("s_low", "curation", "s_low"),
        ("margin", "curation", "boundary_margin"),
        ("steps", "diffusion", "sample_steps"),
        ("w1", "diffusion", "w1"),
        ("w2", "diffusion", "w2"),
        ("m_levels", "diffusion", "m_levels"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            overrides.setdefault(section, {})[key] = value
    if overrides:
        data = config.to_dict()
        for section, kv in overrides.items():
            data[section].update(kv)
        config = PipelineConfig.from_dict(data)
    return config


def _require_workspace(args) -> Workspace:
    if args.workspace is None:
        raise OrbitError("no workspace given (use --workspace or ORBIT4D_WORKSPACE)")
    return Workspace(args.workspace)


def _print_summary(summary: dict) -> None:
    print("\n== pipeline summary ==")
    for stage, status in summary["stages"].items():
        print(f"  {stage:<12} {status}")
    if "metrics" in summary:
        rows = [
            ("diffusion mean PSNR (dB)", summary["metrics"]["diffusion_mean_psnr"]),
            ("diffusion mean SSIM", summary["metrics"]["diffusion_mean_ssim"]),
            ("construction mean PSNR (dB)", summary["metrics"]["construction_mean_psnr"]),
            ("construction mean SSIM", summary["metrics"]["construction_mean_ssim"]),
            ("motion monotonicity (rank corr)", summary["motion_monotonicity"]),
        ]
        print("  " + "-" * 44)
        for name, value in rows:
            shown = "n/a" if value is None else f"{value:.4f}"
            print(f"  {name:<34} {shown}")
        print(f"  report hash: {summary['report_hash']}")


def _cmd_render_cloud(args) -> int:
    from PIL import Image

    from .scene import OrbitTrajectory, RenderSettings
    from .splat import load_cloud
    from .splat.construct import render_sweep
    from .tensor_io import write_tensor

    cloud, header = load_cloud(args.cloud)
    trajectory = OrbitTrajectory.from_dict(header["trajectory"])
    settings = RenderSettings(height=args.resolution, width=args.resolution)
    frames = render_sweep(cloud, trajectory, settings, animate=not args.static)
    args.out.mkdir(parents=True, exist_ok=True)
    rgb = np.stack([f.rgb for f in frames])
    write_tensor(args.out / "rgb.orb", rgb)
    write_tensor(args.out / "alpha.orb", np.stack([f.alpha for f in frames]))
    write_tensor(args.out / "depth.orb", np.stack([f.depth for f in frames]))
    for i, frame in enumerate(frames):
        img = Image.fromarray((np.clip(frame.rgb, 0, 1) * 255).astype(np.uint8))
        img.save(args.out / f"frame_{i:03d}.png")
    (args.out / "video.json").write_text(
        json.dumps({"trajectory": header["trajectory"], "is_static": args.static},
                   indent=2, sort_keys=True) + "\n"
    )
    print(f"rendered {len(frames)} frames to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "init-config":
            config = demo_config() if args.preset == "demo" else PipelineConfig()
            if args.out:
                config.save(args.out)
                print(f"wrote {args.out}")
            else:
                sys.stdout.write(config.canonical_json())
            return 0
        if args.command == "render-cloud":
            return _cmd_render_cloud(args)

        config = _load_config(args)
        ws = _require_workspace(args)
        if args.command == "e2e":
            with ws.lock():
                summary = run_e2e(ws, config, force=args.force, dry_run=args.dry_run)
            _print_summary(summary)
            return 0
        stage = _STAGE_VERBS[args.command]
        with ws.lock():
            status = run_stage(ws, config, stage, force=args.force, dry_run=args.dry_run)
        print(f"{args.command}: {status}")
        return 0
    except OrbitError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
