"""Pipeline stages over a shared workspace: generate, curate, train, sample,
reconstruct, evaluate. Each stage is idempotent through content-hash markers
keyed by the configuration sections it depends on.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from .config import PipelineConfig
from .curation import curate, CurationReport, CurationVerdict, CurationRule
from .diffusion import (
    ConditionSignal,
    Denoiser,
    TrainingExample,
    decode,
    encode,
    load_denoiser,
    sample,
    save_denoiser,
    train,
)
from .diffusion.latents import LatentVideo
from .errors import InvalidState
from .evaluation import evaluate_pair, motion_monotonicity, report_hash, report_json, write_csv
from .curation import motion_magnitude
from .scene import (
    DynamicAsset,
    OrbitTrajectory,
    RgbVideo,
    build_trajectory,
    load_video,
    render_orbital,
    sample_asset,
    save_video,
)
from .splat import construct, load_cloud, save_cloud
from .splat.construct import render_sweep
from .tensor_io import read_tensor, write_tensor
from .workspace import STAGES, Workspace

log = logging.getLogger("orbit4d")

_VIDEO_FILES = ("rgb.orb", "alpha.orb", "depth.orb", "video.json")

_STAGE_SECTIONS = {
    "gen_dataset": ("n_assets", "seed", "scene"),
    "curate": ("n_assets", "seed", "scene", "curation"),
    "train": ("n_assets", "seed", "torch_threads", "scene", "curation", "diffusion"),
    "sample": ("n_assets", "seed", "torch_threads", "scene", "curation", "diffusion"),
    "reconstruct": ("n_assets", "seed", "torch_threads", "scene", "curation", "diffusion", "splat"),
    "eval": ("n_assets", "seed", "torch_threads", "scene", "curation", "diffusion", "splat"),
}

UPSTREAM = {
    "gen_dataset": (),
    "curate": ("gen_dataset",),
    "train": ("curate",),
    "sample": ("train",),
    "reconstruct": ("sample",),
    "eval": ("sample", "reconstruct"),
}


def derive_seed(master: int, *labels) -> int:
    text = f"{master}/" + "/".join(str(x) for x in labels)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little") >> 1


def stage_hash(stage: str, config: PipelineConfig) -> str:
    payload = {"schema_version": config.schema_version}
    full = config.to_dict()
    for key in _STAGE_SECTIONS[stage]:
        payload[key] = full[key]
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _asset_id(i: int) -> str:
    return f"asset_{i:04d}"


def _trajectories(ws: Workspace, config: PipelineConfig, index: int) -> dict[str, OrbitTrajectory]:
    s = config.scene
    rand_start = float(
        np.random.default_rng(derive_seed(config.seed, "azimuth", index)).uniform(0.0, 360.0)
    )
    return {
        "front": build_trajectory(s.T, s.elevation, s.distance, 0.0),
        "rand": build_trajectory(s.T, s.elevation, s.distance, rand_start),
    }


def _load_asset(ws: Workspace, asset_id: str) -> DynamicAsset:
    with open(ws.path("assets", f"{asset_id}.json")) as f:
        return DynamicAsset.from_dict(json.load(f))


def _video_dir(ws: Workspace, asset_id: str, name: str) -> Path:
    return ws.path("videos", asset_id, name)


# -- stages -------------------------------------------------------------------


def stage_gen_dataset(ws: Workspace, config: PipelineConfig) -> list[Path]:
    settings = config.scene.render_settings()
    outputs: list[Path] = []
    for i in range(config.n_assets):
        asset_id = _asset_id(i)
        scale = config.scene.motion_scales[i % len(config.scene.motion_scales)]
        asset = sample_asset(
            derive_seed(config.seed, "asset", i), scale, label=i % config.diffusion.num_labels
        )
        asset_path = ws.path("assets", f"{asset_id}.json")
        asset_path.write_text(json.dumps(asset.to_dict(), indent=2, sort_keys=True) + "\n")
        outputs.append(asset_path)

        trajectories = _trajectories(ws, config, i)
        sweeps = (
            ("dyn_front", "front", True),
            ("dyn_rand", "rand", True),
            ("static_front", "front", False),
            ("static_rand", "rand", False),
        )
        for name, traj_key, animate in sweeps:
            video = render_orbital(asset, trajectories[traj_key], animate, settings)
            directory = _video_dir(ws, asset_id, name)
            save_video(
                directory,
                video,
                meta={
                    "asset_id": asset_id,
                    "seed": asset.seed,
                    "motion_scale": scale,
                    "label": asset.label,
                },
            )
            outputs.extend(directory / f for f in _VIDEO_FILES)
        log.info("gen-dataset: %s rendered (motion_scale=%s)", asset_id, scale)
    return outputs


def stage_curate(ws: Workspace, config: PipelineConfig) -> list[Path]:
    rule = config.curation.rule(config.scene.T)
    settings = config.scene.render_settings()
    trajectory = build_trajectory(
        config.scene.T, config.scene.elevation, config.scene.distance, 0.0
    )
    items = [
        (_asset_id(i), _load_asset(ws, _asset_id(i))) for i in range(config.n_assets)
    ]
    report = curate(items, trajectory, rule, settings=settings)
    kept = [v for v in report.verdicts if v.kept]
    magnitudes = [v.motion_magnitude for v in kept]
    m_p95 = float(np.percentile(magnitudes, 95)) if magnitudes else 1.0
    payload = report.to_dict()
    payload["m_p95"] = m_p95
    out = ws.path("curation", "report.json")
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    log.info("curate: %s kept of %s (%s)", len(kept), len(report.verdicts), report.counts)
    return [out]


def _curation_payload(ws: Workspace) -> dict:
    with open(ws.path("curation", "report.json")) as f:
        return json.load(f)


def _condition_for(kind: str, asset: DynamicAsset, z0: LatentVideo, z0_bar: LatentVideo):
    if kind == "none":
        return ConditionSignal.none()
    if kind == "label":
        return ConditionSignal.of_label(asset.label)
    if kind == "image":
        return ConditionSignal.of_image(z0.to_model()[0].clone())
    return ConditionSignal.of_static_video(z0_bar.to_model().clone())


def _build_dataset(
    ws: Workspace, config: PipelineConfig, kept: list[dict], m_p95: float, static: bool
) -> list[TrainingExample]:
    examples = []
    for verdict in kept:
        asset = _load_asset(ws, verdict["asset_id"])
        for sweep in ("front", "rand"):
            dyn, _ = load_video(_video_dir(ws, verdict["asset_id"], f"dyn_{sweep}"))
            sta, _ = load_video(_video_dir(ws, verdict["asset_id"], f"static_{sweep}"))
            z_dyn = encode(dyn)
            z_sta = encode(sta)
            z0 = z_sta if static else z_dyn
            m_raw = 0.0 if static else verdict["motion_magnitude"]
            cond = _condition_for(config.diffusion.condition, asset, z0, z_sta)
            examples.append(
                TrainingExample(
                    z0=z0.to_model().clone(),
                    z0_bar=z_sta.to_model().clone(),
                    cond=cond,
                    m_raw=m_raw,
                    m_norm=min(1.0, m_raw / m_p95) if m_p95 > 0 else 0.0,
                )
            )
    return examples


def stage_train(ws: Workspace, config: PipelineConfig) -> list[Path]:
    payload = _curation_payload(ws)
    kept = [v for v in payload["verdicts"] if v["kept"]]
    if not kept:
        raise InvalidState("curation kept no assets; nothing to train on")
    m_p95 = payload["m_p95"]
    schedule = config.diffusion.schedule()
    outputs: list[Path] = []

    for role, static in (("denoiser", False), ("static_denoiser", True)):
        dataset = _build_dataset(ws, config, kept, m_p95, static=static)
        torch.manual_seed(derive_seed(config.seed, "init", role))
        model = Denoiser(config.diffusion.denoiser_config(static_mode=static))
        result = train(
            model,
            dataset,
            schedule,
            config.diffusion.train_config(derive_seed(config.seed, "train", role), static=static),
        )
        ckpt = ws.path("checkpoints", role)
        save_denoiser(
            ckpt,
            model,
            schedule,
            meta={
                "m_p95": m_p95,
                "condition": config.diffusion.condition,
                "latent_shape": list(dataset[0].z0.shape),
                "source_resolution": config.scene.resolution,
            },
        )
        curve_path = ws.path("checkpoints", f"{role}_loss.json")
        curve_path.write_text(
            json.dumps(
                {"loss": result.loss_curve, "ldm": result.ldm_curve, "mr": result.mr_curve},
                sort_keys=True,
            )
            + "\n"
        )
        outputs.append(curve_path)
        outputs.append(ckpt / "header.json")
        outputs.extend(sorted((ckpt / "params").glob("*.orb")))
        log.info(
            "train: %s finished %s iterations (loss %.4f -> %.4f)",
            role,
            len(result.loss_curve),
            result.loss_curve[0] if result.loss_curve else float("nan"),
            result.loss_curve[-1] if result.loss_curve else float("nan"),
        )
    return outputs


def stage_sample(ws: Workspace, config: PipelineConfig) -> list[Path]:
    payload = _curation_payload(ws)
    kept = [v for v in payload["verdicts"] if v["kept"]]
    dynamic, schedule, header = load_denoiser(ws.path("checkpoints", "denoiser"))
    static, _, _ = load_denoiser(ws.path("checkpoints", "static_denoiser"))
    T, c, h, w = header["latent_shape"]
    outputs: list[Path] = []

    for verdict in kept:
        asset_id = verdict["asset_id"]
        asset = _load_asset(ws, asset_id)
        sta, sidecar = load_video(_video_dir(ws, asset_id, "static_front"))
        z_sta = encode(sta)
        cond = _condition_for(config.diffusion.condition, asset, z_sta, z_sta)
        for k, m_level in enumerate(config.diffusion.m_levels):
            sample_id = f"{asset_id}_m{k}"
            latent = sample(
                dynamic,
                static,
                cond,
                m_level,
                config.diffusion.sample_steps,
                config.diffusion.guidance(),
                derive_seed(config.seed, "sample", asset_id, k),
                schedule,
                (T, c, h, w),
                source_hw=(config.scene.resolution, config.scene.resolution),
                x0_clamp=config.diffusion.x0_clamp,
            )
            rgb = np.clip(decode(latent), 0.0, 1.0).astype(np.float32)
            directory = ws.path("samples", sample_id)
            directory.mkdir(parents=True, exist_ok=True)
            write_tensor(directory / "rgb.orb", rgb)
            meta = {
                "sample_id": sample_id,
                "asset_id": asset_id,
                "m_level": m_level,
                "steps": config.diffusion.sample_steps,
                "w1": config.diffusion.w1,
                "w2": config.diffusion.w2,
                "trajectory": sidecar["trajectory"],
            }
            (directory / "sample.json").write_text(
                json.dumps(meta, indent=2, sort_keys=True) + "\n"
            )
            outputs.extend([directory / "rgb.orb", directory / "sample.json"])
        log.info("sample: %s done (%d m levels)", asset_id, len(config.diffusion.m_levels))
    return outputs


def _load_sample(ws: Workspace, sample_id: str) -> tuple[RgbVideo, dict]:
    directory = ws.path("samples", sample_id)
    with open(directory / "sample.json") as f:
        meta = json.load(f)
    rgb = read_tensor(directory / "rgb.orb")
    trajectory = OrbitTrajectory.from_dict(meta["trajectory"])
    return RgbVideo(rgb=rgb, trajectory=trajectory), meta


def _sample_ids(ws: Workspace) -> list[str]:
    return sorted(p.name for p in ws.path("samples").iterdir() if p.is_dir())


def stage_reconstruct(ws: Workspace, config: PipelineConfig) -> list[Path]:
    settings = config.scene.render_settings()
    outputs: list[Path] = []
    for sample_id in _sample_ids(ws)[: config.splat.max_clouds]:
        video, meta = _load_sample(ws, sample_id)
        static, _ = load_video(_video_dir(ws, meta["asset_id"], "static_front"))
        result = construct(
            video,
            static,
            settings,
            config.splat.construct_config(derive_seed(config.seed, "construct", sample_id)),
            config.splat.weights(),
        )
        directory = ws.path("clouds", sample_id)
        save_cloud(
            directory,
            result.cloud,
            meta={"sample_id": sample_id, "trajectory": meta["trajectory"]},
        )
        curves = ws.path("clouds", f"{sample_id}_loss.json")
        curves.write_text(
            json.dumps({"coarse": result.coarse_curve, "fine": result.fine_curve}, sort_keys=True)
            + "\n"
        )
        outputs.append(curves)
        outputs.append(directory / "header.json")
        outputs.extend(sorted(directory.glob("*.orb")))
        log.info("reconstruct: %s fitted (%d gaussians)", sample_id, len(result.cloud))
    return outputs


def stage_eval(ws: Workspace, config: PipelineConfig) -> list[Path]:
    settings = config.scene.render_settings()
    diffusion_reports = []
    mono_samples = []
    for sample_id in _sample_ids(ws):
        video, meta = _load_sample(ws, sample_id)
        gt_dyn, _ = load_video(_video_dir(ws, meta["asset_id"], "dyn_front"))
        gt_static, _ = load_video(_video_dir(ws, meta["asset_id"], "static_front"))
        report = evaluate_pair(
            video,
            gt_dyn,
            name=sample_id,
            target_static=gt_static,
            reference_static=gt_static,
            metadata={"asset_id": meta["asset_id"], "m_level": meta["m_level"]},
        )
        diffusion_reports.append(report)
        mono_samples.append((meta["m_level"], report.motion_magnitude_target))

    construction_reports = []
    cloud_dirs = sorted(p.name for p in ws.path("clouds").iterdir() if p.is_dir())
    for sample_id in cloud_dirs:
        cloud, header = load_cloud(ws.path("clouds", sample_id))
        trajectory = OrbitTrajectory.from_dict(header["trajectory"])
        frames = render_sweep(cloud, trajectory, settings, animate=True)
        rendered = RgbVideo(rgb=np.stack([f.rgb for f in frames]), trajectory=trajectory)
        with open(ws.path("samples", sample_id, "sample.json")) as f:
            meta = json.load(f)
        gt_dyn, _ = load_video(_video_dir(ws, meta["asset_id"], "dyn_front"))
        gt_static, _ = load_video(_video_dir(ws, meta["asset_id"], "static_front"))
        construction_reports.append(
            evaluate_pair(
                rendered,
                gt_dyn,
                name=sample_id,
                target_static=gt_static,
                reference_static=gt_static,
                metadata={"asset_id": meta["asset_id"], "m_level": meta["m_level"]},
            )
        )

    distinct_levels = {round(m, 12) for m, _ in mono_samples}
    monotonicity = (
        motion_monotonicity(mono_samples) if len(distinct_levels) >= 3 else None
    )
    payload = {
        "schema_version": config.schema_version,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "diffusion": [r.to_dict() for r in diffusion_reports],
        "construction": [r.to_dict() for r in construction_reports],
        "motion_monotonicity": monotonicity,
        "summary": {
            "diffusion_mean_psnr": float(np.mean([r.mean_psnr for r in diffusion_reports]))
            if diffusion_reports
            else None,
            "diffusion_mean_ssim": float(np.mean([r.mean_ssim for r in diffusion_reports]))
            if diffusion_reports
            else None,
            "construction_mean_psnr": float(np.mean([r.mean_psnr for r in construction_reports]))
            if construction_reports
            else None,
            "construction_mean_ssim": float(np.mean([r.mean_ssim for r in construction_reports]))
            if construction_reports
            else None,
        },
    }
    metrics_path = ws.path("reports", "metrics.json")
    metrics_path.write_text(report_json(payload))
    csv_path = ws.path("reports", "metrics.csv")
    rows = []
    for section in ("diffusion", "construction"):
        psnr_key = f"{section}_mean_psnr"
        ssim_key = f"{section}_mean_ssim"
        rows.append(
            {
                "name": section,
                "ssim": payload["summary"][ssim_key],
                "psnr": payload["summary"][psnr_key],
            }
        )
    write_csv(csv_path, rows)
    log.info("eval: report hash %s", report_hash(payload))
    return [metrics_path, csv_path]


STAGE_FUNCS = {
    "gen_dataset": stage_gen_dataset,
    "curate": stage_curate,
    "train": stage_train,
    "sample": stage_sample,
    "reconstruct": stage_reconstruct,
    "eval": stage_eval,
}


def run_stage(
    ws: Workspace,
    config: PipelineConfig,
    stage: str,
    force: bool = False,
    dry_run: bool = False,
) -> str:
    """Returns 'ran', 'skipped' (marker already valid), or 'planned' (dry run)."""
    torch.set_num_threads(config.torch_threads)
    h = stage_hash(stage, config)
    if dry_run:
        if not force and ws.is_complete(stage, h):
            log.info("%s: marker valid, would skip", stage)
            return "skipped"
        log.info("%s: would run (hash %s)", stage, h)
        return "planned"
    for upstream in UPSTREAM[stage]:
        ws.require(upstream, stage_hash(upstream, config))
    if not force and ws.is_complete(stage, h):
        log.info("%s: marker valid, skipping (use --force to re-run)", stage)
        return "skipped"
    ws.prepare()
    outputs = STAGE_FUNCS[stage](ws, config)
    ws.write_marker(stage, h, outputs)
    ws.record_outputs(stage, h, config.seed, outputs)
    return "ran"


def run_e2e(
    ws: Workspace, config: PipelineConfig, force: bool = False, dry_run: bool = False
) -> dict:
    """All stages in order; returns the summary (with the final report hash)."""
    statuses = {}
    for stage in STAGES:
        statuses[stage] = run_stage(ws, config, stage, force=force, dry_run=dry_run)
    summary = {"stages": statuses, "config_hash": config.config_hash()}
    if not dry_run:
        with open(ws.path("reports", "metrics.json")) as f:
            payload = json.load(f)
        summary["report_hash"] = report_hash(payload)
        summary["metrics"] = payload["summary"]
        summary["motion_monotonicity"] = payload["motion_monotonicity"]
    return summary
