"""Command-line interface.

Subcommands:

* ``register`` - run the registration pipeline over paired image-sequence
  directories (or a synthetic scene) and write per-frame transforms.
* ``synth`` - render a synthetic scene to disk as paired image sequences
  with ground truth.
* ``eval`` - score a transforms CSV against a ground-truth file.

Exit codes: 0 ok, 2 configuration error, 3 I/O error, 4 stream mismatch.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import (
    PipelineParams,
    load_kv_file,
    parse_kv_text,
    pipeline_params_from_mapping,
    scene_spec_from_mapping,
)
from .core import AffineTransform, GrayFrame, warp_mask
from .errors import ConfigError, FrameIOError, PolyregError, StreamMismatchError
from .evaluate import (
    AlignmentError,
    FrameScore,
    GroundTruthSet,
    alignment_error,
    build_report,
    load_ground_truth,
    save_ground_truth,
)
from .frameio import (
    format_transform_row,
    load_frames,
    load_transforms_csv,
    save_gray,
    save_overlay,
    write_transforms_csv,
)
from .pipeline import register_streams
from .synth import generate_sequence, standard_scene

SEED_ENV_VAR = "POLYREG_SEED"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyreg",
        description="Infrared/visible video registration from polygonal foreground shapes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    reg = sub.add_parser("register", help="run the registration pipeline")
    reg.add_argument("--vis", help="directory of visible-stream frames")
    reg.add_argument("--ir", help="directory of infrared-stream frames")
    reg.add_argument("--synth", help="scene config file; generates the streams in memory")
    reg.add_argument("--out", required=True, help="output directory")
    reg.add_argument("--config", help="pipeline config file (key=value lines)")
    reg.add_argument("--frames", help="inclusive frame range a:b")
    reg.add_argument("--overlays", action="store_true", help="write per-frame overlay images")
    reg.add_argument("--gt", help="ground-truth point file for evaluation")
    reg.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )

    syn = sub.add_parser("synth", help="render a synthetic scene to disk")
    syn.add_argument("scene", help="scene config file")
    syn.add_argument("--out", required=True, help="output directory")

    ev = sub.add_parser("eval", help="score a transforms CSV against ground truth")
    ev.add_argument("--transforms", required=True, help="transforms CSV from register")
    ev.add_argument("--gt", required=True, help="ground-truth point file")
    ev.add_argument("--out", help="write the report CSV here (default: stdout)")
    return parser


def _parse_frame_range(text: str | None) -> tuple[int, int] | None:
    if text is None:
        return None
    try:
        lo_s, hi_s = text.split(":", 1)
        lo, hi = int(lo_s), int(hi_s)
    except ValueError:
        raise ConfigError(f"invalid --frames value {text!r}; expected a:b") from None
    if lo < 0 or hi < lo:
        raise ConfigError(f"invalid --frames range {lo}:{hi}")
    return lo, hi


def _load_pipeline_params(config_path: str | None, overrides: list[str]) -> PipelineParams:
    mapping: dict[str, str] = {}
    if config_path:
        mapping.update(load_kv_file(config_path))
    for item in overrides:
        mapping.update(parse_kv_text(item, source="--set"))
    params = pipeline_params_from_mapping(mapping)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            params.ransac = replace(params.ransac, rng_seed=int(env_seed))
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR}={env_seed!r} is not an integer") from None
    return params


def _synth_inputs(
    scene_path: str, frame_range: tuple[int, int] | None
) -> tuple[list[GrayFrame], list[GrayFrame], GroundTruthSet]:
    spec_cfg = scene_spec_from_mapping(load_kv_file(scene_path))
    scene = standard_scene(
        spec_cfg.targets,
        width=spec_cfg.width,
        height=spec_cfg.height,
        frames=spec_cfg.frames,
        truth=spec_cfg.truth_transform(),
        dropout=spec_cfg.dropout,
        noise_sigma=spec_cfg.noise_sigma,
        seed=spec_cfg.seed,
        speed=spec_cfg.speed,
    )
    seq = generate_sequence(scene)
    gt = GroundTruthSet()
    for f, pairs in enumerate(seq.truth_pairs):
        for ir_p, vis_p in pairs:
            gt.add(f, ir_p, vis_p)
    vis, ir = seq.vis_frames, seq.ir_frames
    if frame_range is not None:
        lo, hi = frame_range
        if hi >= len(vis):
            raise ConfigError(f"frame range {lo}:{hi} exceeds the scene's {len(vis)} frames")
        vis = vis[lo : hi + 1]
        ir = ir[lo : hi + 1]
        gt = gt.subset(range(lo, hi + 1))
    return vis, ir, gt


def _cmd_register(args: argparse.Namespace) -> int:
    params = _load_pipeline_params(args.config, args.overrides)
    frame_range = _parse_frame_range(args.frames)

    use_dirs = args.vis is not None or args.ir is not None
    use_synth = args.synth is not None
    if use_dirs == use_synth:
        raise ConfigError("supply either --vis with --ir, or --synth, but not both")

    gt: GroundTruthSet | None = None
    if use_dirs:
        if args.vis is None or args.ir is None:
            raise ConfigError("--vis and --ir must be supplied together")
        for d in (args.vis, args.ir):
            if not Path(d).is_dir():
                raise ConfigError(f"input directory not found: {d}")
        vis_frames = load_frames(args.vis, frame_range)
        ir_frames = load_frames(args.ir, frame_range)
    else:
        vis_frames, ir_frames, gt = _synth_inputs(args.synth, frame_range)
    if args.gt is not None:
        if not Path(args.gt).is_file():
            raise ConfigError(f"ground-truth file not found: {args.gt}")
        gt = load_ground_truth(args.gt)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    overlay_dir = out_dir / "overlays"
    if args.overlays:
        overlay_dir.mkdir(exist_ok=True)

    rows: list[str] = []
    scores: list[FrameScore] = []

    def on_frame(res) -> None:
        t = res.state.best_transform
        rows.append(format_transform_row(res.frame_index, t, res.state.best_br, res.updated))
        if gt is not None:
            err: AlignmentError | None = None
            if t is not None and res.frame_index in gt.frames:
                err = alignment_error(gt.subset([res.frame_index]), t)
            scores.append(FrameScore(res.frame_index, res.state.best_br, err))
        if args.overlays and t is not None:
            h, w = res.vis_mask.shape
            save_overlay(
                overlay_dir / f"overlay_{res.frame_index:04d}.png",
                res.vis_mask,
                warp_mask(res.ir_mask, t, w, h),
            )

    run = register_streams(vis_frames, ir_frames, params, on_frame=on_frame)
    write_transforms_csv(out_dir / "transforms.csv", rows)

    if gt is not None:
        pooled = None
        if run.best_transform is not None and gt.n_pairs() > 0:
            pooled = alignment_error(gt, run.best_transform)
        (out_dir / "report.csv").write_text(build_report(scores, pooled))
        if pooled is not None:
            print(f"final E={pooled.e:.6g} px (Ex={pooled.ex:.6g}, Ey={pooled.ey:.6g})")
    if run.best_transform is None:
        print("no transform adopted (insufficient matches)")
    else:
        print(f"best BR={run.state.best_br:.6g} at frame {run.state.frame_of_best}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    spec_cfg = scene_spec_from_mapping(load_kv_file(args.scene))
    scene = standard_scene(
        spec_cfg.targets,
        width=spec_cfg.width,
        height=spec_cfg.height,
        frames=spec_cfg.frames,
        truth=spec_cfg.truth_transform(),
        dropout=spec_cfg.dropout,
        noise_sigma=spec_cfg.noise_sigma,
        seed=spec_cfg.seed,
        speed=spec_cfg.speed,
    )
    seq = generate_sequence(scene)
    out_dir = Path(args.out)
    vis_dir = out_dir / "vis"
    ir_dir = out_dir / "ir"
    vis_dir.mkdir(parents=True, exist_ok=True)
    ir_dir.mkdir(parents=True, exist_ok=True)
    for f, (vis, ir) in enumerate(zip(seq.vis_frames, seq.ir_frames)):
        save_gray(vis_dir / f"frame_{f:04d}.png", vis.pixels)
        save_gray(ir_dir / f"frame_{f:04d}.png", ir.pixels)
    gt = GroundTruthSet()
    for f, pairs in enumerate(seq.truth_pairs):
        for ir_p, vis_p in pairs:
            gt.add(f, ir_p, vis_p)
    save_ground_truth(out_dir / "gt.txt", gt)
    t = scene.truth
    (out_dir / "truth.csv").write_text(
        "a,b,tx,c,d,ty\n"
        + ",".join(f"{v:.9g}" for v in (t.a, t.b, t.tx, t.c, t.d, t.ty))
        + "\n"
    )
    print(f"wrote {len(seq.vis_frames)} frame pairs to {out_dir}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    rows = load_transforms_csv(args.transforms)
    gt = load_ground_truth(args.gt)
    scores: list[FrameScore] = []
    final_t: AffineTransform | None = None
    for frame, t, br in rows:
        if t is not None:
            final_t = t
        err = None
        if t is not None and frame in gt.frames:
            err = alignment_error(gt.subset([frame]), t)
        scores.append(FrameScore(frame, br, err))
    pooled = alignment_error(gt, final_t) if final_t is not None else None
    report = build_report(scores, pooled)
    if args.out:
        Path(args.out).write_text(report)
    else:
        sys.stdout.write(report)
    if pooled is not None:
        print(f"final E={pooled.e:.6g} px (Ex={pooled.ex:.6g}, Ey={pooled.ey:.6g})")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "register":
            return _cmd_register(args)
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "eval":
            return _cmd_eval(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FrameIOError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except StreamMismatchError as exc:
        print(f"data mismatch: {exc}", file=sys.stderr)
        return 4
    except PolyregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
