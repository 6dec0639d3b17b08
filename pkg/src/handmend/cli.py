"""Command-line interface.

Subcommands: refine, transform, rasterize, mmd, schedule-dump. Shared
flags live on every subcommand: --config (TOML), --seed, --strict,
--emit-intermediates. Batch mode consumes a JSON manifest and writes a
report.json next to the artifacts; exit status is 0 unless --strict is
set and some job ended in an error entry. Usage mistakes exit with 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import RefineConfig, load_config
from .imgio import ManifestRow, load_float32, load_mesh, save_mask_pgm, save_pgm
from .meshproc import mask_from_map, rasterize
from .metrics import mmd2_permutation_test, mmd2_unbiased, median_bandwidth
from .pipeline import STATUS_ERROR, STATUS_REFINED, JobReport, run_manifest, run_single


def _shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="TOML config file")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument(
        "--emit-intermediates",
        action="store_true",
        help="also write guidance and mask files in batch mode",
    )
    parser.add_argument(
        "--strict",
        action="store_true",
        help="exit nonzero when any job ends in an error entry",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="handmend")
    sub = parser.add_subparsers(dest="command", required=True)

    p_refine = sub.add_parser("refine", help="regenerate the hand region from a mesh")
    _shared_flags(p_refine)
    p_refine.add_argument("image", nargs="?", help="input image (single mode)")
    p_refine.add_argument("mesh", nargs="?", help="hand mesh JSON (single mode)")
    p_refine.add_argument("--detectors", metavar="PATH", help="detector sidecar JSON gate")
    p_refine.add_argument("--manifest", metavar="PATH", help="batch manifest JSON")
    p_refine.add_argument("--out-dir", metavar="DIR", help="artifact directory")

    p_transform = sub.add_parser("transform", help="move a reference hand onto a new pose")
    _shared_flags(p_transform)
    p_transform.add_argument("image", nargs="?", help="input image (single mode)")
    p_transform.add_argument("pose", nargs="?", help="target pose JSON in the input image")
    p_transform.add_argument("reference_mesh", nargs="?", help="reference hand mesh JSON")
    p_transform.add_argument("reference_pose", nargs="?", help="reference pose JSON")
    p_transform.add_argument("--manifest", metavar="PATH", help="batch manifest JSON")
    p_transform.add_argument("--out-dir", metavar="DIR", help="artifact directory")

    p_raster = sub.add_parser("rasterize", help="render a mesh to its guidance map")
    _shared_flags(p_raster)
    p_raster.add_argument("mesh", help="mesh JSON")
    p_raster.add_argument("--height", type=int, required=True)
    p_raster.add_argument("--width", type=int, required=True)
    p_raster.add_argument("--out", metavar="PATH", help="guidance PGM path")
    p_raster.add_argument("--mask-out", metavar="PATH", help="also write the padded box mask")

    p_mmd = sub.add_parser("mmd", help="unbiased kernel two-sample statistic")
    _shared_flags(p_mmd)
    p_mmd.add_argument("x", help="first sample set (.npy, rows are vectors)")
    p_mmd.add_argument("y", help="second sample set (.npy)")
    p_mmd.add_argument("--kernel", choices=("rbf", "poly"), default="rbf")
    p_mmd.add_argument("--bandwidth", type=float, help="RBF scale; default median heuristic")
    p_mmd.add_argument(
        "--permutations", type=int, help="run a permutation test with this many resamples"
    )

    p_sched = sub.add_parser("schedule-dump", help="print the configured noise schedule")
    _shared_flags(p_sched)
    p_sched.add_argument("--out", metavar="PATH", help="write JSON here instead of stdout")

    return parser


def _load_config(args) -> RefineConfig:
    return load_config(args.config) if args.config else RefineConfig()


def _report_exit(report: JobReport, strict: bool) -> int:
    for entry in report.entries:
        if entry.status != STATUS_REFINED:
            print(f"{entry.status}: {entry.image}: {entry.detail}", file=sys.stderr)
    counts = report.summary
    print(" ".join(f"{k}={v}" for k, v in counts.items()))
    return 1 if strict and counts[STATUS_ERROR] else 0


def _run_batch(args, config: RefineConfig) -> int:
    out_dir = Path(args.out_dir) if args.out_dir else Path(args.manifest).parent / "out"
    report = run_manifest(
        args.manifest,
        config,
        out_dir,
        global_seed=args.seed,
        emit_intermediates=args.emit_intermediates,
    )
    (out_dir / "report.json").write_text(report.to_json())
    return _report_exit(report, args.strict)


def _cmd_refine(args) -> int:
    config = _load_config(args)
    if args.manifest:
        if args.image or args.mesh:
            raise SystemExit2("--manifest and positional inputs are mutually exclusive")
        return _run_batch(args, config)
    if not (args.image and args.mesh):
        raise SystemExit2("single mode needs IMAGE and MESH (or use --manifest)")
    row = ManifestRow(image=args.image, mesh=args.mesh, detectors=args.detectors)
    entry = run_single(row, config, out_dir=args.out_dir, global_seed=args.seed)
    return _report_exit(JobReport((entry,)), args.strict)


def _cmd_transform(args) -> int:
    config = _load_config(args)
    if args.manifest:
        if args.image:
            raise SystemExit2("--manifest and positional inputs are mutually exclusive")
        return _run_batch(args, config)
    if not (args.image and args.pose and args.reference_mesh and args.reference_pose):
        raise SystemExit2(
            "single mode needs IMAGE POSE REFERENCE_MESH REFERENCE_POSE (or use --manifest)"
        )
    row = ManifestRow(
        image=args.image,
        pose=args.pose,
        reference_mesh=args.reference_mesh,
        reference_pose=args.reference_pose,
    )
    entry = run_single(row, config, out_dir=args.out_dir, global_seed=args.seed)
    return _report_exit(JobReport((entry,)), args.strict)


def _cmd_rasterize(args) -> int:
    config = _load_config(args)
    mesh = load_mesh(args.mesh)
    camera = config.camera.build(args.height, args.width)
    guidance = rasterize(mesh, camera)
    out = Path(args.out) if args.out else Path(args.mesh).with_suffix(".guidance.pgm")
    save_pgm(out, guidance)
    print(out)
    if args.mask_out:
        save_mask_pgm(args.mask_out, mask_from_map(guidance, config.mask_pad))
        print(args.mask_out)
    return 0


def _cmd_mmd(args) -> int:
    x = np.atleast_2d(load_float32(args.x).astype(np.float64))
    y = np.atleast_2d(load_float32(args.y).astype(np.float64))
    x = x.reshape(len(x), -1)
    y = y.reshape(len(y), -1)
    report: dict[str, object] = {"n_x": len(x), "n_y": len(y)}
    if args.permutations:
        rng = np.random.default_rng(args.seed if args.seed is not None else 0)
        res = mmd2_permutation_test(
            x, y, rng, num_permutations=args.permutations,
            bandwidth=args.bandwidth, kernel=args.kernel,
        )
        report.update(
            mmd2=res.statistic,
            bandwidth=res.bandwidth,
            p_value=res.p_value,
            num_permutations=args.permutations,
        )
    else:
        bandwidth = args.bandwidth
        if args.kernel == "rbf" and bandwidth is None:
            bandwidth = median_bandwidth(x, y)
        report["mmd2"] = mmd2_unbiased(x, y, bandwidth=bandwidth, kernel=args.kernel)
        report["bandwidth"] = bandwidth if bandwidth is not None else 0.0
    print(json.dumps(report, sort_keys=True))
    return 0


def _cmd_schedule_dump(args) -> int:
    config = _load_config(args)
    sched = config.schedule.build()
    payload = json.dumps(
        {
            "schedule_kind": config.schedule.schedule_kind,
            "steps": config.schedule.steps,
            "tau_count": config.schedule.tau_count,
            "beta_start": config.schedule.beta_start,
            "beta_end": config.schedule.beta_end,
            "tau": sched.tau.tolist(),
            "alpha_bar": sched.alpha_bar.tolist(),
        },
        indent=2,
    )
    if args.out:
        Path(args.out).write_text(payload)
    else:
        print(payload)
    return 0


class SystemExit2(Exception):
    """Usage error raised after parsing; converted to exit status 2."""


_COMMANDS = {
    "refine": _cmd_refine,
    "transform": _cmd_transform,
    "rasterize": _cmd_rasterize,
    "mmd": _cmd_mmd,
    "schedule-dump": _cmd_schedule_dump,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and args.seed < 0:
        parser.error("--seed must be non-negative")
    try:
        return _COMMANDS[args.command](args)
    except SystemExit2 as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
