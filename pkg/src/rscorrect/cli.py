"""Command-line surface: synthesize, correct, reconstruct-rs, cycle-check,
evaluate.

Every run writes exactly one ``manifest.txt`` describing its inputs (with
content hashes), geometry, targets, and outputs; identical manifests produce
bit-identical output files. Exit codes: 0 success, 2 usage error, 3 data or
coverage error, 4 internal error. The ``RSCORRECT_THREADS`` environment
variable caps worker parallelism where commands fan out over independent
items.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import Direction, Frame, ScanConfig
from .correction import (
    CorrectionParams,
    correct_video_detailed,
    target_row_grid,
)
from .errors import ToolkitError, UsageError
from .fileio import (
    read_flo,
    read_frame,
    sha256_file,
    sha256_text,
    write_flo,
    write_frame,
    write_manifest,
)
from .flow import FlowParams, estimate_flow
from .formation import GsSequence, row_time, synthesize_dual_pair
from .metrics import cycle_losses, psnr, ssim
from .reconstruction import (
    reconstruct_rs_full,
    reconstruct_rs_with_intermediate,
)
from .scene import Rotation, SceneSpec, Translation, Zoom, render_gs_at, render_rs_exact

DEFAULT_GS_TARGETS = 9


def worker_count() -> int:
    env = os.environ.get("RSCORRECT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"RSCORRECT_THREADS must be an integer, got {env!r}") from exc
    return min(4, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# argument parsing helpers


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_size(text: str):
    try:
        w_part, h_part = text.lower().split("x")
        width, height = int(w_part), int(h_part)
    except ValueError as exc:
        raise UsageError(f"size must look like 256x256, got {text!r}") from exc
    return width, height


def parse_scene(text: str, seed: int, width: int, height: int, channels: int, margin: float) -> SceneSpec:
    """Parse a scene string such as ``translation:vx=6,vy=0``."""
    name, _, arg_text = text.partition(":")
    kwargs = {}
    if arg_text:
        for part in arg_text.split(","):
            key, _, val = part.partition("=")
            if not val:
                raise UsageError(f"scene argument {part!r} must look like key=value")
            try:
                kwargs[key.strip()] = float(val)
            except ValueError as exc:
                raise UsageError(f"scene argument {part!r} has a non-numeric value") from exc
    name = name.strip().lower()
    center = (kwargs.pop("cx", (width - 1) / 2.0), kwargs.pop("cy", (height - 1) / 2.0))
    if name in ("translation", "static"):
        motion = Translation(kwargs.pop("vx", 0.0), kwargs.pop("vy", 0.0))
    elif name == "rotation":
        motion = Rotation(kwargs.pop("omega", 0.0), center)
    elif name == "zoom":
        motion = Zoom(kwargs.pop("rate", 0.0), center)
    else:
        raise UsageError(f"unknown scene kind {name!r} (use translation, rotation, zoom, static)")
    if kwargs:
        raise UsageError(f"unused scene arguments: {sorted(kwargs)}")
    return SceneSpec(height, width, motion, seed=seed, channels=channels, margin=margin)


def scene_text(spec: SceneSpec) -> str:
    """Serialize a scene spec to the manifest string form (round-trips
    through :func:`scene_from_text`)."""
    m = spec.motion
    if isinstance(m, Translation):
        motion = f"translation:vx={m.vx!r},vy={m.vy!r}"
    elif isinstance(m, Rotation):
        motion = f"rotation:omega={m.omega!r},cx={m.center[0]!r},cy={m.center[1]!r}"
    else:
        motion = f"zoom:rate={m.rate!r},cx={m.center[0]!r},cy={m.center[1]!r}"
    return (
        f"{motion};seed={spec.seed};size={spec.width}x{spec.height};"
        f"channels={spec.channels};margin={spec.margin!r}"
    )


def scene_from_text(text: str) -> SceneSpec:
    """Rebuild a scene spec from its serialized manifest string."""
    parts = text.split(";")
    fields = {}
    for part in parts[1:]:
        key, _, val = part.partition("=")
        if not val:
            raise UsageError(f"malformed scene field {part!r}")
        fields[key] = val
    try:
        width, height = parse_size(fields["size"])
        seed = int(fields["seed"])
        channels = int(fields["channels"])
        margin = float(fields["margin"])
    except KeyError as exc:
        raise UsageError(f"scene text missing field {exc}") from exc
    return parse_scene(parts[0], seed, width, height, channels, margin)


def parse_targets(text: str, height: int) -> list:
    """Parse a target list: integers are rows, decimals in [0, 1] are scan
    fractions mapped to the nearest row, and ``H`` means the last row."""
    rows = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if token.upper() == "H":
            rows.append(height)
            continue
        try:
            value = float(token)
        except ValueError as exc:
            raise UsageError(f"target {token!r} is not a row or fraction") from exc
        if "." in token or "e" in token.lower():
            if not 0.0 <= value <= 1.0:
                raise UsageError(f"fractional target {token!r} must lie in [0, 1]")
            rows.append(int(np.floor(1.0 + value * (height - 1) + 0.5)))
        else:
            rows.append(int(value))
    if not rows:
        raise UsageError("target list is empty")
    return rows


def _resolve_targets(args, height: int) -> list:
    if getattr(args, "targets", None):
        return parse_targets(args.targets, height)
    return target_row_grid(height, args.gs_targets)


def _flow_pair_from_args(args, height: int, width: int):
    if not getattr(args, "flow_in", None):
        return None
    parts = [p.strip() for p in args.flow_in.split(",")]
    if len(parts) != 2:
        raise UsageError("--flow-in expects two files: forward.flo,backward.flo")
    pair = (read_flo(parts[0]), read_flo(parts[1]))
    for f in pair:
        if (f.height, f.width) != (height, width):
            raise UsageError(
                f"injected flow {f.height}x{f.width} does not match images {height}x{width}"
            )
    return pair


def _flow_params_dict(fp: FlowParams) -> dict:
    return {
        "pyramid_factor": fp.pyramid_factor,
        "min_level_size": fp.min_level_size,
        "warp_iterations": fp.warp_iterations,
        "smoothness": fp.smoothness,
        "robust_eps": fp.robust_eps,
        "median_radius": fp.median_radius,
    }


def _scan_dict(scan: ScanConfig) -> dict:
    return {
        "height": scan.height,
        "width": scan.width,
        "tau": scan.tau,
        "t_mid": scan.t_mid,
    }


def _gs_name(idx: int) -> str:
    return f"gs_{idx:03d}.png"


# ---------------------------------------------------------------------------
# synthesize


def _load_gs_dir(path: Path) -> GsSequence:
    times_file = path / "times.txt"
    if not times_file.exists():
        raise UsageError(f"{path} must contain a times.txt file")
    times = [float(line) for line in times_file.read_text().split()]
    frames = sorted(p for p in path.iterdir() if p.suffix.lower() == ".png")
    if len(frames) != len(times):
        raise UsageError(f"{path}: {len(frames)} frames but {len(times)} times")
    return GsSequence([read_frame(p) for p in frames], np.asarray(times))


def cmd_synthesize(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    width, height = parse_size(args.size)
    tau = args.tau if args.tau is not None else 1.0 / (height - 1)
    scan_t2b = ScanConfig(height, width, tau, Direction.TOP_TO_BOTTOM, args.t_mid)
    scan_b2t = scan_t2b.with_direction(Direction.BOTTOM_TO_TOP)
    targets = _resolve_targets(args, height)

    manifest = {
        "run": {"command": "synthesize", "version": __version__},
        "scan": _scan_dict(scan_t2b),
        "targets": targets,
        "out_dir": str(args.out),
    }

    if args.gs_dir:
        seq = _load_gs_dir(Path(args.gs_dir))
        ref = seq.frames[0]
        if (ref.height, ref.width) != (height, width):
            raise UsageError(
                f"--size {args.size} does not match the {ref.width}x{ref.height} frames in --gs-dir"
            )
        rs_t2b, rs_b2t = synthesize_dual_pair(seq, scan_t2b, scan_b2t)
        gt = [Frame(seq.frame_at(row_time(scan_t2b, m), f"target row {m}").copy()) for m in targets]
        manifest["inputs"] = {
            "gs_dir": str(args.gs_dir),
            "content_hash": sha256_text(",".join(sha256_file(p) for p in sorted(Path(args.gs_dir).iterdir()))),
        }
    else:
        needed = 0.0
        probe = parse_scene(args.scene, args.seed, width, height, args.channels, margin=1e9)
        for t in (scan_t2b.t_start, scan_t2b.t_end):
            needed = max(needed, probe.motion.max_displacement(t, height, width))
        spec = parse_scene(args.scene, args.seed, width, height, args.channels, margin=float(np.ceil(needed) + 4.0))
        rs_t2b = render_rs_exact(spec, scan_t2b)
        rs_b2t = render_rs_exact(spec, scan_b2t)
        gt = [render_gs_at(spec, row_time(scan_t2b, m)) for m in targets]
        manifest["inputs"] = {
            "scene": scene_text(spec),
            "content_hash": sha256_text(scene_text(spec)),
        }

    write_frame(out / "I_t2b.png", rs_t2b)
    write_frame(out / "I_b2t.png", rs_b2t)
    for idx, frame in enumerate(gt):
        write_frame(out / _gs_name(idx), frame)
    manifest["outputs"] = ["I_t2b.png", "I_b2t.png"] + [_gs_name(i) for i in range(len(gt))]
    write_manifest(out / "manifest.txt", manifest)
    print(f"synthesize: wrote 2 RS frames and {len(gt)} GS frames to {out}")
    return 0


# ---------------------------------------------------------------------------
# correct


def cmd_correct(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    i_t2b = read_frame(args.t2b)
    i_b2t = read_frame(args.b2t)
    height, width = i_t2b.height, i_t2b.width
    scan = ScanConfig(height, width, args.tau, Direction.TOP_TO_BOTTOM, args.t_mid)
    targets = _resolve_targets(args, height)
    flow_pair = _flow_pair_from_args(args, height, width)
    run_pair = flow_pair
    if args.dump_flow and run_pair is None:
        # estimate once and share it between the correction and the dump
        run_pair = (estimate_flow(i_t2b, i_b2t), estimate_flow(i_b2t, i_t2b))
    params = CorrectionParams(
        fixed_point_iters=args.fixed_point_iters, use_external_flow=run_pair
    )

    results = correct_video_detailed(i_t2b, i_b2t, scan, targets, params, workers=worker_count())

    for idx, res in enumerate(results):
        write_frame(out / _gs_name(idx), res.frame)
    coverage_lines = [
        f"{_gs_name(i)}: target_row={r.target_row} filled_invalid_pixels={r.filled_count}"
        for i, r in enumerate(results)
    ]
    (out / "coverage.txt").write_text("\n".join(coverage_lines) + "\n", encoding="utf-8")

    outputs = [_gs_name(i) for i in range(len(results))] + ["coverage.txt"]
    if args.dump_flow:
        write_flo(out / "flow_t2b_to_b2t.flo", run_pair[0])
        write_flo(out / "flow_b2t_to_t2b.flo", run_pair[1])
        outputs += ["flow_t2b_to_b2t.flo", "flow_b2t_to_t2b.flo"]

    manifest = {
        "run": {"command": "correct", "version": __version__},
        "inputs": {
            "t2b": str(args.t2b),
            "b2t": str(args.b2t),
            "t2b_hash": sha256_file(args.t2b),
            "b2t_hash": sha256_file(args.b2t),
        },
        "scan": _scan_dict(scan),
        "targets": targets,
        "flow_params": _flow_params_dict(params.flow_params),
        "fixed_point_iters": params.fixed_point_iters,
        "external_flow": bool(flow_pair),
        "out_dir": str(args.out),
        "outputs": outputs,
    }
    write_manifest(out / "manifest.txt", manifest)
    total_filled = sum(r.filled_count for r in results)
    print(f"correct: wrote {len(results)} GS frames to {out} (filled pixels: {total_filled})")
    return 0


# ---------------------------------------------------------------------------
# reconstruct-rs


def cmd_reconstruct_rs(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames = [read_frame(p) for p in args.gs_frames]
    if len(frames) == 2:
        if args.mid_row is not None:
            raise UsageError("--mid-row applies only to the three-frame mode")
        rec_t2b = reconstruct_rs_full(frames[0], frames[1], Direction.TOP_TO_BOTTOM)
        rec_b2t = reconstruct_rs_full(frames[0], frames[1], Direction.BOTTOM_TO_TOP)
    elif len(frames) == 3:
        if args.mid_row is None:
            raise UsageError("three-frame reconstruction requires --mid-row")
        rec_t2b = reconstruct_rs_with_intermediate(
            frames[0], frames[1], frames[2], args.mid_row, Direction.TOP_TO_BOTTOM
        )
        rec_b2t = reconstruct_rs_with_intermediate(
            frames[0], frames[1], frames[2], args.mid_row, Direction.BOTTOM_TO_TOP
        )
    else:
        raise UsageError(f"expected 2 or 3 GS frames, got {len(frames)}")

    write_frame(out / "recon_t2b.png", rec_t2b)
    write_frame(out / "recon_b2t.png", rec_b2t)
    manifest = {
        "run": {"command": "reconstruct-rs", "version": __version__},
        "inputs": {
            "gs_frames": [str(p) for p in args.gs_frames],
            "hashes": [sha256_file(p) for p in args.gs_frames],
        },
        "mid_row": args.mid_row if args.mid_row is not None else "none",
        "out_dir": str(args.out),
        "outputs": ["recon_t2b.png", "recon_b2t.png"],
    }
    write_manifest(out / "manifest.txt", manifest)
    print(f"reconstruct-rs: wrote recon_t2b.png and recon_b2t.png to {out}")
    return 0


# ---------------------------------------------------------------------------
# cycle-check


def run_cycle_check(
    i_t2b: Frame,
    i_b2t: Frame,
    scan: ScanConfig,
    mid_row: int | None = None,
    params: CorrectionParams | None = None,
    border: int = 0,
):
    """Correct to start/mid/end rows, rebuild the RS pair both ways, score.

    Returns ``(report, quality, frames)`` where ``report`` is the loss
    breakdown, ``quality`` maps each reconstruction to (PSNR, SSIM) against
    its input, and ``frames`` holds the intermediate images.
    """
    params = params or CorrectionParams()
    h = scan.height
    m = mid_row if mid_row is not None else (h + 1) // 2
    results = correct_video_detailed(i_t2b, i_b2t, scan, [1, m, h], params)
    g_start, g_mid, g_end = (r.frame for r in results)

    full_t2b = reconstruct_rs_full(g_start, g_end, Direction.TOP_TO_BOTTOM)
    full_b2t = reconstruct_rs_full(g_start, g_end, Direction.BOTTOM_TO_TOP)
    mid_t2b = reconstruct_rs_with_intermediate(g_start, g_mid, g_end, m, Direction.TOP_TO_BOTTOM)
    mid_b2t = reconstruct_rs_with_intermediate(g_start, g_mid, g_end, m, Direction.BOTTOM_TO_TOP)

    report = cycle_losses(
        (i_t2b, i_b2t), (full_t2b, full_b2t), (mid_t2b, mid_b2t), border=border
    )
    quality = {
        "full_t2b": (psnr(full_t2b, i_t2b, border), ssim(full_t2b, i_t2b, border)),
        "full_b2t": (psnr(full_b2t, i_b2t, border), ssim(full_b2t, i_b2t, border)),
        "mid_t2b": (psnr(mid_t2b, i_t2b, border), ssim(mid_t2b, i_t2b, border)),
        "mid_b2t": (psnr(mid_b2t, i_b2t, border), ssim(mid_b2t, i_b2t, border)),
    }
    frames = {
        "gs_start": g_start,
        "gs_mid": g_mid,
        "gs_end": g_end,
        "full_t2b": full_t2b,
        "full_b2t": full_b2t,
        "mid_t2b": mid_t2b,
        "mid_b2t": mid_b2t,
    }
    return report, quality, frames


def cmd_cycle_check(args) -> int:
    i_t2b = read_frame(args.t2b)
    i_b2t = read_frame(args.b2t)
    height, width = i_t2b.height, i_t2b.width
    scan = ScanConfig(height, width, args.tau, Direction.TOP_TO_BOTTOM, args.t_mid)
    flow_pair = _flow_pair_from_args(args, height, width)
    params = CorrectionParams(use_external_flow=flow_pair)
    report, quality, frames = run_cycle_check(
        i_t2b, i_b2t, scan, args.mid_row, params, border=args.exclude_border
    )

    lines = [f"cycle-check: mid_row={args.mid_row if args.mid_row is not None else (height + 1) // 2}"]
    lines += report.lines()
    for name, (p, s) in quality.items():
        lines.append(f"psnr[{name}]: {p:.4f}")
        lines.append(f"ssim[{name}]: {s:.6f}")
    text = "\n".join(lines)
    print(text)

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, frame in frames.items():
            write_frame(out / f"{name}.png", frame)
        (out / "cycle_report.txt").write_text(text + "\n", encoding="utf-8")
        manifest = {
            "run": {"command": "cycle-check", "version": __version__},
            "inputs": {
                "t2b": str(args.t2b),
                "b2t": str(args.b2t),
                "t2b_hash": sha256_file(args.t2b),
                "b2t_hash": sha256_file(args.b2t),
            },
            "scan": _scan_dict(scan),
            "flow_params": _flow_params_dict(params.flow_params),
            "external_flow": bool(flow_pair),
            "out_dir": str(args.out),
            "outputs": sorted(f"{n}.png" for n in frames) + ["cycle_report.txt"],
        }
        write_manifest(out / "manifest.txt", manifest)
    return 0


# ---------------------------------------------------------------------------
# evaluate


def cmd_evaluate(args) -> int:
    dir_a, dir_b = Path(args.dir_a), Path(args.dir_b)
    names_a = {p.name for p in dir_a.glob("*.png")}
    names_b = {p.name for p in dir_b.glob("*.png")}
    unmatched = sorted(names_a ^ names_b)
    if unmatched:
        for name in unmatched:
            side = args.dir_a if name in names_a else args.dir_b
            print(f"unmatched: {name} (only in {side})", file=sys.stderr)
        raise ToolkitError(f"{len(unmatched)} unmatched file name(s) between {dir_a} and {dir_b}")
    names = sorted(names_a)
    if not names:
        raise ToolkitError(f"no PNG frames found in {dir_a}")

    def score(name: str):
        fa = read_frame(dir_a / name)
        fb = read_frame(dir_b / name)
        return name, psnr(fa, fb, args.exclude_border), ssim(fa, fb, args.exclude_border)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        rows = list(pool.map(score, names))
    for name, p, s in rows:
        print(f"{name}: psnr={p:.4f} ssim={s:.6f}")
    mean_p = float(np.mean([r[1] for r in rows]))
    mean_s = float(np.mean([r[2] for r in rows]))
    print(f"mean: psnr={mean_p:.4f} ssim={mean_s:.6f} frames={len(rows)}")
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> _Parser:
    parser = _Parser(prog="rscorrect", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="render or assemble a dual reversed RS pair")
    p.add_argument("--scene", default="static", help="scene spec, e.g. translation:vx=6,vy=0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", default="256x256", help="canvas WxH")
    p.add_argument("--channels", type=int, default=1, choices=(1, 3))
    p.add_argument("--gs-dir", default=None, help="directory of GS PNG frames plus times.txt")
    p.add_argument("--tau", type=float, default=None, help="per-row readout seconds")
    p.add_argument("--t-mid", type=float, default=0.0)
    p.add_argument("--gs-targets", type=int, default=DEFAULT_GS_TARGETS)
    p.add_argument("--targets", default=None, help="explicit rows/fractions, e.g. 1,0.5,H")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("correct", help="correct a dual reversed RS pair to GS frames")
    p.add_argument("t2b", help="top-to-bottom RS image")
    p.add_argument("b2t", help="bottom-to-top RS image")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--t-mid", type=float, default=0.0)
    p.add_argument("--gs-targets", type=int, default=DEFAULT_GS_TARGETS)
    p.add_argument("--targets", default=None, help="rows/fractions, e.g. 1,0.5,H")
    p.add_argument("--flow-in", default=None, help="inject forward.flo,backward.flo")
    p.add_argument("--dump-flow", action="store_true")
    p.add_argument("--fixed-point-iters", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("reconstruct-rs", help="rebuild the RS pair from GS frames")
    p.add_argument("gs_frames", nargs="+", help="2 frames (start end) or 3 (start mid end)")
    p.add_argument("--mid-row", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct_rs)

    p = sub.add_parser("cycle-check", help="correct, reconstruct, and score consistency")
    p.add_argument("t2b")
    p.add_argument("b2t")
    p.add_argument("--mid-row", type=int, default=None, help="defaults to the center row")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--t-mid", type=float, default=0.0)
    p.add_argument("--flow-in", default=None)
    p.add_argument("--exclude-border", type=int, default=0)
    p.add_argument("--out", default=None, help="also write intermediate frames and the report")
    p.set_defaults(func=cmd_cycle_check)

    p = sub.add_parser("evaluate", help="PSNR/SSIM between equally named frames")
    p.add_argument("dir_a")
    p.add_argument("dir_b")
    p.add_argument("--exclude-border", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
