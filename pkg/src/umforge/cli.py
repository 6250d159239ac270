"""Command-line interface.

Exit codes: 0 success, 1 data/validation error, 2 usage error. Every run
writes a run manifest (inputs, outputs, config hash, versions, raised flags)
to <workdir>/run-manifest.json, on failures too. Manifests carry no
wall-clock data so reruns with identical inputs are bit-identical.

All randomness flows from --seed through per-item hashed streams, and batch
work is parallelized over independent files, so worker count never changes
results.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import platform
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig, worker_count
from .editing import Ellipse, PatchSpec, Polygon, intensity_sweep, insert_patch
from .errors import ParameterError, UmforgeError, UmforgeWarning
from .image import ValueSpace, build_montage, hu_window
from .metrics import (
    AVERAGE_IMAGE_CODEC,
    EvalGrid,
    avg_image_compressed_size,
    dice,
    grid_summary,
    kl_hu_histogram,
    mm_fid,
    mm_std,
    normalize_grids,
    wilcoxon_signed_rank,
)
from .pngio import (
    load_gray,
    load_labeling,
    load_seg_mask,
    load_series_manifest,
    load_umask,
    save_gray,
    save_labeling,
    save_umask,
    sidecar_path,
)
from .refvalues import REFERENCE_RESULTS
from .superpixels import under_segmentation_error
from .umask import generate_unsupervised_mask, validate_mask
from .umft import read_feature_dir

MANIFEST_NAME = "run-manifest.json"


def _resolve(workdir: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else workdir / p


def _parallel_map(fn, items, workers: int):
    """Map a picklable worker over independent items, in stable item order.

    Workers are separate processes (the per-item work is CPU-bound numpy);
    every item writes only its own artifacts, so worker count cannot change
    any output byte.
    """
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _capture_flags(fn, *args):
    """Run fn recording UmforgeWarning flags (works inside worker processes)."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UmforgeWarning)
        result = fn(*args)
    flags = [
        f"{type(w.message).__name__}: {w.message}"
        for w in caught
        if isinstance(w.message, UmforgeWarning)
    ]
    return result, flags


def _load_config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        cfg = PipelineConfig.load(_resolve(Path(args.workdir), args.config))
    else:
        cfg = PipelineConfig()
    return cfg.with_overrides(seed=getattr(args, "seed", None))


def _parse_patch(text: str) -> object:
    kind, _, rest = text.partition(":")
    try:
        if kind == "ellipse":
            cx, cy, rx, ry = (float(v) for v in rest.split(","))
            return Ellipse(cx, cy, rx, ry)
        if kind == "polygon":
            nums = [float(v) for v in rest.split(",")]
            if len(nums) < 6 or len(nums) % 2:
                raise ParameterError("polygon needs at least 3 x,y pairs")
            return Polygon(tuple(zip(nums[0::2], nums[1::2])))
    except ValueError as exc:
        raise ParameterError(f"cannot parse patch spec {text!r}: {exc}") from exc
    raise ParameterError(f"unknown patch kind {kind!r} (expected ellipse:... or polygon:...)")


def _read_float_column(path: Path) -> list[float]:
    values = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            values.append(float(line))
    return values


def _collect_images(args, workdir: Path) -> list[Path]:
    paths: list[Path] = []
    for p in getattr(args, "input", None) or []:
        paths.append(_resolve(workdir, p))
    if getattr(args, "input_dir", None):
        directory = _resolve(workdir, args.input_dir)
        paths.extend(sorted(directory.glob("*.png")))
    if not paths:
        raise ParameterError("no input images (use --input or --input-dir)")
    return paths


class _Run:
    """Accumulates manifest data for one CLI invocation."""

    def __init__(self, args, command: str):
        self.workdir = Path(args.workdir)
        self.command = command
        self.argv = list(args._argv)
        self.config = _load_config(args)
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self.flags: list[str] = []

    def note_inputs(self, *paths):
        self.inputs.extend(str(p) for p in paths)

    def note_outputs(self, *paths):
        self.outputs.extend(str(p) for p in paths)

    def write_manifest(self, status: str, error: str | None = None):
        payload = {
            "command": self.command,
            "argv": self.argv,
            "config": json.loads(self.config.to_json()),
            "config_hash": self.config.hash(),
            "inputs": sorted(self.inputs),
            "outputs": sorted(self.outputs),
            "flags": sorted(self.flags),
            "status": status,
            "versions": {
                "umforge": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
            },
        }
        if error is not None:
            payload["error"] = error
        self.workdir.mkdir(parents=True, exist_ok=True)
        path = self.workdir / MANIFEST_NAME
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _montage_worker(item):
    series, cfg, out_dir, no_window = item

    def work():
        montage = build_montage(series, cfg.seed, min_lung_fraction=cfg.min_lung_fraction)
        image = montage.image
        if image.value_space is ValueSpace.HU and not no_window:
            image = hu_window(image, *cfg.hu_window)
        out_path = out_dir / f"{series.patient_id}_montage.png"
        save_gray(out_path, image)
        meta = {
            "patient_id": series.patient_id,
            "source_slice_indices": list(montage.source_slice_indices),
            "seed": montage.seed,
        }
        side = sidecar_path(out_path)
        side.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        return out_path

    return _capture_flags(work)


def _cmd_prep_montage(args, run: _Run) -> int:
    workdir = run.workdir
    manifest_path = _resolve(workdir, args.manifest)
    out_dir = _resolve(workdir, args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    series_list = load_series_manifest(manifest_path)
    run.note_inputs(manifest_path)
    cfg = run.config
    workers = worker_count(cfg, args.parallelism)
    items = [(series, cfg, out_dir, args.no_window) for series in series_list]
    results = _parallel_map(_montage_worker, items, workers)
    for out_path, flags in results:
        run.note_outputs(out_path)
        run.flags.extend(flags)
    for p in sorted(str(out) for out, _ in results):
        print(p)
    return 0


def _umask_gen_worker(item):
    path, cfg, out_dir, save_labeling_too = item

    def work():
        img = load_gray(path)
        if img.value_space is ValueSpace.HU:
            img = hu_window(img, *cfg.hu_window)
        produced = []
        if save_labeling_too:
            from .superpixels import slic
            from .umask import assign_mean_intensity, quantize_superclusters

            labeling = slic(img, cfg.superpixels_m, cfg.compactness, cfg.max_iters)
            lab_path = out_dir / f"{path.stem}_superpixels.png"
            save_labeling(lab_path, labeling)
            produced.append(lab_path)
            mask = quantize_superclusters(assign_mean_intensity(labeling, img), cfg.threshold_t)
            mask = dataclasses.replace(mask, superpixel_count_m=cfg.superpixels_m)
        else:
            mask = generate_unsupervised_mask(
                img, cfg.superpixels_m, cfg.threshold_t, cfg.compactness, cfg.max_iters
            )
        mask_path = out_dir / f"{path.stem}_umask.png"
        save_umask(mask_path, mask)
        produced.append(mask_path)
        return produced

    return _capture_flags(work)


def _cmd_umask_gen(args, run: _Run) -> int:
    workdir = run.workdir
    paths = _collect_images(args, workdir)
    out_dir = _resolve(workdir, args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = run.config.with_overrides(
        superpixels_m=args.superpixels,
        threshold_t=args.threshold,
        compactness=args.compactness,
        max_iters=args.max_iters,
    )
    run.note_inputs(*paths)
    workers = worker_count(cfg, args.parallelism)
    items = [(path, cfg, out_dir, args.save_labeling) for path in paths]
    for produced, flags in _parallel_map(_umask_gen_worker, items, workers):
        run.note_outputs(*produced)
        run.flags.extend(flags)
        for p in produced:
            print(p)
    return 0


def _cmd_umask_useg(args, run: _Run) -> int:
    labeling = load_labeling(_resolve(run.workdir, args.labels))
    gt = load_seg_mask(_resolve(run.workdir, args.gt))
    run.note_inputs(args.labels, args.gt)
    value = under_segmentation_error(labeling, gt)
    print(json.dumps({"under_segmentation_error": value}))
    return 0


def _cmd_umask_validate(args, run: _Run) -> int:
    path = _resolve(run.workdir, args.mask)
    run.note_inputs(path)
    mask = load_umask(path)
    validate_mask(mask)
    print(json.dumps({
        "valid": True,
        "t": mask.threshold_t,
        "M": mask.superpixel_count_m,
        "supercluster_values": list(mask.supercluster_values),
    }))
    return 0


def _cmd_edit_patch(args, run: _Run) -> int:
    workdir = run.workdir
    mask = load_umask(_resolve(workdir, args.mask))
    run.note_inputs(args.mask)
    patch = PatchSpec(shape=_parse_patch(args.patch), intensity=args.intensity)
    edited = insert_patch(mask, patch)
    out_path = _resolve(workdir, args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_umask(out_path, edited)
    run.note_outputs(out_path)
    print(out_path)
    return 0


def _cmd_edit_sweep(args, run: _Run) -> int:
    workdir = run.workdir
    mask = load_umask(_resolve(workdir, args.mask))
    run.note_inputs(args.mask)
    out_dir = _resolve(workdir, args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    sweeps = []
    if args.batch:
        batch_path = _resolve(workdir, args.batch)
        run.note_inputs(batch_path)
        for i, entry in enumerate(json.loads(batch_path.read_text(encoding="utf-8"))):
            sweeps.append((f"batch{i}", entry["patch"], [int(v) for v in entry["values"]]))
    else:
        if not args.patch or not args.values:
            raise ParameterError("sweep needs --patch and --values (or --batch)")
        values = [int(v) for v in args.values.split(",") if v.strip()]
        sweeps.append(("sweep", args.patch, values))
    stem = Path(args.mask).stem
    for name, patch_text, values in sweeps:
        patch = PatchSpec(shape=_parse_patch(patch_text), intensity=values[0] if values else 0)
        for value, edited in zip(values, intensity_sweep(mask, patch, values)):
            out_path = out_dir / f"{stem}_{name}_v{value:03d}.png"
            save_umask(out_path, edited)
            run.note_outputs(out_path)
            print(out_path)
    return 0


def _write_grid(args, run: _Run, grid: EvalGrid) -> None:
    out_path = _resolve(run.workdir, args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(grid.to_json(), encoding="utf-8")
    run.note_outputs(out_path)
    if args.csv:
        csv_path = _resolve(run.workdir, args.csv)
        csv_path.write_text(grid.to_csv(), encoding="utf-8")
        run.note_outputs(csv_path)
    mean, std = grid_summary(grid)
    print(f"{grid.kind} grid written to {out_path} (mean {mean:.6g} +/- {std:.6g})")


def _cmd_eval_mmfid(args, run: _Run) -> int:
    real = read_feature_dir(_resolve(run.workdir, args.real))
    synth = read_feature_dir(_resolve(run.workdir, args.synth))
    run.note_inputs(args.real, args.synth)
    cfg = run.config
    grid = mm_fid(real, synth, scales=cfg.scales, tasks=cfg.tasks)
    run.flags.extend(grid.flags)
    _write_grid(args, run, grid)
    return 0


def _cmd_eval_mmstd(args, run: _Run) -> int:
    sets = read_feature_dir(_resolve(run.workdir, args.features))
    run.note_inputs(args.features)
    cfg = run.config
    grid = mm_std(sets, scales=cfg.scales, tasks=cfg.tasks)
    if args.audit_out:
        from .metrics import mm_std_per_dimension

        audit = {
            f"{fs.scale}:{fs.task_id}": [float(v) for v in mm_std_per_dimension(fs)]
            for fs in sets
        }
        audit_path = _resolve(run.workdir, args.audit_out)
        audit_path.write_text(json.dumps(audit, sort_keys=True, indent=2) + "\n",
                              encoding="utf-8")
        run.note_outputs(audit_path)
    _write_grid(args, run, grid)
    return 0


def _cmd_eval_dice(args, run: _Run) -> int:
    a = load_seg_mask(_resolve(run.workdir, args.a))
    b = load_seg_mask(_resolve(run.workdir, args.b))
    run.note_inputs(args.a, args.b)
    value = dice(a, b, args.label)
    print(json.dumps({"dice": value, "label": args.label}))
    return 0


def _cmd_eval_kl(args, run: _Run) -> int:
    def pool(paths):
        values = []
        for p in paths:
            img = load_gray(_resolve(run.workdir, p))
            values.append(np.asarray(img.pixels, dtype=np.float64).ravel())
        return np.concatenate(values)

    run.note_inputs(*args.real, *args.synth)
    value = kl_hu_histogram(
        pool(args.real), pool(args.synth), bin_width=args.bin_width, value_range=(args.lo, args.hi)
    )
    print(json.dumps({"kl_divergence_nats": value}))
    return 0


def _cmd_eval_avgsize(args, run: _Run) -> int:
    paths = _collect_images(args, run.workdir)
    run.note_inputs(*paths)
    images = [load_gray(p) for p in paths]
    result = avg_image_compressed_size(images)
    out_path = _resolve(run.workdir, args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_gray(out_path, result.avg_image)
    run.note_outputs(out_path)
    print(json.dumps({
        "bytes": result.num_bytes,
        "codec": AVERAGE_IMAGE_CODEC,
        "num_images": len(images),
        "avg_image": str(out_path),
    }))
    return 0


def _cmd_eval_wilcoxon(args, run: _Run) -> int:
    a = _read_float_column(_resolve(run.workdir, args.a))
    b = _read_float_column(_resolve(run.workdir, args.b))
    run.note_inputs(args.a, args.b)
    result = wilcoxon_signed_rank(a, b, alternative=args.alternative)
    print(json.dumps({"W": result.statistic, "p_value": result.p_value,
                      "alternative": args.alternative}))
    return 0


def _render_grid(grid: EvalGrid) -> str:
    header = ["scale \\ task", *grid.tasks]
    rows = [header]
    for scale, row in zip(grid.scales, grid.cells):
        rows.append([str(scale), *(f"{v:.6g}" for v in row)])
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for r in rows:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(r, widths)))
    mean, std = grid_summary(grid)
    tag = " (normalized)" if grid.normalized else ""
    lines.append(f"{grid.kind}{tag} mean over cells: {mean:.6g} +/- {std:.6g}")
    if grid.flags:
        lines.append("flags: " + ", ".join(grid.flags))
    return "\n".join(lines)


def _cmd_report(args, run: _Run) -> int:
    grids = []
    for path in args.grids:
        p = _resolve(run.workdir, path)
        run.note_inputs(p)
        grids.append((path, EvalGrid.from_json(p.read_text(encoding="utf-8"))))
    if args.normalize:
        normed = normalize_grids([g for _, g in grids])
        grids = [(name, g) for (name, _), g in zip(grids, normed)]
    for name, grid in grids:
        print(f"== {name} ==")
        print(_render_grid(grid))
        print()
    if args.with_reference:
        print("== full-scale reference values ==")
        print(json.dumps(REFERENCE_RESULTS, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="umforge",
        description="Unsupervised-mask generation, CT montage prep, mask editing, "
        "and multi-scale multi-task synthesis evaluation.",
    )
    parser.add_argument("--workdir", default=".", help="Base directory for relative paths")
    parser.add_argument("--config", help="Pipeline config JSON (flags override it)")
    parser.add_argument("--seed", type=int, default=None, help="Master seed for all randomness")
    parser.add_argument("--parallelism", type=int, default=None,
                        help="Worker count (default: UMFORGE_THREADS or config)")
    parser.add_argument("--json-errors", action="store_true",
                        help="Emit a machine-readable error JSON on stderr for failures")
    sub = parser.add_subparsers(dest="command", required=True)

    prep = sub.add_parser("prep", help="Preprocessing").add_subparsers(
        dest="subcommand", required=True
    )
    montage = prep.add_parser("montage", help="Build 2x2 CT montages from a series manifest")
    montage.add_argument("--manifest", required=True, help="Series manifest JSON")
    montage.add_argument("--out", required=True, help="Output directory")
    montage.add_argument("--no-window", action="store_true",
                         help="Keep HU values instead of windowing to Unit8")
    montage.set_defaults(handler=_cmd_prep_montage)

    umask = sub.add_parser("umask", help="Unsupervised masks").add_subparsers(
        dest="subcommand", required=True
    )
    gen = umask.add_parser("gen", help="Generate unsupervised masks from images")
    gen.add_argument("--input", action="append", help="Input PNG (repeatable)")
    gen.add_argument("--input-dir", help="Directory of input PNGs")
    gen.add_argument("--out", required=True, help="Output directory")
    gen.add_argument("--superpixels", type=int, default=None, help="Superpixel count M")
    gen.add_argument("--threshold", type=int, default=None, help="Intensity threshold t")
    gen.add_argument("--compactness", type=float, default=None, help="SLIC compactness")
    gen.add_argument("--max-iters", type=int, default=None, help="SLIC iteration cap")
    gen.add_argument("--save-labeling", action="store_true",
                     help="Also write the superpixel labeling PNG + sidecar")
    gen.set_defaults(handler=_cmd_umask_gen)
    useg = umask.add_parser("useg", help="Under-segmentation error of a labeling")
    useg.add_argument("--labels", required=True, help="Superpixel labeling PNG")
    useg.add_argument("--gt", required=True, help="Ground-truth segmentation PNG")
    useg.set_defaults(handler=_cmd_umask_useg)
    validate = umask.add_parser("validate", help="Check unsupervised-mask invariants")
    validate.add_argument("--mask", required=True, help="Mask PNG (with sidecar)")
    validate.set_defaults(handler=_cmd_umask_validate)

    edit = sub.add_parser("edit", help="Mask editing").add_subparsers(
        dest="subcommand", required=True
    )
    patch = edit.add_parser("patch", help="Insert one patch into a mask")
    patch.add_argument("--mask", required=True)
    patch.add_argument("--patch", required=True,
                       help="ellipse:cx,cy,rx,ry or polygon:x0,y0,x1,y1,...")
    patch.add_argument("--intensity", type=int, required=True)
    patch.add_argument("--out", required=True)
    patch.set_defaults(handler=_cmd_edit_patch)
    sweep = edit.add_parser("sweep", help="Insert the same patch at several intensities")
    sweep.add_argument("--mask", required=True)
    sweep.add_argument("--patch")
    sweep.add_argument("--values", help="Comma-separated intensities")
    sweep.add_argument("--batch", help="JSON batch file: [{patch, values}, ...]")
    sweep.add_argument("--out", required=True, help="Output directory")
    sweep.set_defaults(handler=_cmd_edit_sweep)

    ev = sub.add_parser("eval", help="Evaluation metrics").add_subparsers(
        dest="subcommand", required=True
    )
    mmfid = ev.add_parser("mmfid", help="Multi-scale multi-task FID grid")
    mmfid.add_argument("--real", required=True, help="Directory of real *.umft files")
    mmfid.add_argument("--synth", required=True, help="Directory of synthetic *.umft files")
    mmfid.add_argument("--out", required=True, help="Grid JSON output")
    mmfid.add_argument("--csv", help="Also write the grid as CSV")
    mmfid.set_defaults(handler=_cmd_eval_mmfid)
    mmstd = ev.add_parser("mmstd", help="Multi-scale multi-task STD grid")
    mmstd.add_argument("--features", required=True, help="Directory of *.umft files")
    mmstd.add_argument("--out", required=True)
    mmstd.add_argument("--csv")
    mmstd.add_argument("--audit-out",
                       help="Also write per-dimension stds per cell as JSON")
    mmstd.set_defaults(handler=_cmd_eval_mmstd)
    dice_p = ev.add_parser("dice", help="Dice overlap for one label")
    dice_p.add_argument("--a", required=True)
    dice_p.add_argument("--b", required=True)
    dice_p.add_argument("--label", type=int, required=True)
    dice_p.set_defaults(handler=_cmd_eval_dice)
    kl = ev.add_parser("kl", help="KL divergence of HU histograms")
    kl.add_argument("--real", nargs="+", required=True, help="Real HU PNGs")
    kl.add_argument("--synth", nargs="+", required=True, help="Synthetic HU PNGs")
    kl.add_argument("--bin-width", type=float, default=10.0)
    kl.add_argument("--lo", type=float, default=-1500.0)
    kl.add_argument("--hi", type=float, default=100.0)
    kl.set_defaults(handler=_cmd_eval_kl)
    avgsize = ev.add_parser("avgsize", help="Compressed size of the average image")
    avgsize.add_argument("--input", action="append", help="Input PNG (repeatable)")
    avgsize.add_argument("--input-dir", help="Directory of input PNGs")
    avgsize.add_argument("--out", required=True, help="Where to write the average image")
    avgsize.set_defaults(handler=_cmd_eval_avgsize)
    wil = ev.add_parser("wilcoxon", help="Wilcoxon signed-rank test on paired columns")
    wil.add_argument("--a", required=True, help="Text file, one float per line")
    wil.add_argument("--b", required=True, help="Text file, one float per line")
    wil.add_argument("--alternative", choices=["two-sided", "greater", "less"],
                     default="two-sided")
    wil.set_defaults(handler=_cmd_eval_wilcoxon)

    report = sub.add_parser("report", help="Render grid JSON files as tables")
    report.add_argument("--grids", nargs="+", required=True)
    report.add_argument("--normalize", action="store_true",
                        help="Min-max normalize across the given grids per cell")
    report.add_argument("--with-reference", action="store_true",
                        help="Also print full-scale reference values")
    report.set_defaults(handler=_cmd_report)

    return parser


def run_cli(argv) -> int:
    argv = list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = argv
    command = args.command + (f" {args.subcommand}" if getattr(args, "subcommand", None) else "")
    try:
        run = _Run(args, command)
    except UmforgeError as exc:
        if args.json_errors:
            print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
                  file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", UmforgeWarning)
            code = args.handler(args, run)
            run.flags.extend(
                f"{type(w.message).__name__}: {w.message}"
                for w in caught
                if isinstance(w.message, UmforgeWarning)
            )
        run.write_manifest("ok")
        return code
    except UmforgeError as exc:
        run.write_manifest("error", error=f"{type(exc).__name__}: {exc}")
        if args.json_errors:
            print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
                  file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
