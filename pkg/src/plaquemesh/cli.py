"""Command line interface.

Subcommands:
  run      extract a plaque from one or more label volumes and write all
           artifacts (meshes, unfolded map, report, histogram)
  compare  baseline/follow-up delta report from two report.json files
  phantom  generate a synthetic labeled tube volume with ground truth

Exit codes: 0 success (with or without plaque), 2 input error,
3 pipeline-stage error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import multiprocessing
import sys
from pathlib import Path

import numpy as np

from . import analysis, phantom, plaque, svgrender, unfold
from .errors import (
    PipelineStageError,
    PlaquemeshError,
    ValidationError,
)
from .isosurface import SMOOTH_ITERATIONS_DEFAULT, SMOOTH_RELAXATION_DEFAULT
from .mesh import TriangleMesh
from .ply import write_ply
from .volume_io import IntensityVolume, LabelVolume, read_nrrd, write_nrrd

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STAGE = 3

_STAGE_FILES = (
    "outer",
    "outer_dist",
    "region_outer",
    "region_inner",
    "shells",
    "stitched",
    "plaque",
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plaquemesh",
        description="Plaque mesh extraction and analysis from labeled "
        "vessel-wall volumes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the extraction pipeline")
    run.add_argument("--labels", action="append", required=True,
                     help="label volume (NRRD); repeat for multiple arteries")
    run.add_argument("--intensity", action="append", default=None,
                     help="matching intensity volume (NRRD), one per --labels")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--threshold-mode", choices=("global", "case", "both"),
                     default="case")
    run.add_argument("--k", type=float, default=plaque.DEFAULT_K)
    run.add_argument("--smooth-iters", type=int,
                     default=SMOOTH_ITERATIONS_DEFAULT)
    run.add_argument("--smooth-relax", type=float,
                     default=SMOOTH_RELAXATION_DEFAULT)
    run.add_argument("--min-area", type=float, default=plaque.MIN_REGION_AREA_MM2)
    run.add_argument("--bin-width", type=float, default=None)
    run.add_argument("--debug-stages", action="store_true")
    run.add_argument("--jobs", type=int, default=1)

    cmp_parser = sub.add_parser("compare",
                                help="delta report between two runs")
    cmp_parser.add_argument("baseline")
    cmp_parser.add_argument("followup")
    cmp_parser.add_argument("--out", default=None, help="write delta JSON here")

    ph = sub.add_parser("phantom", help="generate a synthetic tube phantom")
    ph.add_argument("--kind", choices=("straight", "curved"), default="straight")
    ph.add_argument("--out", required=True, help="output NRRD path")
    ph.add_argument("--lumen-radius", type=float, default=3.0)
    ph.add_argument("--wall", type=float, default=1.0)
    ph.add_argument("--voxel", type=float, default=0.5)
    ph.add_argument("--length", type=float, default=40.0)
    ph.add_argument("--noise", type=float, default=0.0)
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--bump-amplitude", type=float, default=0.0)
    ph.add_argument("--bump-sigma-axial", type=float, default=4.0)
    ph.add_argument("--bump-sigma-angular", type=float, default=0.6)
    ph.add_argument("--bump-center-axial", type=float, default=None,
                    help="defaults to the tube midpoint")
    ph.add_argument("--bump-center-angular", type=float, default=0.0)
    ph.add_argument("--intensity-out", default=None,
                    help="also write a synthetic intensity volume")
    ph.add_argument("--truth-out", default=None,
                    help="write ground-truth JSON here")
    return parser


# -- run --------------------------------------------------------------------


def _mode_name(mode: str) -> str:
    return plaque.MODE_GLOBAL if mode == "global" else plaque.MODE_CASE


def _run_single(
    labels_path: str,
    intensity_path: str | None,
    out_dir: Path,
    mode: str,
    args_dict: dict,
) -> dict:
    """One artery, one threshold mode; returns the report dict."""
    out_dir.mkdir(parents=True, exist_ok=True)
    volume = read_nrrd(labels_path)
    if not isinstance(volume, LabelVolume):
        raise ValidationError(f"{labels_path} is not a label volume")
    intensity = None
    if intensity_path is not None:
        intensity = read_nrrd(intensity_path)
        if not isinstance(intensity, IntensityVolume):
            raise ValidationError(f"{intensity_path} is not an intensity volume")
        if not intensity.same_geometry(volume):
            raise ValidationError(
                "intensity volume geometry does not match the label volume"
            )

    result = plaque.extract_plaque(
        volume,
        mode=_mode_name(mode),
        k=args_dict["k"],
        smooth_iterations=args_dict["smooth_iters"],
        smooth_relaxation=args_dict["smooth_relax"],
        min_area_mm2=args_dict["min_area"],
    )

    write_ply(result.inner, out_dir / "inner.ply")
    write_ply(result.outer, out_dir / "outer.ply")

    if args_dict["debug_stages"]:
        _write_debug_stages(result, out_dir / "stages")

    if not result.has_plaque:
        report = {
            "plaque": "none",
            "reason": result.no_plaque_reason,
            "threshold": result.threshold.to_json_dict(),
        }
        analysis.write_report_json(report, out_dir / "report.json")
        return report

    write_ply(result.plaque.mesh, out_dir / "plaque.ply")

    patch = unfold.lscm_unfold(result.region_outer.mesh)
    vwt_range = (float(patch.vwt.min()), float(patch.vwt.max()))
    if vwt_range[1] <= vwt_range[0]:
        vwt_range = (vwt_range[0], vwt_range[0] + 1.0)
    svgrender.write_svg(patch, vwt_range, out_dir / "unfolded.svg")
    write_ply(patch.to_mesh(), out_dir / "unfolded.ply")

    histogram = None
    flags = []
    if intensity is not None:
        inside = analysis.voxels_inside(
            result.plaque.mesh, volume.dims, volume.spacing, volume.origin
        )
        if len(inside) == 0:
            flags.append("sub-voxel plaque")
        histogram = analysis.intensity_histogram(
            inside, intensity, bin_width=args_dict["bin_width"], reference=volume
        )
        if histogram.bins:
            analysis.write_histogram_csv(histogram, out_dir / "histogram.csv")

    report = analysis.geometric_parameters(
        result.plaque, histogram=histogram, flags=flags
    )
    doc = report.to_json_dict()
    doc["unfolding"] = {
        "conformal_energy": patch.conformal_energy,
        "pinned_vertices": list(patch.pinned),
        "pinned_distance_mm": patch.pinned_distance,
        "cut_paths": [list(p) for p in patch.cut_paths],
        "max_distortion": float(patch.distortion.max()),
    }
    analysis.write_report_json(doc, out_dir / "report.json")
    return doc


def _write_debug_stages(result, stage_dir: Path) -> None:
    stage_dir.mkdir(parents=True, exist_ok=True)
    write_ply(result.outer, stage_dir / "outer.ply")
    if "vwt" in result.outer.attributes:
        write_ply(result.outer, stage_dir / "outer_dist.ply")
    if result.region_outer is not None:
        write_ply(result.region_outer.mesh, stage_dir / "region_outer.ply")
    if result.region_inner is not None:
        write_ply(result.region_inner.mesh, stage_dir / "region_inner.ply")
    if result.shells is not None:
        inner_shell, outer_shell = result.shells
        combined = TriangleMesh(
            np.vstack([inner_shell.vertices, outer_shell.vertices]),
            np.vstack(
                [inner_shell.triangles,
                 outer_shell.triangles + inner_shell.n_vertices]
            ),
        )
        write_ply(combined, stage_dir / "shells.ply")
    if result.stitched is not None:
        write_ply(result.stitched.mesh, stage_dir / "stitched.ply")
    if result.plaque is not None:
        write_ply(result.plaque.mesh, stage_dir / "plaque.ply")


def _run_command(args) -> int:
    labels = args.labels
    intensities = args.intensity or [None] * len(labels)
    if len(intensities) != len(labels):
        print("error: need one --intensity per --labels", file=sys.stderr)
        return EXIT_INPUT
    out_root = Path(args.out)
    modes = ["global", "case"] if args.threshold_mode == "both" else [
        args.threshold_mode
    ]
    args_dict = {
        "k": args.k,
        "smooth_iters": args.smooth_iters,
        "smooth_relax": args.smooth_relax,
        "min_area": args.min_area,
        "bin_width": args.bin_width,
        "debug_stages": args.debug_stages,
    }

    tasks = []
    for labels_path, intensity_path in zip(labels, intensities):
        stem_dir = out_root if len(labels) == 1 else out_root / Path(labels_path).stem
        for mode in modes:
            mode_dir = stem_dir if len(modes) == 1 else stem_dir / mode
            tasks.append((labels_path, intensity_path, mode_dir, mode))

    results = {}
    try:
        if args.jobs > 1 and len(tasks) > 1:
            # spawn, not fork: the compiled kernels' OpenMP runtime is
            # fork-unsafe once it has been used in the parent
            with concurrent.futures.ProcessPoolExecutor(
                max_workers=args.jobs,
                mp_context=multiprocessing.get_context("spawn"),
            ) as pool:
                futures = {
                    pool.submit(
                        _run_single, lp, ip, md, mode, args_dict
                    ): (lp, mode)
                    for lp, ip, md, mode in tasks
                }
                for fut, key in futures.items():
                    results[key] = fut.result()
        else:
            for lp, ip, md, mode in tasks:
                results[(lp, mode)] = _run_single(lp, ip, md, mode, args_dict)
    except PipelineStageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (OSError, PlaquemeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    for (labels_path, mode), report in sorted(results.items()):
        status = report.get("plaque")
        extra = (
            f"V={report['volume_mm3']:.2f} mm^3"
            if status == "extracted"
            else report.get("reason", "")
        )
        print(f"{labels_path} [{mode}]: plaque={status} {extra}")

    if args.threshold_mode == "both":
        _write_mode_comparison(results, labels, out_root)
    return EXIT_OK


def _write_mode_comparison(results, labels, out_root: Path) -> None:
    rows = ["labels,mode,extracted,pt_mm,volume_mm3,area_mm2,compactness"]
    for labels_path in labels:
        for mode in ("global", "case"):
            rep = results[(labels_path, mode)]
            extracted = rep.get("plaque") == "extracted"
            rows.append(
                ",".join(
                    [
                        Path(labels_path).name,
                        mode,
                        str(extracted).lower(),
                        repr(rep["threshold"]["pt_mm"]),
                        repr(rep.get("volume_mm3", "")) if extracted else "",
                        repr(rep.get("area_mm2", "")) if extracted else "",
                        repr(rep.get("compactness", "")) if extracted else "",
                    ]
                )
            )
    (out_root / "comparison.csv").write_text("\n".join(rows) + "\n",
                                             encoding="utf-8")


# -- compare ------------------------------------------------------------------

_DELTA_FIELDS = ("volume_mm3", "area_mm2", "compactness", "max_extent_mm")


def compare_reports(baseline: dict, followup: dict) -> dict:
    """Signed deltas and percent changes between two report documents."""
    for name, doc in (("baseline", baseline), ("followup", followup)):
        if "plaque" not in doc:
            raise ValidationError(f"{name} report lacks the 'plaque' field")

    delta: dict = {"baseline_plaque": baseline["plaque"],
                   "followup_plaque": followup["plaque"]}
    if baseline["plaque"] == "extracted" and followup["plaque"] == "none":
        delta["note"] = "plaque resolved below threshold"
    elif baseline["plaque"] == "none" and followup["plaque"] == "extracted":
        delta["note"] = "plaque newly detected"

    if baseline["plaque"] == "extracted" and followup["plaque"] == "extracted":
        for name in _DELTA_FIELDS:
            if name not in baseline or name not in followup:
                raise ValidationError(f"report lacks field {name!r}")
            b, f = float(baseline[name]), float(followup[name])
            delta[name] = {
                "baseline": b,
                "followup": f,
                "delta": f - b,
                "percent": (f - b) / b * 100.0 if b != 0 else None,
            }
    return delta


def _compare_command(args) -> int:
    try:
        baseline = json.loads(Path(args.baseline).read_text(encoding="utf-8"))
        followup = json.loads(Path(args.followup).read_text(encoding="utf-8"))
        delta = compare_reports(baseline, followup)
    except (OSError, json.JSONDecodeError, PlaquemeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = json.dumps(delta, indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


# -- phantom ------------------------------------------------------------------


def _phantom_command(args) -> int:
    kind = phantom.STRAIGHT if args.kind == "straight" else phantom.CURVED
    bump = None
    if args.bump_amplitude > 0:
        center = (
            args.bump_center_axial
            if args.bump_center_axial is not None
            else args.length / 2.0
        )
        bump = phantom.BumpSpec(
            center_axial=center,
            center_angular=args.bump_center_angular,
            amplitude=args.bump_amplitude,
            sigma_axial=args.bump_sigma_axial,
            sigma_angular=args.bump_sigma_angular,
        )
    try:
        spec = phantom.PhantomSpec(
            kind=kind,
            lumen_radius=args.lumen_radius,
            wall_thickness=args.wall,
            voxel_size=args.voxel,
            length=args.length,
            bump=bump,
            noise_sigma=args.noise,
            seed=args.seed,
        )
        volume, truth = phantom.generate_phantom(spec)
        write_nrrd(volume, args.out)
        if args.intensity_out:
            write_nrrd(_synthetic_intensity(volume), args.intensity_out)
    except (PlaquemeshError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.truth_out:
        Path(args.truth_out).write_text(
            json.dumps(
                {
                    "excess_volume_mm3": truth.excess_volume_mm3,
                    "bump_footprint_mm2": truth.bump_footprint_mm2,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
    print(f"wrote {args.out} (dims {volume.dims}, "
          f"excess volume {truth.excess_volume_mm3:.3f} mm^3)")
    return EXIT_OK


def _synthetic_intensity(volume: LabelVolume) -> IntensityVolume:
    """MRI-ish intensities from labels: dark background, bright wall."""
    values = np.zeros(volume.dims, dtype=np.float32)
    values[volume.labels == 0] = 20.0
    values[volume.labels == 1] = 50.0
    values[volume.labels == 2] = 200.0
    return IntensityVolume(
        dims=volume.dims,
        spacing=volume.spacing,
        origin=volume.origin,
        values=values,
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _run_command(args)
    if args.command == "compare":
        return _compare_command(args)
    return _phantom_command(args)


if __name__ == "__main__":
    sys.exit(main())
