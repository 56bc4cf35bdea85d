"""Command-line entry point for the full pipeline.

Exit codes: 0 success, 2 usage error, 3 input format error, 4 contract
violation. All subcommands are deterministic given their flags and --seed;
only wall-clock fields of `bench` reports vary between runs.

Orientation maps travel through PFM files with angles normalized by pi.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import fusion, hierarchy, orientation
from .errors import ContractError, FormatError
from .raster import (
    BinStack,
    ContourMap,
    OrientationMap,
    load_bin_stack,
    read_pfm,
    read_pfm_raw,
    read_pgm,
    resample_nearest,
    write_pfm,
    write_pfm_raw,
    write_pgm,
)


def _load_weights(spec: str, count: int) -> list[float]:
    """Weights as an inline JSON list or a path to a JSON file."""
    try:
        data = json.loads(spec)
    except json.JSONDecodeError:
        try:
            data = json.loads(Path(spec).read_text())
        except OSError:
            raise FormatError(f"--weights {spec!r} is neither JSON nor a readable file") from None
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed weights JSON: {exc}") from None
    if not isinstance(data, list) or not all(isinstance(x, (int, float)) for x in data):
        raise FormatError("weights must be a JSON list of numbers")
    if len(data) != count:
        raise ContractError(f"{len(data)} weights for {count} inputs")
    return [float(x) for x in data]


def _resample_bins(bins: BinStack, width: int, height: int) -> BinStack:
    if (bins.width, bins.height) == (width, height):
        return bins
    maps = [
        resample_nearest(ContourMap(bins.responses[k]), width, height).values
        for k in range(bins.K)
    ]
    return BinStack(np.stack(maps))


def cmd_build(args) -> int:
    contour_maps = [read_pfm(args.contours)[0]]
    for extra in args.scales or []:
        contour_maps.append(read_pfm(extra)[0])
    bins = load_bin_stack(args.bins, args.K)[0] if args.bins else None

    hierarchies = []
    for cm in contour_maps:
        sb = hierarchy.watershed(cm)
        if bins is not None:
            sb = hierarchy.owt_reweight(
                sb, _resample_bins(bins, cm.width, cm.height), args.poly_tol
            )
        hierarchies.append(hierarchy.build_ucm(sb))
    if len(hierarchies) > 1:
        weights = (
            _load_weights(args.weights, len(hierarchies))
            if args.weights
            else [1.0] * len(hierarchies)
        )
        result = hierarchy.combine_multiscale(hierarchies, weights)
    else:
        result = hierarchies[0]

    out = Path(args.out)
    hierarchy.save_hierarchy(result, out)
    ucm = hierarchy.to_ucm_grid(result)
    stem = out.stem if out.suffix == ".json" else out.name
    write_pfm_raw(ucm.cells, out.parent / (stem + ".ucm.pfm"))
    return 0


def cmd_threshold(args) -> int:
    h = hierarchy.load_hierarchy(args.hierarchy)
    labels = hierarchy.threshold(h, args.t)
    write_pgm(labels, args.out)
    return 0


def cmd_bench(args) -> int:
    report = bench_mod.run_bench(args.width, args.height, args.regions, args.repr, args.seed)
    print(json.dumps(report.to_dict()))
    return 0


def cmd_decode_orient(args) -> int:
    bins, _ = load_bin_stack(args.bins, args.K)
    spec = orientation.BinSpec(args.K if args.K else bins.K)
    om = orientation.decode_orientation(bins, spec, args.strong_ratio, args.eps, args.seed)
    write_pfm(ContourMap(om.angles / np.pi), args.out)
    if args.confidence_out:
        write_pfm(orientation.bin_confidence(bins), args.confidence_out)
    return 0


def cmd_gt_orient(args) -> int:
    labels = read_pgm(args.labels, kind="labels")
    gt = orientation.assign_gt_orientations(labels, orientation.BinSpec(args.K), args.tol)
    orientation.save_gt_csv(gt, args.out)
    return 0


def cmd_eval_orient(args) -> int:
    angles_norm, _ = read_pfm(args.angles)
    pred = OrientationMap(np.mod(angles_norm.values * np.pi, np.pi))
    confidence, _ = read_pfm(args.confidence)
    gt = orientation.load_gt_csv(args.gt)
    curve, auc = orientation.eval_orientation(pred, confidence, gt, orientation.BinSpec(args.K))
    orientation.save_curve_csv(curve, args.out)
    print(f"{auc:.12g}")
    return 0


def cmd_loss(args) -> int:
    p, _ = read_pfm(args.pred)
    y = read_pgm(args.gt, kind="binary")
    beta = None if args.beta == "auto" else float(args.beta)
    value = fusion.class_balanced_loss(p, y, beta)
    print(f"{value:.12g}")
    return 0


def cmd_fuse(args) -> int:
    maps = [read_pfm_raw(p) for p in args.sides]
    width = args.width if args.width else maps[0].shape[1]
    height = args.height if args.height else maps[0].shape[0]
    sides = fusion.SideActivations(maps, width, height)
    weights = fusion.FusionWeights(_load_weights(args.weights, len(maps)))
    fused = fusion.fuse_sides(sides, weights)
    write_pfm(fused, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hierseg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="contour map(s) -> region hierarchy JSON + UCM PFM")
    p.add_argument("--contours", required=True, help="contour strength PFM (finest scale)")
    p.add_argument("--bins", help="directory of bins_k<k>.pfm orientation responses")
    p.add_argument("--K", type=int, help="orientation bin count (default: files present)")
    p.add_argument("--poly-tol", type=float, default=3.0, dest="poly_tol",
                   help="polygon simplification tolerance in pixels")
    p.add_argument("--scales", nargs="+", help="additional contour PFMs, one per scale")
    p.add_argument("--weights", help="scale weights: JSON list or path to one")
    p.add_argument("--out", required=True, help="hierarchy JSON output path")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("threshold", help="hierarchy JSON + level -> label PGM")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("bench", help="sparse-vs-dense merge benchmark (JSON on stdout)")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--regions", type=int, required=True)
    p.add_argument("--repr", choices=("sparse", "dense"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("decode-orient", help="bin responses -> orientation map PFM (angles/pi)")
    p.add_argument("--bins", required=True)
    p.add_argument("--K", type=int)
    p.add_argument("--strong-ratio", type=float, default=0.5, dest="strong_ratio")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--confidence-out", dest="confidence_out",
                   help="also write max-bin-response confidence PFM")
    p.set_defaults(func=cmd_decode_orient)

    p = sub.add_parser("gt-orient", help="label PGM -> per-edgel orientation bins CSV")
    p.add_argument("--labels", required=True)
    p.add_argument("--K", type=int, default=8)
    p.add_argument("--tol", type=float, default=3.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gt_orient)

    p = sub.add_parser("eval-orient",
                       help="accuracy-vs-confidence curve CSV; prints AUC")
    p.add_argument("--angles", required=True, help="orientation PFM (angles/pi)")
    p.add_argument("--confidence", required=True)
    p.add_argument("--gt", required=True, help="gt-orient CSV")
    p.add_argument("--K", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_orient)

    p = sub.add_parser("loss", help="class-balanced cross-entropy of a prediction")
    p.add_argument("--pred", required=True, help="probability PFM")
    p.add_argument("--gt", required=True, help="binary PGM (nonzero = contour)")
    p.add_argument("--beta", default="auto", help='balance weight in (0,1), or "auto"')
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("fuse", help="sigmoid-fuse side activation PFMs")
    p.add_argument("--sides", nargs="+", required=True)
    p.add_argument("--weights", required=True, help="JSON list or path to one")
    p.add_argument("--width", type=int, help="fusion width (default: first side's)")
    p.add_argument("--height", type=int, help="fusion height (default: first side's)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
