"""Command-line interface.

Subcommands: ingest (validate/convert band-stack rasters), synth
(generate synthetic regions), autolabel (index-based labeling of a
region), run (the full experiment protocol), eval (recompute metrics
from saved predictions), heatmap (misclassification heatmaps from saved
predictions), serve (the label-correction HTTP service).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluation, synth
from .autolabel import AutoLabelConfig
from .experiment import (
    ExperimentConfig,
    recompute_metrics,
    run_experiment,
    write_metrics_csv,
)
from .pipeline import autolabel_region
from .preprocess import PreprocessConfig, match_pair
from .raster import (
    BiTemporalPair,
    export_png,
    read_labels,
    read_raster,
    write_labels,
    write_raster,
)


def _load_config_file(path) -> dict:
    path = Path(path)
    if path.suffix == ".toml":
        import tomllib

        return tomllib.loads(path.read_text())
    return json.loads(path.read_text())


def cmd_ingest(args) -> int:
    status = 0
    for raster_path in args.rasters:
        try:
            r = read_raster(raster_path)
        except Exception as exc:  # noqa: BLE001
            print(f"{raster_path}: INVALID ({exc})", file=sys.stderr)
            status = 1
            continue
        print(
            f"{raster_path}: ok {r.width}x{r.height}, bands {', '.join(r.bands)}"
        )
        if args.out:
            out = Path(args.out) / Path(raster_path).with_suffix(".json").name
            write_raster(r, out)
            print(f"  -> {out}")
        if args.png:
            triple = ("Red", "Green", "Blue") if args.png == "rgb" else ("SWIR1", "Green", "Blue")
            out_png = Path(args.out or ".") / (Path(raster_path).stem + f"_{args.png}.png")
            export_png(r, *triple, out_png)
            print(f"  -> {out_png}")
    return status


def cmd_synth(args) -> int:
    overrides = _load_config_file(args.config) if args.config else {}
    out = Path(args.out)
    for i in range(args.regions):
        cfg = synth.SynthConfig(**{**overrides, "seed": args.seed + i})
        scene = synth.synth_generate(cfg)
        region_dir = out / f"region_{i:02d}"
        synth.write_region(scene, region_dir)
        print(f"region_{i:02d}: {cfg.width}x{cfg.height}, seed {cfg.seed} -> {region_dir}")
    return 0


def cmd_autolabel(args) -> int:
    region_dir = Path(args.region)
    pair = BiTemporalPair(
        t1=read_raster(region_dir / "t1.json"),
        t2=read_raster(region_dir / "t2.json"),
    )
    if args.match:
        pair = match_pair(pair, PreprocessConfig(band_mode="six", histogram_bins=args.bins))
    cfg = AutoLabelConfig(
        ci_low=args.ci_low,
        ci_high=args.ci_high,
        mndwi_water_threshold=args.water_threshold,
        min_pond_pixels=args.min_pond_pixels,
        cleanup="majority" if args.cleanup else "none",
    )
    s1, s2, change = autolabel_region(pair, cfg)
    out = Path(args.out) if args.out else region_dir
    write_labels(s1, out / "labels_t1.json")
    write_labels(s2, out / "labels_t2.json")
    write_labels(change, out / "labels_change.json")
    for name, labels in (("t1", s1), ("t2", s2), ("change", change)):
        counts = {
            labels.classes[c]: int(np.sum(labels.values == c)) for c in labels.class_codes()
        }
        print(f"{name}: {counts}")
    return 0


def cmd_run(args) -> int:
    raw = _load_config_file(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    cfg = ExperimentConfig.from_dict(raw, base_dir=Path(args.config).parent)
    result = run_experiment(cfg, args.out)
    print(f"{len(result.rows)} result rows -> {result.csv_path}")
    if result.failures:
        print(f"{len(result.failures)} cell(s) failed; see failures.json", file=sys.stderr)
        return 1
    return 0


def cmd_eval(args) -> int:
    rows = recompute_metrics(args.run_dir)
    out = Path(args.out) if args.out else Path(args.run_dir) / "metrics_recomputed.csv"
    write_metrics_csv(rows, out)
    print(f"{len(rows)} rows -> {out}")
    return 0


def cmd_heatmap(args) -> int:
    run_dir = Path(args.run_dir)
    manifest = json.loads((run_dir / "run_manifest.json").read_text())
    cfg = ExperimentConfig.from_dict(manifest["config"])
    made = 0
    for spec in cfg.regions:
        if args.region and spec.id != args.region:
            continue
        truth = read_labels(spec.truth)
        for method in cfg.methods:
            if args.method and method != args.method:
                continue
            for size in cfg.label_sizes:
                if args.size and size != args.size:
                    continue
                preds = []
                for trial in range(cfg.n_trials):
                    p = run_dir / "predictions" / spec.id / f"{method}_L{size}_t{trial}.json"
                    if p.exists():
                        preds.append(read_labels(p))
                if not preds:
                    continue
                png = run_dir / "heatmaps" / f"{spec.id}_{method}_L{size}.png"
                png.parent.mkdir(parents=True, exist_ok=True)
                evaluation.misclassification_heatmap(preds, truth, png_path=png)
                made += 1
                print(f"heatmap: {png}")
    if made == 0:
        print("no matching predictions found", file=sys.stderr)
        return 1
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.root, port=args.port, host=args.host)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pondwatch",
        description="Mining-pond change detection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate band-stack rasters")
    p.add_argument("rasters", nargs="+", help="header .json paths")
    p.add_argument("--out", help="rewrite validated rasters into this directory")
    p.add_argument("--png", choices=["rgb", "swgb"], help="also export a composite PNG")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate synthetic regions")
    p.add_argument("--regions", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON/TOML with SynthConfig overrides")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("autolabel", help="index-based labeling of a region directory")
    p.add_argument("--region", required=True)
    p.add_argument("--out", help="output directory (defaults to the region)")
    p.add_argument("--match", action="store_true", default=True,
                   help="histogram-match t2 to t1 first (default)")
    p.add_argument("--no-match", dest="match", action="store_false")
    p.add_argument("--bins", type=int, default=65536)
    p.add_argument("--ci-low", type=float, default=0.0)
    p.add_argument("--ci-high", type=float, default=0.15)
    p.add_argument("--water-threshold", type=float, default=0.0)
    p.add_argument("--min-pond-pixels", type=int, default=5)
    p.add_argument("--cleanup", action="store_true", default=True)
    p.add_argument("--no-cleanup", dest="cleanup", action="store_false")
    p.set_defaults(func=cmd_autolabel)

    p = sub.add_parser("run", help="run the experiment protocol")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="recompute metrics from saved predictions")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("heatmap", help="misclassification heatmaps from saved predictions")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--region")
    p.add_argument("--method")
    p.add_argument("--size", type=int)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("serve", help="label-correction HTTP service")
    p.add_argument("--root", required=True, help="directory of region folders")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
