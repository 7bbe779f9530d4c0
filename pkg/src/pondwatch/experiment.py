"""Experiment orchestration: the multi-trial protocol over all methods.

For every region x method x label-size x trial the runner preprocesses
(match -> select -> optional lift -> stack -> normalize), samples a
training set from the truth change map, trains the method, predicts the
full map, and scores it on the labeled pixels left out of training.
Results land in a deterministic metrics CSV plus prediction rasters and
misclassification heatmaps; a failed cell is logged and skipped without
voiding the sweep.
"""

from __future__ import annotations

import csv
import json
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import evaluation
from .preprocess import (
    BAND_MODES,
    PreprocessConfig,
    lift,
    match_pair,
    normalize,
    select_bands,
    stack_bitemporal,
)
from .raster import BiTemporalPair, LabelRaster, read_labels, read_raster, write_raster
from .raster import write_labels
from .spatial import (
    CompositeKernelParams,
    ScMkParams,
    build_composite_kernel,
    build_scmk_kernel,
    composite_features,
    pixel_features,
    scmk_features,
    slic_superpixels,
)
from .svm import KernelSpec, SvmParams, train_multiclass
from .tvdenoise import TvParams, argmax_map, tv_denoise
from .svm.model import ProbabilityTensor

METHODS = ("nu_svm", "svm_ck", "sc_mk", "svm_stv", "svm_stv_lifted")

_CSV_COLUMNS = [
    "region", "band_mode", "method", "labels_per_class", "trial", "seed",
    "kappa", "jaccard_macro", "f1_macro",
]


@dataclass
class RegionSpec:
    id: str
    t1: str
    t2: str
    truth: str

    @staticmethod
    def from_dir(region_dir, region_id: str | None = None) -> "RegionSpec":
        region_dir = Path(region_dir)
        return RegionSpec(
            id=region_id or region_dir.name,
            t1=str(region_dir / "t1.json"),
            t2=str(region_dir / "t2.json"),
            truth=str(region_dir / "truth_change.json"),
        )


@dataclass
class ExperimentConfig:
    regions: list[RegionSpec]
    band_mode: str = "six"
    lift: bool = False
    methods: tuple = ("nu_svm", "svm_ck", "sc_mk", "svm_stv")
    label_sizes: tuple = (10, 20, 30, 50, 100)
    n_trials: int = 10
    seed: int = 0
    nu: float = 0.15
    kernel: str = "rbf"
    gamma: float | None = None
    svm_tolerance: float = 1e-4
    svm_max_iterations: int = 100_000
    ck_mu: float = 0.5
    ck_window: int = 5
    scmk_superpixels: int | None = None  # None: pixel count / 64
    scmk_compactness: float = 0.25
    scmk_weights: tuple = (0.4, 0.4, 0.2)
    tv_beta: float = 2.0
    tv_epsilon: float = 0.05
    tv_max_iterations: int = 200
    tv_tolerance: float = 1e-5
    histogram_bins: int = 65536
    workers: int = 1
    save_predictions: bool = True
    save_heatmaps: bool = True

    def __post_init__(self):
        if not self.regions:
            raise ValueError("at least one region is required")
        if self.band_mode not in BAND_MODES:
            raise ValueError(f"band_mode must be one of {sorted(BAND_MODES)}")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; known: {METHODS}")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if not self.label_sizes:
            raise ValueError("label_sizes must be non-empty")
        for spec in self.regions:
            for p in (spec.t1, spec.t2, spec.truth):
                if not Path(p).exists():
                    raise FileNotFoundError(f"region {spec.id}: missing {p}")

    def svm_params(self) -> SvmParams:
        return SvmParams(
            nu=self.nu,
            kernel=KernelSpec(kind=self.kernel, gamma=self.gamma),
            tolerance=self.svm_tolerance,
            max_iterations=self.svm_max_iterations,
        )

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["regions"] = [vars(r) for r in self.regions]
        d["methods"] = list(self.methods)
        d["label_sizes"] = list(self.label_sizes)
        d["scmk_weights"] = list(self.scmk_weights)
        return d

    @staticmethod
    def from_dict(d: dict, base_dir=None) -> "ExperimentConfig":
        d = dict(d)
        base = Path(base_dir) if base_dir else Path(".")
        regions = []
        for r in d.pop("regions"):
            if isinstance(r, str):
                regions.append(RegionSpec.from_dir(base / r))
            else:
                regions.append(
                    RegionSpec(
                        id=r["id"],
                        t1=str(base / r["t1"]),
                        t2=str(base / r["t2"]),
                        truth=str(base / r["truth"]),
                    )
                )
        known = {f for f in ExperimentConfig.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("methods", "label_sizes", "scmk_weights"):
            if key in d:
                d[key] = tuple(d[key])
        return ExperimentConfig(regions=regions, **d)


@dataclass
class ExperimentResult:
    rows: list[dict]
    failures: list[dict]
    out_dir: Path

    @property
    def csv_path(self) -> Path:
        return self.out_dir / "metrics.csv"


def trial_seed(master_seed: int, trial: int) -> int:
    return master_seed + trial


def preprocess_pair(pair: BiTemporalPair, band_mode: str, lifted: bool,
                    histogram_bins: int = 65536):
    """match -> select -> optional lift -> stack -> normalize."""
    matched = match_pair(pair, PreprocessConfig(band_mode=band_mode,
                                                histogram_bins=histogram_bins))
    t1 = select_bands(matched.t1, band_mode)
    t2 = select_bands(matched.t2, band_mode)
    if lifted:
        t1, t2 = lift(t1), lift(t2)
    stacked = stack_bitemporal(BiTemporalPair(t1=t1, t2=t2))
    return normalize(stacked)


class _RegionRunner:
    """Everything one region needs: features, kernels, caches."""

    def __init__(self, cfg: ExperimentConfig, spec: RegionSpec, out_dir: Path):
        self.cfg = cfg
        self.spec = spec
        self.out_dir = out_dir
        pair = BiTemporalPair(t1=read_raster(spec.t1), t2=read_raster(spec.t2))
        self.truth = read_labels(spec.truth)
        self.height, self.width = self.truth.height, self.truth.width
        self.base = preprocess_pair(pair, cfg.band_mode, cfg.lift, cfg.histogram_bins)
        self._lifted = None
        if "svm_stv_lifted" in cfg.methods:
            self._lifted = preprocess_pair(pair, cfg.band_mode, True, cfg.histogram_bins)
        self._features: dict[str, tuple[np.ndarray, object]] = {}

    def feature_set(self, name: str):
        """(feature rows, kernel) for 'pixel', 'pixel_lifted', 'ck' or 'scmk'."""
        if name in self._features:
            return self._features[name]
        cfg = self.cfg
        if name == "pixel":
            X = pixel_features(self.base)
            kernel = cfg.svm_params().kernel.build(X.shape[1])
        elif name == "pixel_lifted":
            X = pixel_features(self._lifted)
            kernel = cfg.svm_params().kernel.build(X.shape[1])
        elif name == "ck":
            params = CompositeKernelParams(
                mu=cfg.ck_mu,
                window=cfg.ck_window,
                spectral_kernel=KernelSpec(cfg.kernel, cfg.gamma),
                spatial_kernel=KernelSpec(cfg.kernel, cfg.gamma),
            )
            X = composite_features(self.base, params)
            kernel = build_composite_kernel(params, len(self.base.bands))
        elif name == "scmk":
            n_pixels = self.height * self.width
            count = cfg.scmk_superpixels or max(16, n_pixels // 64)
            params = ScMkParams(
                superpixel_count=count,
                compactness=cfg.scmk_compactness,
                w_pixel=cfg.scmk_weights[0],
                w_within=cfg.scmk_weights[1],
                w_neighbor=cfg.scmk_weights[2],
                kernel=KernelSpec(cfg.kernel, cfg.gamma),
            )
            seg = slic_superpixels(self.base, params.superpixel_count, params.compactness)
            X = scmk_features(self.base, seg)
            kernel = build_scmk_kernel(params, len(self.base.bands))
        else:
            raise ValueError(f"unknown feature set {name!r}")
        self._features[name] = (X, kernel)
        return X, kernel

    def run(self):
        cfg = self.cfg
        rows, failures = [], []
        # Feature sets required per trained model; nu_svm and svm_stv
        # share one model (the TV stage only post-processes probabilities).
        model_sets = []
        if "nu_svm" in cfg.methods or "svm_stv" in cfg.methods:
            model_sets.append("pixel")
        if "svm_ck" in cfg.methods:
            model_sets.append("ck")
        if "sc_mk" in cfg.methods:
            model_sets.append("scmk")
        if "svm_stv_lifted" in cfg.methods:
            model_sets.append("pixel_lifted")
        set_methods = {
            "pixel": [m for m in ("nu_svm", "svm_stv") if m in cfg.methods],
            "ck": ["svm_ck"] if "svm_ck" in cfg.methods else [],
            "scmk": ["sc_mk"] if "sc_mk" in cfg.methods else [],
            "pixel_lifted": ["svm_stv_lifted"] if "svm_stv_lifted" in cfg.methods else [],
        }
        predictions: dict[tuple[str, int], list[LabelRaster]] = {
            (m, s): [] for m in cfg.methods for s in cfg.label_sizes
        }
        tv_params = TvParams(
            beta=cfg.tv_beta,
            epsilon=cfg.tv_epsilon,
            max_iterations=cfg.tv_max_iterations,
            tolerance=cfg.tv_tolerance,
        )
        for size in cfg.label_sizes:
            for trial in range(cfg.n_trials):
                seed = trial_seed(cfg.seed, trial)
                try:
                    train_idx = evaluation.sample_training(self.truth, size, seed)
                    train_labels = self.truth.values.ravel()[train_idx]
                except Exception as exc:  # noqa: BLE001 - cell isolation
                    for method in cfg.methods:
                        failures.append(self._failure(method, size, trial, exc))
                    continue
                for fs_name in model_sets:
                    methods = set_methods[fs_name]
                    if not methods:
                        continue
                    try:
                        X, kernel = self.feature_set(fs_name)
                        model = train_multiclass(
                            X[train_idx], train_labels, cfg.svm_params(), kernel=kernel
                        )
                        prob_rows = model.predict_probability_rows(X)
                        tensor = ProbabilityTensor(
                            values=prob_rows.reshape(self.height, self.width, -1),
                            classes=model.classes,
                        )
                    except Exception as exc:  # noqa: BLE001
                        for method in methods:
                            failures.append(self._failure(method, size, trial, exc))
                        continue
                    for method in methods:
                        try:
                            if method in ("svm_stv", "svm_stv_lifted"):
                                out = tv_denoise(tensor, tv_params)
                            else:
                                out = tensor
                            pred = argmax_map(out, classes=self.truth.classes)
                            cm = evaluation.confusion(pred, self.truth, exclude=train_idx)
                            report = evaluation.metrics_report(
                                cm, trial=trial, labels_per_class=size, seed=seed
                            )
                            rows.append(self._row(method, report))
                            predictions[(method, size)].append(pred)
                            if cfg.save_predictions:
                                write_labels(
                                    pred,
                                    self.out_dir / "predictions" / self.spec.id
                                    / f"{method}_L{size}_t{trial}.json",
                                )
                        except Exception as exc:  # noqa: BLE001
                            failures.append(self._failure(method, size, trial, exc))
        if cfg.save_heatmaps:
            for (method, size), preds in predictions.items():
                if len(preds) != cfg.n_trials:
                    continue
                counts = evaluation.misclassification_heatmap(
                    preds,
                    self.truth,
                    png_path=self.out_dir / "heatmaps"
                    / f"{self.spec.id}_{method}_L{size}.png",
                )
                write_raster(
                    counts,
                    self.out_dir / "heatmaps" / f"{self.spec.id}_{method}_L{size}.json",
                )
        return rows, failures

    def _row(self, method: str, report: evaluation.MetricsReport) -> dict:
        row = {
            "region": self.spec.id,
            "band_mode": self.cfg.band_mode,
            "method": method,
        }
        row.update(report.as_row())
        return row

    def _failure(self, method: str, size: int, trial: int, exc: Exception) -> dict:
        return {
            "region": self.spec.id,
            "method": method,
            "labels_per_class": size,
            "trial": trial,
            "error": f"{type(exc).__name__}: {exc}",
            "traceback": traceback.format_exc(),
        }


def _run_region_task(args: tuple) -> tuple[list[dict], list[dict]]:
    cfg_dict, region_dict, out_dir = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    spec = RegionSpec(**region_dict)
    return _RegionRunner(cfg, spec, Path(out_dir)).run()


def _per_class_columns(rows: list[dict]) -> list[str]:
    cols: list[str] = []
    for row in rows:
        for key in row:
            if key.startswith(("jaccard_", "f1_")) and key not in (
                "jaccard_macro", "f1_macro") and key not in cols:
                cols.append(key)
    return sorted(cols)


def write_metrics_csv(rows: list[dict], path) -> None:
    """Deterministic CSV: fixed column order, sorted rows, repr floats."""
    rows = sorted(
        rows,
        key=lambda r: (r["region"], r["method"], r["labels_per_class"], r["trial"]),
    )
    columns = _CSV_COLUMNS + _per_class_columns(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(c, "")) for c in columns])


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def summarize(rows: list[dict]) -> dict:
    """Avg plus both 'best' readings per method x label size.

    ``best_trial_of_region_average`` takes the best trial of the
    across-region average; ``best_region_trial`` takes the single best
    region/trial cell.
    """
    summary: dict = {}
    methods = sorted({r["method"] for r in rows})
    sizes = sorted({r["labels_per_class"] for r in rows})
    for method in methods:
        summary[method] = {}
        for size in sizes:
            cell = [r for r in rows if r["method"] == method and r["labels_per_class"] == size]
            if not cell:
                continue
            entry = {}
            for metric in ("kappa", "jaccard_macro", "f1_macro"):
                values = np.array([r[metric] for r in cell])
                trials = sorted({r["trial"] for r in cell})
                per_trial = [
                    float(np.mean([r[metric] for r in cell if r["trial"] == t]))
                    for t in trials
                ]
                entry[metric] = {
                    "avg": float(values.mean()),
                    "median": float(np.median(values)),
                    "best_trial_of_region_average": float(max(per_trial)),
                    "best_region_trial": float(values.max()),
                }
            summary[method][str(size)] = entry
    return summary


def run_experiment(cfg: ExperimentConfig, out_dir) -> ExperimentResult:
    """Run the full protocol; returns rows plus any isolated failures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"config": cfg.to_dict()}
    (out_dir / "run_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    tasks = [(cfg.to_dict(), vars(spec), str(out_dir)) for spec in cfg.regions]
    all_rows: list[dict] = []
    failures: list[dict] = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for rows, fails in pool.map(_run_region_task, tasks):
                all_rows.extend(rows)
                failures.extend(fails)
    else:
        for task in tasks:
            rows, fails = _run_region_task(task)
            all_rows.extend(rows)
            failures.extend(fails)

    write_metrics_csv(all_rows, out_dir / "metrics.csv")
    (out_dir / "summary.json").write_text(
        json.dumps(summarize(all_rows), indent=2, sort_keys=True)
    )
    if failures:
        (out_dir / "failures.json").write_text(json.dumps(failures, indent=2))
    return ExperimentResult(rows=all_rows, failures=failures, out_dir=out_dir)


def recompute_metrics(out_dir) -> list[dict]:
    """Rebuild metric rows from persisted predictions and the manifest.

    Training sets are re-derived from the recorded seeds, so the
    evaluation universe matches the original run exactly.
    """
    out_dir = Path(out_dir)
    manifest = json.loads((out_dir / "run_manifest.json").read_text())
    cfg = ExperimentConfig.from_dict(manifest["config"])
    rows = []
    for spec in cfg.regions:
        truth = read_labels(spec.truth)
        for method in cfg.methods:
            for size in cfg.label_sizes:
                for trial in range(cfg.n_trials):
                    pred_path = (
                        out_dir / "predictions" / spec.id / f"{method}_L{size}_t{trial}.json"
                    )
                    if not pred_path.exists():
                        continue
                    seed = trial_seed(cfg.seed, trial)
                    train_idx = evaluation.sample_training(truth, size, seed)
                    pred = read_labels(pred_path)
                    cm = evaluation.confusion(pred, truth, exclude=train_idx)
                    report = evaluation.metrics_report(
                        cm, trial=trial, labels_per_class=size, seed=seed
                    )
                    row = {"region": spec.id, "band_mode": cfg.band_mode, "method": method}
                    row.update(report.as_row())
                    rows.append(row)
    return rows
