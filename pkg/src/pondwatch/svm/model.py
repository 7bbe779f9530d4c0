"""nu-SVM models: binary training, one-vs-one multiclass, probabilities.

A binary model keeps its support vectors, signed dual coefficients
(already divided by the margin so the decision surface sits at +/-1),
the offset, and a Platt sigmoid fitted on held-in decision values.
Multiclass models train one binary model per unordered class pair and
couple the pairwise Platt probabilities into per-pixel probability
vectors.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .calibrate import couple_pairwise, fit_platt, platt_probability
from .kernels import Kernel, KernelSpec
from .solver import SmoResult, nu_feasible, solve_nu_svm

_PREDICT_CHUNK = 65536


@dataclass
class SvmParams:
    nu: float = 0.15
    kernel: KernelSpec = field(default_factory=KernelSpec)
    tolerance: float = 1e-4
    max_iterations: int = 100_000
    calibration: str = "platt_pairwise"
    cache_rows: int = 2048

    def __post_init__(self):
        if not 0.0 < self.nu < 1.0:
            raise ValueError("nu must lie in (0, 1)")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.calibration != "platt_pairwise":
            raise ValueError("only platt_pairwise calibration is supported")


@dataclass
class BinaryModel:
    support_vectors: np.ndarray
    coefficients: np.ndarray  # signed, margin-scaled: y_i * alpha_i / r
    rho: float
    platt_a: float
    platt_b: float
    kernel: Kernel
    converged: bool = True
    n_train: int = 0
    n_margin_errors: int = 0

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.support_vectors.shape[1]:
            raise ValueError(
                f"dimension mismatch: model expects {self.support_vectors.shape[1]} "
                f"features, got {X.shape[1]}"
            )
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], _PREDICT_CHUNK):
            chunk = X[start : start + _PREDICT_CHUNK]
            out[start : start + chunk.shape[0]] = (
                self.kernel.gram(chunk, self.support_vectors) @ self.coefficients - self.rho
            )
        return out

    def positive_probability(self, X: np.ndarray) -> np.ndarray:
        return platt_probability(self.decision_function(X), self.platt_a, self.platt_b)

    @property
    def n_support(self) -> int:
        return self.support_vectors.shape[0]


def train_binary(X: np.ndarray, y: np.ndarray, params: SvmParams,
                 kernel: Kernel | None = None) -> BinaryModel:
    """Train one nu-SVM on +/-1 labels and calibrate its sigmoid.

    Raises on single-class input or infeasible nu; non-convergence
    within the iteration budget produces a warning and a model flagged
    ``converged=False``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X must be (n, d) with one label per row")
    if kernel is None:
        kernel = params.kernel.build(X.shape[1])
    result: SmoResult = solve_nu_svm(
        X, y, params.nu, kernel,
        tolerance=params.tolerance,
        max_iterations=params.max_iterations,
        cache_rows=params.cache_rows,
    )
    if not result.converged:
        warnings.warn(
            f"nu-SVM did not reach tolerance {params.tolerance:g} "
            f"({result.iterations} iterations, violation {result.max_violation:.3g})",
            RuntimeWarning,
        )
    sv = result.alpha > 1e-12
    model = BinaryModel(
        support_vectors=X[sv].copy(),
        coefficients=(y[sv] * result.alpha[sv]) / result.scale,
        rho=result.rho,
        platt_a=0.0,
        platt_b=0.0,
        kernel=kernel,
        converged=result.converged,
        n_train=X.shape[0],
    )
    f = model.decision_function(X)
    # Margin errors: strictly inside the margin beyond what the solver's
    # KKT tolerance can resolve (a slack of tol in gradient units maps
    # to tol/scale in decision units).
    band = min(1e-2, 2.0 * params.tolerance / result.scale)
    model.n_margin_errors = int(np.sum(y * f < 1.0 - band))
    model.platt_a, model.platt_b = fit_platt(f, y)
    return model


@dataclass
class ProbabilityTensor:
    """Per-pixel class-probability vectors on an (h, w) grid."""

    values: np.ndarray  # (h, w, k)
    classes: list[int]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3 or values.shape[2] != len(self.classes):
            raise ValueError("values must be (h, w, k) matching the class list")
        if not np.isfinite(values).all():
            raise ValueError("non-finite probabilities")
        if values.min() < -1e-12:
            raise ValueError("negative probabilities")
        sums = values.sum(axis=2)
        if np.max(np.abs(sums - 1.0)) > 1e-9:
            raise ValueError("pixel probability vectors must sum to 1 within 1e-9")
        self.values = values
        self.classes = [int(c) for c in self.classes]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return self.values.shape[2]


@dataclass
class MulticlassModel:
    classes: list[int]
    pairwise: dict[tuple[int, int], BinaryModel]
    params: SvmParams

    def __post_init__(self):
        k = len(self.classes)
        if len(self.pairwise) != k * (k - 1) // 2:
            raise ValueError("need one binary model per unordered class pair")

    def predict_probability_rows(self, X: np.ndarray) -> np.ndarray:
        """Coupled (n, k) probability rows for arbitrary feature rows."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        k = len(self.classes)
        n = X.shape[0]
        r = np.full((n, k, k), 0.5)
        index = {c: i for i, c in enumerate(self.classes)}
        for (ca, cb), model in self.pairwise.items():
            p_a = model.positive_probability(X)
            ia, ib = index[ca], index[cb]
            r[:, ia, ib] = p_a
            r[:, ib, ia] = 1.0 - p_a
        return couple_pairwise(r)

    def predict_class_rows(self, X: np.ndarray) -> np.ndarray:
        rows = self.predict_probability_rows(X)
        codes = np.asarray(self.classes)
        return codes[np.argmax(rows, axis=1)]


def train_multiclass(X: np.ndarray, y: np.ndarray, params: SvmParams,
                     kernel: Kernel | None = None) -> MulticlassModel:
    """Train one-vs-one nu-SVMs for every class pair.

    The earlier class of a pair plays the +1 role.  An infeasible nu on
    any pair raises with the pair named.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).ravel()
    classes = sorted(int(c) for c in np.unique(y))
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    if kernel is None:
        kernel = params.kernel.build(X.shape[1])
    pairwise = {}
    for ca, cb in combinations(classes, 2):
        mask = (y == ca) | (y == cb)
        n_pos = int(np.sum(y == ca))
        n_neg = int(np.sum(y == cb))
        if not nu_feasible(params.nu, n_pos, n_neg):
            raise ValueError(
                f"infeasible nu={params.nu:g} for pair ({ca}, {cb}): "
                f"bound 2*min(n+,n-)/n = {2.0 * min(n_pos, n_neg) / (n_pos + n_neg):.4g}"
            )
        yy = np.where(y[mask] == ca, 1.0, -1.0)
        pairwise[(ca, cb)] = train_binary(X[mask], yy, params, kernel=kernel)
    return MulticlassModel(classes=classes, pairwise=pairwise, params=params)


def predict_probabilities(model: MulticlassModel, pixels: np.ndarray,
                          height: int | None = None, width: int | None = None) -> ProbabilityTensor:
    """Predict coupled class probabilities for pixel feature rows.

    ``pixels`` is (n, d); pass height/width to reshape n = h*w pixels
    into a tensor (defaults to a single row of n pixels).
    """
    rows = model.predict_probability_rows(pixels)
    n = rows.shape[0]
    if height is None or width is None:
        height, width = 1, n
    if height * width != n:
        raise ValueError(f"{n} pixels cannot fill a {height}x{width} grid")
    return ProbabilityTensor(
        values=rows.reshape(height, width, len(model.classes)),
        classes=list(model.classes),
    )


def predict_labels(model: MulticlassModel, pixels: np.ndarray) -> np.ndarray:
    """Argmax of the coupled probabilities; ties break to the lowest code."""
    return model.predict_class_rows(pixels)


def save_model(model: MulticlassModel, path) -> None:
    """Write a model as a JSON header plus a float64 payload sidecar."""
    header_path = Path(path)
    if header_path.suffix != ".json":
        header_path = header_path.with_suffix(".json")
    bin_name = header_path.with_suffix(".bin").name
    blobs: list[np.ndarray] = []
    offset = 0
    pairs = []
    for (ca, cb), m in sorted(model.pairwise.items()):
        sv = np.ascontiguousarray(m.support_vectors, dtype="<f8")
        coef = np.ascontiguousarray(m.coefficients, dtype="<f8")
        pairs.append(
            {
                "classes": [ca, cb],
                "rho": m.rho,
                "platt_a": m.platt_a,
                "platt_b": m.platt_b,
                "converged": m.converged,
                "n_train": m.n_train,
                "n_margin_errors": m.n_margin_errors,
                "n_support": int(sv.shape[0]),
                "n_features": int(sv.shape[1]),
                "sv_offset": offset,
            }
        )
        blobs.extend([sv.ravel(), coef])
        offset += sv.size + coef.size
    header = {
        "classes": model.classes,
        "params": {
            "nu": model.params.nu,
            "kernel": model.params.kernel.__dict__,
            "tolerance": model.params.tolerance,
            "max_iterations": model.params.max_iterations,
            "calibration": model.params.calibration,
        },
        "kernel": next(iter(model.pairwise.values())).kernel.to_dict(),
        "pairs": pairs,
        "dtype": "float64",
        "byte_order": "LE",
        "data": bin_name,
    }
    header_path.parent.mkdir(parents=True, exist_ok=True)
    payload = np.concatenate(blobs) if blobs else np.empty(0)
    (header_path.parent / bin_name).write_bytes(payload.astype("<f8").tobytes())
    header_path.write_text(json.dumps(header, indent=2) + "\n")


def load_model(path) -> MulticlassModel:
    header_path = Path(path)
    if header_path.suffix != ".json":
        header_path = header_path.with_suffix(".json")
    header = json.loads(header_path.read_text())
    payload = np.fromfile(header_path.parent / header["data"], dtype="<f8")
    kernel = Kernel.from_dict(header["kernel"])
    params = SvmParams(
        nu=header["params"]["nu"],
        kernel=KernelSpec(**header["params"]["kernel"]),
        tolerance=header["params"]["tolerance"],
        max_iterations=header["params"]["max_iterations"],
        calibration=header["params"]["calibration"],
    )
    pairwise = {}
    for pair in header["pairs"]:
        n_sv, n_feat = pair["n_support"], pair["n_features"]
        start = pair["sv_offset"]
        sv = payload[start : start + n_sv * n_feat].reshape(n_sv, n_feat)
        coef = payload[start + n_sv * n_feat : start + n_sv * n_feat + n_sv]
        pairwise[tuple(pair["classes"])] = BinaryModel(
            support_vectors=sv.copy(),
            coefficients=coef.copy(),
            rho=pair["rho"],
            platt_a=pair["platt_a"],
            platt_b=pair["platt_b"],
            kernel=kernel,
            converged=pair["converged"],
            n_train=pair["n_train"],
            n_margin_errors=pair["n_margin_errors"],
        )
    return MulticlassModel(classes=header["classes"], pairwise=pairwise, params=params)
