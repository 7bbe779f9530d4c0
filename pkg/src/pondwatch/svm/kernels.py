"""Kernel functions for the SVM family.

All kernels expose ``gram(A, B)`` producing the full cross-kernel
matrix between two row-stacked sample sets, plus ``to_dict`` /
``from_dict`` for model serialization.  Composite variants (spectral +
spatial, superpixel multi-view) slice the concatenated feature rows
into their parts and mix per-part kernels with convex weights, so any
of them plugs into the same solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class KernelSpec:
    """Declarative kernel choice: 'linear' or 'rbf' (gamma defaults to 1/d)."""

    kind: str = "rbf"
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")

    def build(self, n_features: int) -> "Kernel":
        if self.kind == "linear":
            return LinearKernel()
        gamma = self.gamma if self.gamma is not None else 1.0 / n_features
        return RbfKernel(gamma)


def _as_rows(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    return X


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    aa = np.sum(A * A, axis=1)[:, None]
    bb = np.sum(B * B, axis=1)[None, :]
    d = aa + bb - 2.0 * (A @ B.T)
    return np.maximum(d, 0.0)


class Kernel:
    def gram(self, A, B) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x, y) -> float:
        return float(self.gram(_as_rows(x), _as_rows(y))[0, 0])

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(d: dict) -> "Kernel":
        kind = d["kind"]
        if kind == "linear":
            return LinearKernel()
        if kind == "rbf":
            return RbfKernel(d["gamma"])
        if kind == "composite":
            return CompositeKernel(
                mu=d["mu"],
                split=d["split"],
                spectral=Kernel.from_dict(d["spectral"]),
                spatial=Kernel.from_dict(d["spatial"]),
            )
        if kind == "multiview":
            return MultiViewKernel(
                weights=tuple(d["weights"]),
                part_dim=d["part_dim"],
                parts=[Kernel.from_dict(p) for p in d["parts"]],
            )
        raise ValueError(f"unknown kernel kind {kind!r}")


class LinearKernel(Kernel):
    def gram(self, A, B) -> np.ndarray:
        A, B = _as_rows(A), _as_rows(B)
        if A.shape[1] != B.shape[1]:
            raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
        return A @ B.T

    def to_dict(self) -> dict:
        return {"kind": "linear"}


class RbfKernel(Kernel):
    def __init__(self, gamma: float):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.gamma = float(gamma)

    def gram(self, A, B) -> np.ndarray:
        A, B = _as_rows(A), _as_rows(B)
        if A.shape[1] != B.shape[1]:
            raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
        return np.exp(-self.gamma * _sq_dists(A, B))

    def to_dict(self) -> dict:
        return {"kind": "rbf", "gamma": self.gamma}


class CompositeKernel(Kernel):
    """mu * K_spec(first `split` features) + (1-mu) * K_spat(rest).

    Convex combination of two Mercer kernels, hence itself positive
    semidefinite.
    """

    def __init__(self, mu: float, split: int, spectral: Kernel, spatial: Kernel):
        if not 0.0 <= mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")
        self.mu = float(mu)
        self.split = int(split)
        self.spectral = spectral
        self.spatial = spatial

    def gram(self, A, B) -> np.ndarray:
        A, B = _as_rows(A), _as_rows(B)
        s = self.split
        return self.mu * self.spectral.gram(A[:, :s], B[:, :s]) + (
            1.0 - self.mu
        ) * self.spatial.gram(A[:, s:], B[:, s:])

    def to_dict(self) -> dict:
        return {
            "kind": "composite",
            "mu": self.mu,
            "split": self.split,
            "spectral": self.spectral.to_dict(),
            "spatial": self.spatial.to_dict(),
        }


class MultiViewKernel(Kernel):
    """Weighted sum of per-view kernels over equal-width feature slices.

    Used for superpixel features: view 0 is the pixel spectrum, view 1
    the within-superpixel mean, view 2 the neighboring-superpixel mean.
    Weights are nonnegative and sum to 1.
    """

    def __init__(self, weights, part_dim: int, parts):
        weights = tuple(float(w) for w in weights)
        if len(weights) != len(parts):
            raise ValueError("one weight per view required")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to 1")
        self.weights = weights
        self.part_dim = int(part_dim)
        self.parts = list(parts)

    def gram(self, A, B) -> np.ndarray:
        A, B = _as_rows(A), _as_rows(B)
        d = self.part_dim
        if A.shape[1] != d * len(self.parts):
            raise ValueError(
                f"expected {d * len(self.parts)} features, got {A.shape[1]}"
            )
        out = None
        for i, (w, k) in enumerate(zip(self.weights, self.parts)):
            g = w * k.gram(A[:, i * d : (i + 1) * d], B[:, i * d : (i + 1) * d])
            out = g if out is None else out + g
        return out

    def to_dict(self) -> dict:
        return {
            "kind": "multiview",
            "weights": list(self.weights),
            "part_dim": self.part_dim,
            "parts": [p.to_dict() for p in self.parts],
        }


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Evaluate a declarative kernel on a single vector pair."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return spec.build(x.size)(x, y)
