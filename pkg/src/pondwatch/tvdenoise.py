"""Smoothed total-variation denoising of class-probability tensors.

Stage two of the two-stage classifier: given per-pixel probability
vectors, minimize

    E(u) = (beta/2) * ||u - p||^2  +  sum_{channels} sum_{pixels}
           sqrt(dx(u)^2 + dy(u)^2 + epsilon^2)

subject to every pixel's vector lying on the probability simplex.
Gradients use forward differences with Neumann boundaries; the solver
is projected gradient descent with the fixed step 1/L for the gradient
Lipschitz bound L = beta + 8/epsilon, which makes the objective
non-increasing.  Channels couple only through the per-pixel projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import LabelRaster
from .svm.model import ProbabilityTensor


@dataclass
class TvParams:
    beta: float = 2.0
    epsilon: float = 1e-3
    step: float | None = None  # defaults to 1 / (beta + 8/epsilon)
    max_iterations: int = 500
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.beta <= 0 or self.epsilon <= 0 or self.tolerance <= 0:
            raise ValueError("beta, epsilon and tolerance must be positive")
        lipschitz = self.beta + 8.0 / self.epsilon
        if self.step is None:
            self.step = 1.0 / lipschitz
        if not 0.0 < self.step <= 1.0 / lipschitz + 1e-15:
            raise ValueError("step must lie in (0, 1/(beta + 8/epsilon)]")


def simplex_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of one vector onto the probability simplex."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if not np.isfinite(v).all():
        raise ValueError("non-finite input")
    return simplex_project_rows(v[None, :])[0]


def simplex_project_rows(V: np.ndarray) -> np.ndarray:
    """Row-wise simplex projection by the sorting algorithm."""
    V = np.asarray(V, dtype=np.float64)
    n, k = V.shape
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1)
    j = np.arange(1, k + 1)
    positive = U + (1.0 - css) / j > 0
    rho = k - 1 - np.argmax(positive[:, ::-1], axis=1)
    theta = (1.0 - css[np.arange(n), rho]) / (rho + 1.0)
    return np.maximum(V + theta[:, None], 0.0)


def _forward_diffs(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences with Neumann (zero-flux) boundaries; u is (h,w,k)."""
    dx = np.zeros_like(u)
    dy = np.zeros_like(u)
    dx[:, :-1, :] = u[:, 1:, :] - u[:, :-1, :]
    dy[:-1, :, :] = u[1:, :, :] - u[:-1, :, :]
    return dx, dy


def _divergence(px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Adjoint of -_forward_diffs: backward-difference divergence."""
    div = np.zeros_like(px)
    div += px
    div[:, 1:, :] -= px[:, :-1, :]
    div += py
    div[1:, :, :] -= py[:-1, :, :]
    return div


def tv_energy(u: np.ndarray, p: np.ndarray, params: TvParams) -> float:
    """E(u) for an (h, w, k) iterate against the observed tensor p."""
    dx, dy = _forward_diffs(u)
    smooth = np.sqrt(dx * dx + dy * dy + params.epsilon**2)
    return float(0.5 * params.beta * np.sum((u - p) ** 2) + np.sum(smooth))


def _tv_gradient(u: np.ndarray, p: np.ndarray, params: TvParams) -> np.ndarray:
    dx, dy = _forward_diffs(u)
    wgt = np.sqrt(dx * dx + dy * dy + params.epsilon**2)
    return params.beta * (u - p) - _divergence(dx / wgt, dy / wgt)


def tv_denoise(p: ProbabilityTensor, params: TvParams | None = None,
               callback=None) -> ProbabilityTensor:
    """Denoise a probability tensor; every iterate stays on the simplex.

    ``callback(iteration, u, energy)`` is invoked after the initial
    point and after each projected-gradient step, which lets callers
    record the objective trajectory.
    """
    params = params or TvParams()
    values = p.values
    if not np.isfinite(values).all():
        raise ValueError("non-finite input tensor")
    h, w, k = values.shape
    u = values.copy()
    energy = tv_energy(u, values, params)
    if callback is not None:
        callback(0, u, energy)
    for it in range(1, params.max_iterations + 1):
        g = _tv_gradient(u, values, params)
        u_next = simplex_project_rows((u - params.step * g).reshape(-1, k)).reshape(h, w, k)
        next_energy = tv_energy(u_next, values, params)
        u = u_next
        if callback is not None:
            callback(it, u, next_energy)
        if abs(energy - next_energy) <= params.tolerance * max(1.0, abs(energy)):
            energy = next_energy
            break
        energy = next_energy
    return ProbabilityTensor(values=u, classes=list(p.classes))


def argmax_map(p: ProbabilityTensor, classes: dict[int, str] | None = None) -> LabelRaster:
    """Per-pixel argmax of a probability tensor; ties take the lowest code."""
    order = np.argsort(p.classes, kind="stable")
    codes = np.asarray(p.classes)[order]
    values = codes[np.argmax(p.values[:, :, order], axis=2)].astype(np.uint8)
    if classes is None:
        classes = {int(c): f"class{int(c)}" for c in codes}
    return LabelRaster(values=values, classes=classes)
