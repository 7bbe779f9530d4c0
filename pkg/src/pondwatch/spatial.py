"""Spatial-spectral feature machinery: window means, composite kernels,
SLIC superpixels and superpixel multi-view features.

The composite-kernel classifier mixes a spectral kernel with a kernel
on local window-mean features; the superpixel classifier segments the
image first and mixes pixel / within-superpixel / neighbor-superpixel
kernels.  Both reuse the same nu-SVM solver via kernel objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .raster import Raster
from .svm.kernels import CompositeKernel, KernelSpec, MultiViewKernel


@dataclass
class CompositeKernelParams:
    mu: float = 0.5
    window: int = 5
    spectral_kernel: KernelSpec = field(default_factory=KernelSpec)
    spatial_kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError("window must be an odd positive integer")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")


@dataclass
class ScMkParams:
    superpixel_count: int = 256
    compactness: float = 10.0
    w_pixel: float = 0.4
    w_within: float = 0.4
    w_neighbor: float = 0.2
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        w = (self.w_pixel, self.w_within, self.w_neighbor)
        if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("kernel weights must be nonnegative and sum to 1")
        if self.superpixel_count < 1:
            raise ValueError("superpixel_count must be >= 1")

    @property
    def weights(self) -> tuple[float, float, float]:
        return (self.w_pixel, self.w_within, self.w_neighbor)


@dataclass
class SegmentationMap:
    """Superpixel id per pixel; ids are contiguous 0..count-1."""

    values: np.ndarray
    count: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int32)
        if values.ndim != 2:
            raise ValueError("segmentation must be 2-D")
        ids = np.unique(values)
        if ids.size != self.count or ids[0] != 0 or ids[-1] != self.count - 1:
            raise ValueError("superpixel ids must be contiguous 0..count-1")
        values.flags.writeable = False
        self.values = values


def write_segmentation(seg: SegmentationMap, path) -> None:
    """Persist superpixel ids as a uint16 variant of the label format."""
    import json
    from pathlib import Path

    if seg.count > 65535:
        raise ValueError("more than 65535 superpixels cannot be stored as uint16")
    header_path = Path(path)
    if header_path.suffix != ".json":
        header_path = header_path.with_suffix(".json")
    bin_name = header_path.with_suffix(".bin").name
    header = {
        "width": int(seg.values.shape[1]),
        "height": int(seg.values.shape[0]),
        "dtype": "uint16",
        "byte_order": "LE",
        "interleave": "BSQ",
        "kind": "segmentation",
        "count": int(seg.count),
        "data": bin_name,
    }
    header_path.parent.mkdir(parents=True, exist_ok=True)
    (header_path.parent / bin_name).write_bytes(
        np.ascontiguousarray(seg.values, dtype="<u2").tobytes()
    )
    header_path.write_text(json.dumps(header, indent=2) + "\n")


def read_segmentation(path) -> SegmentationMap:
    import json
    from pathlib import Path

    header_path = Path(path)
    if header_path.suffix != ".json":
        header_path = header_path.with_suffix(".json")
    header = json.loads(header_path.read_text())
    if header.get("dtype") != "uint16" or header.get("kind") != "segmentation":
        raise ValueError("not a segmentation header")
    raw = np.fromfile(header_path.parent / header["data"], dtype="<u2")
    if raw.size != header["width"] * header["height"]:
        raise ValueError("size mismatch")
    values = raw.reshape(header["height"], header["width"]).astype(np.int32)
    return SegmentationMap(values=values, count=int(header["count"]))


def pixel_features(r: Raster) -> np.ndarray:
    """Row-major (h*w, bands) feature rows of raw band values."""
    return r.data.reshape(len(r.bands), -1).T.astype(np.float64)


def window_mean_features(r: Raster, window: int = 5) -> np.ndarray:
    """Per-pixel mean of each band over an edge-clipped square window."""
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be an odd positive integer")
    h, w = r.height, r.width
    counts = ndimage.uniform_filter(
        np.ones((h, w)), size=window, mode="constant", cval=0.0
    ) * (window * window)
    out = np.empty((len(r.bands), h, w))
    for i in range(len(r.bands)):
        sums = ndimage.uniform_filter(
            r.data[i].astype(np.float64), size=window, mode="constant", cval=0.0
        ) * (window * window)
        out[i] = sums / counts
    return out.reshape(len(r.bands), -1).T


def composite_features(r: Raster, params: CompositeKernelParams) -> np.ndarray:
    """Concatenated [spectral | window-mean spatial] rows for SVM-CK."""
    return np.hstack([pixel_features(r), window_mean_features(r, params.window)])


def build_composite_kernel(params: CompositeKernelParams, n_bands: int) -> CompositeKernel:
    return CompositeKernel(
        mu=params.mu,
        split=n_bands,
        spectral=params.spectral_kernel.build(n_bands),
        spatial=params.spatial_kernel.build(n_bands),
    )


def composite_kernel(params: CompositeKernelParams, x_spec, x_spat, y_spec, y_spat) -> float:
    """Evaluate mu*K_spec + (1-mu)*K_spat on a single pair of feature parts."""
    x_spec = np.asarray(x_spec, dtype=np.float64).ravel()
    x_spat = np.asarray(x_spat, dtype=np.float64).ravel()
    y_spec = np.asarray(y_spec, dtype=np.float64).ravel()
    y_spat = np.asarray(y_spat, dtype=np.float64).ravel()
    if x_spec.shape != y_spec.shape or x_spat.shape != y_spat.shape:
        raise ValueError("dimension mismatch")
    k = CompositeKernel(
        mu=params.mu,
        split=x_spec.size,
        spectral=params.spectral_kernel.build(x_spec.size),
        spatial=params.spatial_kernel.build(x_spat.size),
    )
    return k(np.concatenate([x_spec, x_spat]), np.concatenate([y_spec, y_spat]))


def slic_superpixels(r: Raster, target_count: int, compactness: float = 10.0) -> SegmentationMap:
    """Grid-seeded SLIC with a fixed 10 iterations and connectivity cleanup.

    Deterministic: seeds sit on a regular grid, assignment ties go to
    the lower superpixel id, and the final pass merges fragments
    smaller than a quarter of the mean superpixel area into the
    neighboring label discovered first in row-major order.
    """
    h, w = r.height, r.width
    n_pixels = h * w
    if target_count < 1 or target_count > n_pixels:
        raise ValueError(f"target_count must lie in [1, {n_pixels}]")
    if target_count == 1:
        return SegmentationMap(values=np.zeros((h, w), dtype=np.int32), count=1)

    img = r.data.astype(np.float64)  # (d, h, w)
    interval = np.sqrt(n_pixels / target_count)
    # Grid sized so nx*ny >= target_count even when rounding is coarse.
    nx = min(w, max(1, int(np.ceil(np.sqrt(target_count * w / h)))))
    ny = min(h, max(1, int(np.ceil(target_count / nx))))
    seed_x = (np.arange(nx) + 0.5) * w / nx
    seed_y = (np.arange(ny) + 0.5) * h / ny
    cy, cx = np.meshgrid(seed_y, seed_x, indexing="ij")
    cy, cx = cy.ravel(), cx.ravel()
    colors = img[:, np.minimum(cy.astype(int), h - 1), np.minimum(cx.astype(int), w - 1)].T
    n_clusters = cy.size
    inv_s2 = (compactness / interval) ** 2

    ys = np.arange(h, dtype=np.float64)
    xs = np.arange(w, dtype=np.float64)
    for _ in range(10):
        best = np.full((h, w), np.inf)
        labels = np.zeros((h, w), dtype=np.int32)
        reach = int(np.ceil(2 * interval))
        for c in range(n_clusters):
            y0, y1 = max(0, int(cy[c]) - reach), min(h, int(cy[c]) + reach + 1)
            x0, x1 = max(0, int(cx[c]) - reach), min(w, int(cx[c]) + reach + 1)
            if y0 >= y1 or x0 >= x1:
                continue
            patch = img[:, y0:y1, x0:x1]
            d_color = np.sum((patch - colors[c][:, None, None]) ** 2, axis=0)
            d_space = (ys[y0:y1, None] - cy[c]) ** 2 + (xs[None, x0:x1] - cx[c]) ** 2
            dist = d_color + inv_s2 * d_space
            window_best = best[y0:y1, x0:x1]
            closer = dist < window_best
            window_best[closer] = dist[closer]
            labels[y0:y1, x0:x1][closer] = c
        flat = labels.ravel()
        counts = np.bincount(flat, minlength=n_clusters).astype(np.float64)
        counts[counts == 0] = np.inf  # empty clusters keep their center
        gy = np.bincount(flat, weights=np.repeat(ys, w), minlength=n_clusters) / counts
        gx = np.bincount(flat, weights=np.tile(xs, h), minlength=n_clusters) / counts
        keep = np.isinf(counts)
        cy = np.where(keep, cy, gy)
        cx = np.where(keep, cx, gx)
        for b in range(img.shape[0]):
            mean_b = np.bincount(flat, weights=img[b].ravel(), minlength=n_clusters) / counts
            colors[:, b] = np.where(keep, colors[:, b], mean_b)

    return _enforce_connectivity(labels, n_pixels // target_count)


def _enforce_connectivity(labels: np.ndarray, mean_area: int) -> SegmentationMap:
    """Relabel 4-connected fragments; absorb tiny ones into a neighbor."""
    h, w = labels.shape
    min_size = max(1, mean_area // 4)
    out = np.full((h, w), -1, dtype=np.int32)
    next_id = 0
    for sy in range(h):
        for sx in range(w):
            if out[sy, sx] >= 0:
                continue
            target = labels[sy, sx]
            stack = [(sy, sx)]
            out[sy, sx] = next_id
            comp = [(sy, sx)]
            adjacent = -1
            while stack:
                y, x = stack.pop()
                for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    ny, nx = y + dy, x + dx
                    if not (0 <= ny < h and 0 <= nx < w):
                        continue
                    if labels[ny, nx] == target and out[ny, nx] < 0:
                        out[ny, nx] = next_id
                        comp.append((ny, nx))
                        stack.append((ny, nx))
                    elif out[ny, nx] >= 0 and out[ny, nx] != next_id and adjacent < 0:
                        adjacent = out[ny, nx]
            if len(comp) < min_size and adjacent >= 0:
                for y, x in comp:
                    out[y, x] = adjacent
            else:
                next_id += 1
    return SegmentationMap(values=out, count=next_id)


def superpixel_adjacency(seg: SegmentationMap) -> list[set[int]]:
    """Neighbor id sets per superpixel (4-neighbor edge sharing)."""
    v = seg.values
    pairs = set()
    for a, b in ((v[:, :-1], v[:, 1:]), (v[:-1, :], v[1:, :])):
        diff = a != b
        pairs.update(zip(a[diff].tolist(), b[diff].tolist()))
    neighbors: list[set[int]] = [set() for _ in range(seg.count)]
    for a, b in pairs:
        neighbors[a].add(b)
        neighbors[b].add(a)
    return neighbors


def scmk_features(r: Raster, seg: SegmentationMap) -> np.ndarray:
    """Per-pixel [own | within-superpixel mean | neighbor mean] rows.

    The neighbor part averages the mean spectra of adjacent superpixels
    (unweighted); a superpixel with no neighbors copies its own mean.
    Output is (h*w, 3*bands), sliced back apart by the multi-view kernel.
    """
    if seg.values.shape != (r.height, r.width):
        raise ValueError("segmentation shape does not match raster")
    d = len(r.bands)
    flat = seg.values.ravel()
    pix = pixel_features(r)
    counts = np.bincount(flat, minlength=seg.count).astype(np.float64)
    means = np.empty((seg.count, d))
    for b in range(d):
        means[:, b] = np.bincount(flat, weights=pix[:, b], minlength=seg.count) / counts
    neighbors = superpixel_adjacency(seg)
    nmeans = np.empty_like(means)
    for s in range(seg.count):
        if neighbors[s]:
            nmeans[s] = means[sorted(neighbors[s])].mean(axis=0)
        else:
            nmeans[s] = means[s]
    return np.hstack([pix, means[flat], nmeans[flat]])


def build_scmk_kernel(params: ScMkParams, n_bands: int) -> MultiViewKernel:
    return MultiViewKernel(
        weights=params.weights,
        part_dim=n_bands,
        parts=[params.kernel.build(n_bands) for _ in range(3)],
    )


def scmk_kernel(params: ScMkParams, x_triple, y_triple) -> float:
    """Weighted multi-view kernel on a single pair of feature triples."""
    x = np.asarray(x_triple, dtype=np.float64).ravel()
    y = np.asarray(y_triple, dtype=np.float64).ravel()
    if x.shape != y.shape or x.size % 3 != 0:
        raise ValueError("feature triples must share a dimension divisible by 3")
    return build_scmk_kernel(params, x.size // 3)(x, y)
