"""Semi-automatic labeling of pond states and bi-temporal change.

Water pixels are found with the MNDWI water index; the green/red color
index then splits water into active / transition / inactive pond
states, a connected-component pass cleans up pond borders, and the two
dates' state maps subtract into change categories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import CHANGE_CLASSES, LabelRaster, STATE_CLASSES

NO_WATER, INACTIVE, TRANSITION, ACTIVE = 0, 1, 2, 3
NO_CHANGE, DECREASE, INCREASE, WATER_EXIST_ABSENCE = 0, 1, 2, 3

# 4-connectivity structuring element for component labeling.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass
class AutoLabelConfig:
    ci_low: float = 0.0
    ci_high: float = 0.15
    mndwi_water_threshold: float = 0.0
    min_pond_pixels: int = 5
    cleanup: str = "majority"  # "none" | "majority"
    swap_active_inactive: bool = False  # flips which Ci extreme is "active"

    def __post_init__(self):
        if not self.ci_low < self.ci_high:
            raise ValueError("ci_low must be < ci_high")
        for t in (self.ci_low, self.ci_high, self.mndwi_water_threshold):
            if not -1.0 <= t <= 1.0:
                raise ValueError(f"threshold {t} outside [-1, 1]")
        if self.cleanup not in ("none", "majority"):
            raise ValueError("cleanup must be 'none' or 'majority'")
        if self.min_pond_pixels < 0:
            raise ValueError("min_pond_pixels must be >= 0")


@dataclass
class IndexMap:
    """A normalized-difference index in [-1, 1] (0 where undefined)."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if not np.isfinite(values).all():
            raise ValueError("non-finite index values")
        if values.min() < -1.0 - 1e-12 or values.max() > 1.0 + 1e-12:
            raise ValueError("index values outside [-1, 1]")
        self.values = values


def _normalized_difference(a: np.ndarray, b: np.ndarray, kind: str) -> IndexMap:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.min() < 0 or b.min() < 0:
        raise ValueError("bands must be non-negative; clip reflectance first")
    denom = a + b
    with np.errstate(invalid="ignore", divide="ignore"):
        values = np.where(denom > 0, (a - b) / np.where(denom > 0, denom, 1.0), 0.0)
    return IndexMap(values=values, kind=kind)


def color_index(green: np.ndarray, red: np.ndarray) -> IndexMap:
    """(green - red) / (green + red); 0 where both bands are 0."""
    return _normalized_difference(green, red, "Ci")


def ndwi(green: np.ndarray, nir: np.ndarray) -> IndexMap:
    """(green - NIR) / (green + NIR); 0 where both bands are 0."""
    return _normalized_difference(green, nir, "NDWI")


def mndwi(green: np.ndarray, swir1: np.ndarray) -> IndexMap:
    """(green - SWIR1) / (green + SWIR1); 0 where both bands are 0."""
    return _normalized_difference(green, swir1, "MNDWI")


def water_mask(m: IndexMap, threshold: float = 0.0) -> np.ndarray:
    """Boolean water mask: strictly above-threshold index pixels."""
    return m.values > threshold


def pond_states(ci: IndexMap, water: np.ndarray, cfg: AutoLabelConfig | None = None) -> LabelRaster:
    """Classify water pixels into pond states by color-index interval.

    Off-water pixels are NoWater regardless of color.  On water, low Ci
    (red-dominated, sediment-laden) is Active, high Ci (green-dominated)
    is Inactive, and the band between the two thresholds is Transition.
    """
    cfg = cfg or AutoLabelConfig()
    water = np.asarray(water, dtype=bool)
    if ci.values.shape != water.shape:
        raise ValueError("shape mismatch between index and mask")
    lo_state, hi_state = (INACTIVE, ACTIVE) if cfg.swap_active_inactive else (ACTIVE, INACTIVE)
    values = np.full(water.shape, NO_WATER, dtype=np.uint8)
    values[water & (ci.values < cfg.ci_low)] = lo_state
    values[water & (ci.values >= cfg.ci_low) & (ci.values < cfg.ci_high)] = TRANSITION
    values[water & (ci.values >= cfg.ci_high)] = hi_state
    return LabelRaster(values=values, classes=STATE_CLASSES)


def majority_cleanup(s: LabelRaster, min_pond_pixels: int = 5) -> LabelRaster:
    """Vote each 4-connected pond to its majority state.

    Components of water-state pixels smaller than ``min_pond_pixels``
    revert to NoWater.  Ties go to the lowest state code.  Idempotent.
    """
    values = np.array(s.values, dtype=np.uint8)
    water = (values != NO_WATER) & (values != s.nodata)
    comp, n_comp = ndimage.label(water, structure=_CROSS)
    if n_comp == 0:
        return LabelRaster(values=values, classes=s.classes, nodata=s.nodata)
    # Per-component histogram over the three water states, vectorized.
    counts = np.zeros((n_comp + 1, 4), dtype=np.int64)
    np.add.at(counts, (comp[water], values[water]), 1)
    sizes = counts.sum(axis=1)
    majority = np.argmax(counts[:, 1:], axis=1).astype(np.uint8) + 1  # ties -> lowest code
    majority[sizes < min_pond_pixels] = NO_WATER
    out = values.copy()
    out[water] = majority[comp[water]]
    return LabelRaster(values=out, classes=s.classes, nodata=s.nodata)


def change_map(s1: LabelRaster, s2: LabelRaster) -> LabelRaster:
    """Subtract two state maps into change categories.

    Equal states (including both NoWater) are NoChange; water gained or
    lost is WaterExistAbsence; otherwise the activity rank ordering
    Inactive < Transition < Active decides Decrease vs Increase.
    """
    if s1.values.shape != s2.values.shape:
        raise ValueError("shape mismatch between state maps")
    v1 = s1.values.astype(np.int16)
    v2 = s2.values.astype(np.int16)
    nodata = (v1 == s1.nodata) | (v2 == s2.nodata)
    w1, w2 = (v1 != NO_WATER) & ~nodata, (v2 != NO_WATER) & ~nodata
    r1, r2 = np.clip(v1 - 1, 0, 2), np.clip(v2 - 1, 0, 2)  # activity rank, water only
    out = np.full(v1.shape, NO_CHANGE, dtype=np.uint8)
    out[w1 != w2] = WATER_EXIST_ABSENCE
    both = w1 & w2
    out[both & (r2 < r1)] = DECREASE
    out[both & (r2 > r1)] = INCREASE
    out[nodata] = s1.nodata
    return LabelRaster(values=out, classes=CHANGE_CLASSES, nodata=s1.nodata)
