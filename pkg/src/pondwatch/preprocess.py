"""Radiometric alignment and feature assembly ahead of labeling/classification.

Histogram matching removes inter-date tone shifts band by band; band
selection, Lab lifting and bi-temporal stacking then build the feature
raster the classifiers consume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import (
    BiTemporalPair,
    LAB_BANDS,
    RGB_BANDS,
    Raster,
    SIX_BANDS,
)

BAND_MODES = {"rgb": RGB_BANDS, "six": SIX_BANDS}


@dataclass
class PreprocessConfig:
    band_mode: str = "six"  # "rgb" | "six"
    lift: bool = False
    match_reference: str = "t1"  # which date keeps its histogram
    histogram_bins: int = 65536

    def __post_init__(self):
        self.band_mode = self.band_mode.lower()
        if self.band_mode not in BAND_MODES:
            raise ValueError(f"band_mode must be one of {sorted(BAND_MODES)}")
        self.match_reference = self.match_reference.lower()
        if self.match_reference not in ("t1", "t2"):
            raise ValueError("match_reference must be 't1' or 't2'")
        if self.histogram_bins < 2:
            raise ValueError("histogram_bins must be >= 2")


def histogram_match(source: np.ndarray, reference: np.ndarray, bins: int = 65536) -> np.ndarray:
    """Remap ``source`` so its value distribution follows ``reference``.

    Quantile matching on a fixed grid: empirical CDFs of both inputs are
    accumulated over ``bins`` equal-width bins spanning the joint value
    range, and each source value v is sent to the reference quantile at
    the source CDF of v (linear interpolation between bin edges).
    Output values are clamped into [min(reference), max(reference)].
    """
    source = np.asarray(source, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if source.size == 0 or reference.size == 0:
        raise ValueError("empty input")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if not (np.isfinite(source).all() and np.isfinite(reference).all()):
        raise ValueError("non-finite values")

    lo = min(source.min(), reference.min())
    hi = max(source.max(), reference.max())
    if hi == lo:
        return source.copy()

    edges = np.linspace(lo, hi, bins + 1)
    width = (hi - lo) / bins
    ref_counts, _ = np.histogram(reference, bins=edges)

    # Exact source ECDF (sample ranks, ties to the upper rank): keeps the
    # matched sample's order statistics aligned with the reference to
    # within one rank plus one bin of quantization.
    src_sorted = np.sort(source.ravel())
    q = np.searchsorted(src_sorted, source.ravel(), side="right") / source.size

    # Inverse reference CDF restricted to non-empty bins.  CDF values of
    # consecutive non-empty bins chain exactly (empty bins add no mass),
    # so locating the bin whose left CDF is the last one <= q and
    # interpolating inside it is the exact piecewise-linear inverse; the
    # gap-skipping keeps quantiles out of empty value ranges.
    nonempty = np.flatnonzero(ref_counts)
    ref_cum = np.concatenate([[0.0], np.cumsum(ref_counts)]) / reference.size
    left_cdf = ref_cum[nonempty]
    right_cdf = ref_cum[nonempty + 1]
    pos = np.clip(np.searchsorted(left_cdf, q, side="left") - 1, 0, nonempty.size - 1)
    inner = np.clip((q - left_cdf[pos]) / (right_cdf[pos] - left_cdf[pos]), 0.0, 1.0)
    matched = edges[nonempty[pos]] + inner * width
    matched = np.clip(matched, reference.min(), reference.max())
    return matched.reshape(source.shape)


def match_pair(pair: BiTemporalPair, cfg: PreprocessConfig | None = None) -> BiTemporalPair:
    """Histogram-match one date of a pair to the other, band by band."""
    cfg = cfg or PreprocessConfig()
    if cfg.match_reference == "t1":
        ref, src = pair.t1, pair.t2
    else:
        ref, src = pair.t2, pair.t1
    matched = np.stack(
        [
            histogram_match(src.band(b), ref.band(b), cfg.histogram_bins)
            for b in src.bands
        ]
    ).astype(np.float32)
    src_matched = Raster(bands=src.bands, data=matched)
    if cfg.match_reference == "t1":
        return BiTemporalPair(t1=ref, t2=src_matched, t1_date=pair.t1_date, t2_date=pair.t2_date)
    return BiTemporalPair(t1=src_matched, t2=ref, t1_date=pair.t1_date, t2_date=pair.t2_date)


def select_bands(r: Raster, mode: str) -> Raster:
    """Reduce a raster to the mode's band set in canonical order."""
    mode = mode.lower()
    if mode not in BAND_MODES:
        raise ValueError(f"unknown band mode {mode!r}")
    wanted = BAND_MODES[mode]
    for b in wanted:
        if b not in r.bands:
            raise ValueError(f"missing {b}")
    return Raster(bands=wanted, data=np.stack([r.band(b) for b in wanted]))


# sRGB (D65) linearization and primaries.  The white point is the image
# of (1,1,1) under the matrix so that pure white maps exactly to
# L=100, a=b=0.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = _SRGB_TO_XYZ.sum(axis=1)
_DELTA = 6.0 / 29.0


def _srgb_decode(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA**3, np.cbrt(t), t / (3 * _DELTA**2) + 4.0 / 29.0)


def rgb_to_lab(r: Raster) -> Raster:
    """Convert the Red/Green/Blue bands to CIELAB (sRGB, D65 white).

    Inputs are clamped to [0, 1] before gamma decoding; L lands in
    [0, 100], a/b roughly in [-128, 127].
    """
    for b in RGB_BANDS:
        if b not in r.bands:
            raise ValueError(f"missing {b}")
    rgb = np.stack([np.clip(r.band(b), 0.0, 1.0) for b in RGB_BANDS]).astype(np.float64)
    linear = _srgb_decode(rgb)
    xyz = np.einsum("ij,jhw->ihw", _SRGB_TO_XYZ, linear)
    f = _lab_f(xyz / _WHITE[:, None, None])
    L = 116.0 * f[1] - 16.0
    a = 500.0 * (f[0] - f[1])
    b = 200.0 * (f[1] - f[2])
    return Raster(bands=LAB_BANDS, data=np.stack([L, a, b]).astype(np.float32))


def lift(r: Raster) -> Raster:
    """Append Lab channels (rescaled into [0,1]) to an RGB-bearing raster."""
    if any(b in r.bands for b in LAB_BANDS):
        raise ValueError("Lab bands already present")
    lab = rgb_to_lab(r)
    scaled = np.stack(
        [
            lab.band("L") / 100.0,
            (lab.band("a") + 128.0) / 255.0,
            (lab.band("b") + 128.0) / 255.0,
        ]
    )
    data = np.concatenate([r.data, scaled.astype(np.float32)])
    return Raster(bands=r.bands + LAB_BANDS, data=data)


def stack_bitemporal(pair: BiTemporalPair) -> Raster:
    """Concatenate both dates' bands into one raster (t1 first)."""
    bands = tuple(f"{b}_t1" for b in pair.t1.bands) + tuple(
        f"{b}_t2" for b in pair.t2.bands
    )
    return Raster(bands=bands, data=np.concatenate([pair.t1.data, pair.t2.data]))


def normalize(r: Raster) -> Raster:
    """Min-max scale each band to [0,1]; constant bands map to 0.5."""
    out = np.empty_like(r.data, dtype=np.float32)
    for i in range(len(r.bands)):
        band = r.data[i]
        lo, hi = float(band.min()), float(band.max())
        if hi > lo:
            out[i] = (band - lo) / (hi - lo)
        else:
            out[i] = 0.5
    return Raster(bands=r.bands, data=out)
