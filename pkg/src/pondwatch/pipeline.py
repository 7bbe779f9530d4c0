"""Chained semi-automatic labeling over a bi-temporal pair.

Per date: water masking (MNDWI) -> color-index thresholds -> pond
states -> connected-component cleanup; the two state maps subtract into
the change map.  Reflectance is clipped at zero before index math, and
an optional histogram-matching step (exposed on the CLI) can align the
pair first.
"""

from __future__ import annotations

import numpy as np

from . import autolabel
from .autolabel import AutoLabelConfig
from .raster import BiTemporalPair, GREEN, LabelRaster, RED, Raster, SWIR1


def autolabel_states(r: Raster, cfg: AutoLabelConfig | None = None) -> LabelRaster:
    """One date: MNDWI water mask, color-index states, majority cleanup."""
    cfg = cfg or AutoLabelConfig()
    green = np.maximum(r.band(GREEN), 0.0)
    red = np.maximum(r.band(RED), 0.0)
    swir1 = np.maximum(r.band(SWIR1), 0.0)
    water = autolabel.water_mask(autolabel.mndwi(green, swir1), cfg.mndwi_water_threshold)
    states = autolabel.pond_states(autolabel.color_index(green, red), water, cfg)
    if cfg.cleanup == "majority":
        states = autolabel.majority_cleanup(states, cfg.min_pond_pixels)
    return states


def autolabel_region(pair: BiTemporalPair, cfg: AutoLabelConfig | None = None):
    """Label both dates and derive the change map.

    Returns (state_t1, state_t2, change).  The pair is used as given;
    run histogram matching upstream if the dates are radiometrically
    misaligned.
    """
    cfg = cfg or AutoLabelConfig()
    s1 = autolabel_states(pair.t1, cfg)
    s2 = autolabel_states(pair.t2, cfg)
    return s1, s2, autolabel.change_map(s1, s2)
