"""Synthetic bi-temporal mining-pond scenes with exact ground truth.

Elliptical ponds sit on a vegetation background with sandy patches;
each pond carries a (possibly absent) state at both dates drawn from a
transition matrix.  Reflectance is the material signature plus Gaussian
noise; the second date additionally suffers a per-band gain/offset so
histogram matching has real work to do.  Truth state maps and the
change map fall directly out of the construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autolabel
from .raster import (
    BiTemporalPair,
    LabelRaster,
    Raster,
    SIX_BANDS,
    STATE_CLASSES,
    write_labels,
    write_raster,
)

# Material signatures over (Red, Green, Blue, NIR, SWIR1, SWIR2).
# Water states follow the labeling physics: sediment-laden active water
# is red-dominated (Ci < 0), inactive water green-dominated (Ci > 0.15),
# and all water is dark in SWIR1 (MNDWI > 0).  Inactive water is nearly
# indistinguishable from vegetation in RGB, which is exactly the
# ambiguity the infrared bands resolve.
DEFAULT_SIGNATURES = {
    "vegetation": (0.06, 0.14, 0.04, 0.46, 0.26, 0.14),
    "sand": (0.38, 0.34, 0.26, 0.44, 0.48, 0.42),
    "active": (0.30, 0.27, 0.18, 0.06, 0.04, 0.03),
    "transition": (0.22, 0.24, 0.15, 0.05, 0.04, 0.03),
    "inactive": (0.07, 0.15, 0.05, 0.05, 0.03, 0.02),
}

_STATE_MATERIAL = {
    autolabel.ACTIVE: "active",
    autolabel.TRANSITION: "transition",
    autolabel.INACTIVE: "inactive",
}

# Rows/columns ordered NoWater, Inactive, Transition, Active.
DEFAULT_TRANSITIONS = (
    (0.40, 0.20, 0.20, 0.20),
    (0.20, 0.40, 0.20, 0.20),
    (0.20, 0.20, 0.40, 0.20),
    (0.20, 0.20, 0.20, 0.40),
)


@dataclass
class SynthConfig:
    width: int = 128
    height: int = 128
    pond_count: int = 22
    radius_min: float = 3.0
    radius_max: float = 9.0
    sand_patches: int = 3
    signatures: dict[str, tuple] = field(default_factory=lambda: dict(DEFAULT_SIGNATURES))
    noise_sigma: float = 0.02
    gain: float | tuple = 1.0
    offset: float | tuple = 0.0
    initial_state_probs: tuple = (0.25, 0.25, 0.25, 0.25)
    transitions: tuple = DEFAULT_TRANSITIONS
    seed: int = 0
    max_placement_attempts: int = 200

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ValueError("scene must be at least 8x8")
        if not 2.0 <= self.radius_min <= self.radius_max:
            raise ValueError("need 2 <= radius_min <= radius_max")
        if self.radius_max * 2 + 4 > min(self.width, self.height):
            raise ValueError("radius_max too large for the scene")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        for name in DEFAULT_SIGNATURES:
            if name not in self.signatures:
                raise ValueError(f"missing signature for {name!r}")
            if len(self.signatures[name]) != len(SIX_BANDS):
                raise ValueError(f"signature {name!r} must have {len(SIX_BANDS)} bands")
        probs = np.asarray(self.initial_state_probs, dtype=np.float64)
        trans = np.asarray(self.transitions, dtype=np.float64)
        if probs.shape != (4,) or abs(probs.sum() - 1.0) > 1e-9 or (probs < 0).any():
            raise ValueError("initial_state_probs must be 4 nonnegative values summing to 1")
        if trans.shape != (4, 4) or (trans < 0).any() or np.max(np.abs(trans.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("transitions must be a 4x4 row-stochastic matrix")
        self._check_separation()

    def _check_separation(self):
        # Learnability: every material pair differs by >= 3 sigma in some band.
        names = sorted(self.signatures)
        gap = max(3.0 * self.noise_sigma, 1e-6)
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                diff = np.max(
                    np.abs(np.asarray(self.signatures[a]) - np.asarray(self.signatures[b]))
                )
                if diff < gap:
                    raise ValueError(
                        f"signatures {a!r} and {b!r} differ by {diff:.4f} < 3*sigma = {gap:.4f}"
                    )

    def band_vector(self, value) -> np.ndarray:
        v = np.asarray(value, dtype=np.float64)
        if v.ndim == 0:
            return np.full(len(SIX_BANDS), float(v))
        if v.shape != (len(SIX_BANDS),):
            raise ValueError(f"per-band value needs {len(SIX_BANDS)} entries")
        return v


def _ellipse_mask(h: int, w: int, cy: float, cx: float, ry: float, rx: float) -> np.ndarray:
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    return ((ys - cy) / ry) ** 2 + ((xs - cx) / rx) ** 2 <= 1.0


@dataclass
class SynthScene:
    pair: BiTemporalPair
    state_t1: LabelRaster
    state_t2: LabelRaster
    change: LabelRaster


def synth_generate(cfg: SynthConfig) -> SynthScene:
    """Generate one scene; byte-identical for a fixed config."""
    rng = np.random.default_rng(cfg.seed)
    h, w = cfg.height, cfg.width

    material = np.full((h, w), 0, dtype=np.int8)  # 0 vegetation, 1 sand
    for _ in range(cfg.sand_patches):
        cy = rng.uniform(0, h)
        cx = rng.uniform(0, w)
        ry = rng.uniform(h / 10, h / 4)
        rx = rng.uniform(w / 10, w / 4)
        material[_ellipse_mask(h, w, cy, cx, ry, rx)] = 1

    # Pond sites: ellipses with a 1-pixel separation buffer so distinct
    # ponds never touch under 4-connectivity.
    occupied = np.zeros((h, w), dtype=bool)
    ponds = []
    for _ in range(cfg.pond_count):
        placed = False
        for _attempt in range(cfg.max_placement_attempts):
            ry = rng.uniform(cfg.radius_min, cfg.radius_max)
            rx = rng.uniform(cfg.radius_min, cfg.radius_max)
            cy = rng.uniform(ry + 1, h - ry - 2)
            cx = rng.uniform(rx + 1, w - rx - 2)
            mask = _ellipse_mask(h, w, cy, cx, ry, rx)
            buffered = _ellipse_mask(h, w, cy, cx, ry + 1.5, rx + 1.5)
            if not (occupied & buffered).any():
                occupied |= buffered
                ponds.append(mask)
                placed = True
                break
        if not placed:
            raise ValueError(
                f"could not place pond {len(ponds) + 1}/{cfg.pond_count} "
                f"after {cfg.max_placement_attempts} attempts"
            )

    probs = np.asarray(cfg.initial_state_probs)
    trans = np.asarray(cfg.transitions)
    states_t1 = [int(rng.choice(4, p=probs)) for _ in ponds]
    states_t2 = [int(rng.choice(4, p=trans[s])) for s in states_t1]

    sig = {name: np.asarray(v, dtype=np.float64) for name, v in cfg.signatures.items()}
    background = np.where(
        material[None, :, :] == 1,
        sig["sand"][:, None, None],
        sig["vegetation"][:, None, None],
    )

    def scene_for(states):
        base = background.copy()
        labels = np.zeros((h, w), dtype=np.uint8)
        for mask, state in zip(ponds, states):
            if state == autolabel.NO_WATER:
                continue
            base[:, mask] = sig[_STATE_MATERIAL[state]][:, None]
            labels[mask] = state
        return base, labels

    base1, labels1 = scene_for(states_t1)
    base2, labels2 = scene_for(states_t2)

    noise1 = rng.normal(0.0, cfg.noise_sigma, base1.shape)
    noise2 = rng.normal(0.0, cfg.noise_sigma, base2.shape)
    gain = cfg.band_vector(cfg.gain)[:, None, None]
    offset = cfg.band_vector(cfg.offset)[:, None, None]
    t1 = Raster(bands=SIX_BANDS, data=(base1 + noise1).astype(np.float32))
    t2 = Raster(bands=SIX_BANDS, data=((base2 + noise2) * gain + offset).astype(np.float32))

    state_t1 = LabelRaster(values=labels1, classes=STATE_CLASSES)
    state_t2 = LabelRaster(values=labels2, classes=STATE_CLASSES)
    change = autolabel.change_map(state_t1, state_t2)
    pair = BiTemporalPair(t1=t1, t2=t2, t1_date="2020-06-01", t2_date="2022-06-01")
    return SynthScene(pair=pair, state_t1=state_t1, state_t2=state_t2, change=change)


def write_region(scene: SynthScene, region_dir) -> None:
    """Persist a scene in the on-disk region layout.

    ``truth_*`` files are the frozen generator truth; ``labels_*`` are
    editable copies for review and correction.
    """
    region_dir = Path(region_dir)
    region_dir.mkdir(parents=True, exist_ok=True)
    write_raster(scene.pair.t1, region_dir / "t1.json")
    write_raster(scene.pair.t2, region_dir / "t2.json")
    write_labels(scene.state_t1, region_dir / "truth_state_t1.json")
    write_labels(scene.state_t2, region_dir / "truth_state_t2.json")
    write_labels(scene.change, region_dir / "truth_change.json")
    write_labels(scene.state_t1, region_dir / "labels_t1.json")
    write_labels(scene.state_t2, region_dir / "labels_t2.json")
    write_labels(scene.change, region_dir / "labels_change.json")
