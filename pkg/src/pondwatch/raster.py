"""Raster data types and the on-disk band-stack format.

A raster lives on disk as a ``<name>.json`` header next to a raw
``<name>.bin`` payload.  The header declares width, height, dtype,
byte order (always little-endian), interleave (band-sequential) and
the ordered band names; the payload is the raw pixel data.  Label
rasters reuse the same scheme with ``dtype: uint8``, an explicit
class table and nodata code 255.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

# Canonical band names.  Stacked rasters carry suffixed tags such as
# "Red_t1"; derived bands (water indices, counts) use free-form tags.
RED = "Red"
GREEN = "Green"
BLUE = "Blue"
NIR = "NIR"
SWIR1 = "SWIR1"
SWIR2 = "SWIR2"
LAB_L = "L"
LAB_A = "a"
LAB_B = "b"

RGB_BANDS = (RED, GREEN, BLUE)
SIX_BANDS = (RED, GREEN, BLUE, NIR, SWIR1, SWIR2)
LAB_BANDS = (LAB_L, LAB_A, LAB_B)

NODATA = 255

STATE_CLASSES = {0: "NoWater", 1: "Inactive", 2: "Transition", 3: "Active"}
CHANGE_CLASSES = {0: "NoChange", 1: "Decrease", 2: "Increase", 3: "WaterExistAbsence"}


@dataclass
class Raster:
    """A width x height x bands float32 image with named bands.

    ``data`` has shape (bands, height, width) in band-sequential order,
    matching the on-disk layout byte for byte.  Values are
    reflectance-like (nominally [0, 1], larger values allowed) and must
    be finite.  Instances are treated as immutable once constructed.
    """

    bands: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self):
        self.bands = tuple(str(b) for b in self.bands)
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 3 or data.shape[0] != len(self.bands):
            raise ValueError(
                f"data shape {data.shape} does not match {len(self.bands)} bands"
            )
        if data.shape[1] == 0 or data.shape[2] == 0 or len(self.bands) == 0:
            raise ValueError("empty raster")
        if len(set(self.bands)) != len(self.bands):
            raise ValueError(f"duplicate band names: {self.bands}")
        if not np.isfinite(data).all():
            raise ValueError("non-finite values in raster data")
        data.flags.writeable = False
        self.data = data

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    def band(self, name: str) -> np.ndarray:
        """Return one band as an (height, width) array."""
        try:
            i = self.bands.index(name)
        except ValueError:
            raise KeyError(f"missing band {name!r}; raster has {self.bands}") from None
        return self.data[i]

    def has_bands(self, names) -> bool:
        return all(n in self.bands for n in names)

    def with_bands(self, bands, data) -> "Raster":
        return Raster(bands=tuple(bands), data=data)


@dataclass
class BiTemporalPair:
    """Two co-registered rasters of the same region at two dates."""

    t1: Raster
    t2: Raster
    t1_date: str = ""
    t2_date: str = ""

    def __post_init__(self):
        if (self.t1.width, self.t1.height) != (self.t2.width, self.t2.height):
            raise ValueError(
                f"dimension mismatch: t1 {self.t1.width}x{self.t1.height} "
                f"vs t2 {self.t2.width}x{self.t2.height}"
            )
        if self.t1.bands != self.t2.bands:
            raise ValueError(
                f"band list mismatch: {self.t1.bands} vs {self.t2.bands}"
            )


@dataclass
class LabelRaster:
    """Per-pixel uint8 class codes with a declared class table.

    ``values`` has shape (height, width); 255 is nodata.  Every other
    value must be a member of ``classes``.
    """

    values: np.ndarray
    classes: dict[int, str]
    nodata: int = NODATA

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.uint8)
        if values.ndim != 2:
            raise ValueError(f"label values must be 2-D, got shape {values.shape}")
        if values.shape[0] == 0 or values.shape[1] == 0:
            raise ValueError("empty label raster")
        self.classes = {int(k): str(v) for k, v in self.classes.items()}
        if self.nodata in self.classes:
            raise ValueError(f"nodata code {self.nodata} collides with a class code")
        codes = np.unique(values)
        bad = [int(c) for c in codes if c != self.nodata and int(c) not in self.classes]
        if bad:
            raise ValueError(f"unknown class code(s) {bad}; classes are {self.classes}")
        values.flags.writeable = False
        self.values = values

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def class_codes(self) -> list[int]:
        return sorted(self.classes)


def _header_path(path) -> Path:
    p = Path(path)
    if p.suffix != ".json":
        p = p.with_suffix(p.suffix + ".json") if p.suffix else p.with_suffix(".json")
    return p


def read_raster(path) -> Raster:
    """Read a header/payload pair written by :func:`write_raster`."""
    header_path = _header_path(path)
    if not header_path.exists():
        raise FileNotFoundError(f"missing raster header {header_path}")
    header = json.loads(header_path.read_text())
    for key in ("width", "height", "bands", "data"):
        if key not in header:
            raise ValueError(f"raster header {header_path} lacks field {key!r}")
    if header.get("dtype", "float32") != "float32":
        raise ValueError(f"expected dtype float32, got {header.get('dtype')!r}")
    width, height = int(header["width"]), int(header["height"])
    bands = tuple(header["bands"])
    data_path = header_path.parent / header["data"]
    if not data_path.exists():
        raise FileNotFoundError(f"missing raster payload {data_path}")
    raw = np.fromfile(data_path, dtype="<f4")
    expected = width * height * len(bands)
    if raw.size != expected:
        raise ValueError(
            f"size mismatch: payload holds {raw.size} float32 values, "
            f"header implies {expected}"
        )
    return Raster(bands=bands, data=raw.reshape(len(bands), height, width))


def write_raster(r: Raster, path) -> None:
    """Write ``r`` as a header/payload pair; read_raster inverts exactly."""
    if not isinstance(r, Raster):
        raise TypeError("write_raster expects a Raster")
    if r.width == 0 or r.height == 0 or len(r.bands) == 0:
        raise ValueError("empty raster")
    if not np.isfinite(r.data).all():
        raise ValueError("non-finite values in raster data")
    header_path = _header_path(path)
    bin_name = header_path.with_suffix(".bin").name
    header = {
        "width": r.width,
        "height": r.height,
        "dtype": "float32",
        "byte_order": "LE",
        "interleave": "BSQ",
        "bands": list(r.bands),
        "data": bin_name,
    }
    header_path.parent.mkdir(parents=True, exist_ok=True)
    (header_path.parent / bin_name).write_bytes(
        np.ascontiguousarray(r.data, dtype="<f4").tobytes()
    )
    header_path.write_text(json.dumps(header, indent=2) + "\n")


def read_labels(path) -> LabelRaster:
    """Read a label raster; class-set membership is validated."""
    header_path = _header_path(path)
    if not header_path.exists():
        raise FileNotFoundError(f"missing label header {header_path}")
    header = json.loads(header_path.read_text())
    if header.get("dtype") != "uint8":
        raise ValueError(f"expected dtype uint8, got {header.get('dtype')!r}")
    width, height = int(header["width"]), int(header["height"])
    classes = {int(k): v for k, v in header["classes"].items()}
    nodata = int(header.get("nodata", NODATA))
    data_path = header_path.parent / header["data"]
    raw = np.fromfile(data_path, dtype=np.uint8)
    if raw.size != width * height:
        raise ValueError(
            f"size mismatch: payload holds {raw.size} bytes, "
            f"header implies {width * height}"
        )
    return LabelRaster(values=raw.reshape(height, width), classes=classes, nodata=nodata)


def write_labels(l: LabelRaster, path) -> None:
    if not isinstance(l, LabelRaster):
        raise TypeError("write_labels expects a LabelRaster")
    header_path = _header_path(path)
    bin_name = header_path.with_suffix(".bin").name
    header = {
        "width": l.width,
        "height": l.height,
        "dtype": "uint8",
        "byte_order": "LE",
        "interleave": "BSQ",
        "classes": {str(k): v for k, v in sorted(l.classes.items())},
        "nodata": l.nodata,
        "data": bin_name,
    }
    header_path.parent.mkdir(parents=True, exist_ok=True)
    (header_path.parent / bin_name).write_bytes(
        np.ascontiguousarray(l.values, dtype=np.uint8).tobytes()
    )
    header_path.write_text(json.dumps(header, indent=2) + "\n")


def percentile_stretch(band: np.ndarray) -> np.ndarray:
    """Stretch a band from its 2nd-98th percentile to 0..255 uint8.

    A constant band (zero percentile range) maps to mid-gray 128.
    """
    lo, hi = np.percentile(band, [2.0, 98.0])
    if hi <= lo:
        return np.full(band.shape, 128, dtype=np.uint8)
    t = (band.astype(np.float64) - lo) / (hi - lo)
    return np.clip(np.rint(t * 255.0), 0, 255).astype(np.uint8)


def composite_image(r: Raster, red: str, green: str, blue: str) -> np.ndarray:
    """Render three bands into an (h, w, 3) uint8 display composite."""
    channels = [percentile_stretch(r.band(name)) for name in (red, green, blue)]
    return np.stack(channels, axis=-1)


def export_png(r: Raster, red: str, green: str, blue: str, path) -> None:
    """Write an 8-bit RGB PNG composite of three named bands."""
    rgb = composite_image(r, red, green, blue)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")
