import json

import numpy as np
import pytest

from pondwatch.raster import (
    LabelRaster,
    Raster,
    CHANGE_CLASSES,
    STATE_CLASSES,
    composite_image,
    export_png,
    percentile_stretch,
    read_labels,
    read_raster,
    write_labels,
    write_raster,
)

from conftest import random_raster


class TestRasterType:
    def test_valid_construction(self):
        r = Raster(bands=("Green",), data=np.zeros((1, 2, 2), np.float32))
        assert (r.width, r.height) == (2, 2)
        assert r.band("Green").shape == (2, 2)

    def test_duplicate_bands_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            Raster(bands=("Red", "Red"), data=np.zeros((2, 2, 2), np.float32))

    def test_non_finite_rejected(self):
        data = np.zeros((1, 2, 2), np.float32)
        data[0, 0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            Raster(bands=("Red",), data=data)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            Raster(bands=("Red",), data=np.zeros((1, 0, 2), np.float32))

    def test_shape_band_mismatch(self):
        with pytest.raises(ValueError, match="does not match"):
            Raster(bands=("Red", "Green"), data=np.zeros((1, 2, 2), np.float32))

    def test_missing_band_lookup(self):
        r = Raster(bands=("Red",), data=np.zeros((1, 2, 2), np.float32))
        with pytest.raises(KeyError):
            r.band("Blue")

    def test_data_immutable(self):
        r = Raster(bands=("Red",), data=np.zeros((1, 2, 2), np.float32))
        with pytest.raises(ValueError):
            r.data[0, 0, 0] = 1.0


class TestRasterIO:
    def test_smallest_round_trip(self, tmp_path):
        r = Raster(bands=("Green",), data=np.arange(4, dtype=np.float32).reshape(1, 2, 2))
        write_raster(r, tmp_path / "a.json")
        back = read_raster(tmp_path / "a.json")
        assert back.bands == ("Green",)
        assert np.array_equal(back.data, r.data)
        assert (tmp_path / "a.bin").stat().st_size == 16

    def test_round_trip_byte_identical(self, rng, tmp_path):
        r = random_raster(rng)
        write_raster(r, tmp_path / "p.json")
        back = read_raster(tmp_path / "p.json")
        write_raster(back, tmp_path / "q.json")
        assert (tmp_path / "p.bin").read_bytes() == (tmp_path / "q.bin").read_bytes()

    def test_size_mismatch(self, tmp_path):
        r = Raster(bands=("Red", "Green"), data=np.zeros((2, 2, 2), np.float32))
        write_raster(r, tmp_path / "x.json")
        header = json.loads((tmp_path / "x.json").read_text())
        header["bands"] = ["Red", "Green", "Blue"]
        (tmp_path / "x.json").write_text(json.dumps(header))
        with pytest.raises(ValueError, match="size mismatch"):
            read_raster(tmp_path / "x.json")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_raster(tmp_path / "nope.json")

    def test_non_finite_payload_rejected_on_read(self, tmp_path):
        r = Raster(bands=("Red",), data=np.ones((1, 2, 2), np.float32))
        write_raster(r, tmp_path / "x.json")
        bad = np.array([1.0, np.inf, 0.0, 0.0], dtype="<f4")
        (tmp_path / "x.bin").write_bytes(bad.tobytes())
        with pytest.raises(ValueError, match="non-finite"):
            read_raster(tmp_path / "x.json")

    def test_write_refuses_tampered_nan(self, tmp_path):
        r = Raster(bands=("Red",), data=np.ones((1, 2, 2), np.float32))
        object.__setattr__(r, "data", np.full((1, 2, 2), np.nan, np.float32))
        with pytest.raises(ValueError, match="non-finite"):
            write_raster(r, tmp_path / "x.json")


class TestLabelIO:
    def test_all_nodata_round_trip(self, tmp_path):
        l = LabelRaster(values=np.full((3, 3), 255, np.uint8), classes=STATE_CLASSES)
        write_labels(l, tmp_path / "l.json")
        back = read_labels(tmp_path / "l.json")
        assert np.array_equal(back.values, l.values)
        assert back.classes == STATE_CLASSES

    def test_unknown_class_code(self, tmp_path):
        l = LabelRaster(values=np.zeros((2, 2), np.uint8), classes=CHANGE_CLASSES)
        write_labels(l, tmp_path / "l.json")
        raw = bytearray((tmp_path / "l.bin").read_bytes())
        raw[0] = 7
        (tmp_path / "l.bin").write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="unknown class code"):
            read_labels(tmp_path / "l.json")

    def test_state_codes_accepted(self):
        values = np.array([[0, 1], [2, 3]], np.uint8)
        l = LabelRaster(values=values, classes=STATE_CLASSES)
        assert l.class_codes() == [0, 1, 2, 3]


class TestExportPng:
    def test_constant_band_maps_to_midgray(self):
        band = np.full((4, 4), 0.7)
        assert (percentile_stretch(band) == 128).all()

    def test_value_at_98th_percentile_hits_255(self, rng):
        band = rng.uniform(0, 1, (20, 20))
        hi = np.percentile(band, 98.0)
        stretched = percentile_stretch(band)
        # a synthetic pixel exactly at the 98th percentile maps to 255
        band2 = band.copy()
        band2[0, 0] = hi
        assert percentile_stretch(band2)[0, 0] == 255

    def test_swgb_composite(self, rng, tmp_path):
        r = random_raster(rng)
        export_png(r, "SWIR1", "Green", "Blue", tmp_path / "swgb.png")
        assert (tmp_path / "swgb.png").stat().st_size > 0

    def test_deterministic_bytes(self, rng, tmp_path):
        r = random_raster(rng)
        export_png(r, "Red", "Green", "Blue", tmp_path / "a.png")
        export_png(r, "Red", "Green", "Blue", tmp_path / "b.png")
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()

    def test_missing_band(self, rng, tmp_path):
        r = random_raster(rng, bands=("Red", "Green", "Blue"))
        with pytest.raises(KeyError):
            export_png(r, "SWIR1", "Green", "Blue", tmp_path / "x.png")

    def test_composite_channel_order(self, rng):
        r = random_raster(rng)
        img = composite_image(r, "Red", "Green", "Blue")
        assert img.shape == (r.height, r.width, 3)
        assert np.array_equal(img[:, :, 1], percentile_stretch(r.band("Green")))
