"""HTTP service for browsing regions and correcting labels.

Serves region listings, display composites and label rasters out of a
directory of region folders, and accepts label updates with optimistic
concurrency: every label layer carries a monotonically increasing
revision, a PUT must quote the revision it read, and a stale revision
is rejected with 409 so the client can refetch and merge.  Writes are
atomic (temp file + rename) and serialized per region.
"""

from __future__ import annotations

import base64
import io
import json
import os
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from .raster import (
    BLUE,
    GREEN,
    LabelRaster,
    RED,
    SWIR1,
    composite_image,
    read_labels,
    read_raster,
    write_labels,
)

LABEL_LAYERS = {"t1": "labels_t1", "t2": "labels_t2", "change": "labels_change"}
COMPOSITES = {"rgb": (RED, GREEN, BLUE), "swgb": (SWIR1, GREEN, BLUE)}


class LabelUpdate(BaseModel):
    revision: int
    data: str  # base64 uint8, row-major


class RegionStore:
    """Filesystem-backed regions with per-region write locks."""

    def __init__(self, root):
        self.root = Path(root)
        if not self.root.is_dir():
            raise NotADirectoryError(f"{self.root} is not a directory")
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def region_ids(self) -> list[str]:
        ids = []
        for child in sorted(self.root.iterdir()):
            if child.is_dir() and (child / "t1.json").exists():
                ids.append(child.name)
        return ids

    def region_dir(self, region_id: str) -> Path:
        d = self.root / region_id
        if region_id not in self.region_ids():
            raise KeyError(region_id)
        return d

    def lock(self, region_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(region_id, threading.Lock())

    def revisions(self, region_id: str) -> dict[str, int]:
        path = self.region_dir(region_id) / "revisions.json"
        if path.exists():
            return json.loads(path.read_text())
        return {layer: 0 for layer in LABEL_LAYERS}

    def _write_revisions(self, region_id: str, revisions: dict[str, int]) -> None:
        path = self.region_dir(region_id) / "revisions.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(revisions, indent=2, sort_keys=True))
        os.replace(tmp, path)

    def labels(self, region_id: str, layer: str) -> tuple[LabelRaster, int]:
        if layer not in LABEL_LAYERS:
            raise KeyError(layer)
        raster = read_labels(self.region_dir(region_id) / f"{LABEL_LAYERS[layer]}.json")
        return raster, self.revisions(region_id).get(layer, 0)

    def update_labels(self, region_id: str, layer: str, revision: int,
                      values: np.ndarray) -> int:
        """Atomic write with revision check; returns the new revision."""
        with self.lock(region_id):
            current, current_rev = self.labels(region_id, layer)
            if revision != current_rev:
                raise RevisionConflict(current_rev)
            if values.shape != current.values.shape:
                raise ValueError(
                    f"payload shape {values.shape} does not match "
                    f"{current.values.shape}"
                )
            updated = LabelRaster(values=values, classes=current.classes,
                                  nodata=current.nodata)
            target = self.region_dir(region_id) / f"{LABEL_LAYERS[layer]}.json"
            # Stage under the final file names so the header's payload
            # reference survives the rename.
            tmpdir = target.parent / ".staging"
            tmpdir.mkdir(exist_ok=True)
            write_labels(updated, tmpdir / target.name)
            os.replace(tmpdir / target.with_suffix(".bin").name, target.with_suffix(".bin"))
            os.replace(tmpdir / target.name, target)
            revisions = self.revisions(region_id)
            revisions[layer] = current_rev + 1
            self._write_revisions(region_id, revisions)
            return current_rev + 1


class RevisionConflict(Exception):
    def __init__(self, current_revision: int):
        super().__init__(f"stale revision; current is {current_revision}")
        self.current_revision = current_revision


def create_app(root) -> FastAPI:
    store = RegionStore(root)
    app = FastAPI(title="pond label service")

    @app.get("/api/regions")
    def list_regions():
        out = []
        for rid in store.region_ids():
            raster = read_raster(store.region_dir(rid) / "t1.json")
            out.append(
                {
                    "id": rid,
                    "width": raster.width,
                    "height": raster.height,
                    "bands": list(raster.bands),
                    "revisions": store.revisions(rid),
                }
            )
        return out

    @app.get("/api/regions/{region_id}/composite.png")
    def composite(region_id: str, date: str = "t1", bands: str = "rgb"):
        if date not in ("t1", "t2"):
            raise HTTPException(400, f"unknown date {date!r}")
        if bands not in COMPOSITES:
            raise HTTPException(400, f"unknown band triple {bands!r}")
        try:
            raster = read_raster(store.region_dir(region_id) / f"{date}.json")
        except KeyError:
            raise HTTPException(404, f"unknown region {region_id!r}")
        triple = COMPOSITES[bands]
        for b in triple:
            if b not in raster.bands:
                raise HTTPException(400, f"region lacks band {b!r}")
        rgb = composite_image(raster, *triple)
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(rgb, mode="RGB").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/api/regions/{region_id}/labels")
    def get_labels(region_id: str, date: str = "change"):
        try:
            raster, revision = store.labels(region_id, date)
        except KeyError as exc:
            raise HTTPException(404, f"unknown region or layer: {exc}")
        return {
            "width": raster.width,
            "height": raster.height,
            "revision": revision,
            "classes": {str(k): v for k, v in sorted(raster.classes.items())},
            "nodata": raster.nodata,
            "data": base64.b64encode(raster.values.tobytes()).decode("ascii"),
        }

    @app.put("/api/regions/{region_id}/labels")
    def put_labels(region_id: str, update: LabelUpdate, date: str = "change"):
        try:
            current, _ = store.labels(region_id, date)
        except KeyError as exc:
            raise HTTPException(404, f"unknown region or layer: {exc}")
        try:
            raw = base64.b64decode(update.data, validate=True)
        except Exception:
            raise HTTPException(400, "data is not valid base64")
        values = np.frombuffer(raw, dtype=np.uint8)
        if values.size != current.width * current.height:
            raise HTTPException(
                400,
                f"payload holds {values.size} bytes; expected "
                f"{current.width * current.height}",
            )
        values = values.reshape(current.height, current.width).copy()
        try:
            new_rev = store.update_labels(region_id, date, update.revision, values)
        except RevisionConflict as exc:
            raise HTTPException(409, str(exc))
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        return {"revision": new_rev}

    return app


def serve(root, port: int = 8008, host: str = "127.0.0.1") -> None:
    """Run the label service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(root), host=host, port=port, log_level="info")
