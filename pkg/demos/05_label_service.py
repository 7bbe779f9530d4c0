"""Label service round trip without a browser.

Synthesizes a region, starts the HTTP service in-process (test client,
no sockets), and walks the GET -> edit -> PUT -> conflict cycle the
label-correction UI relies on.
"""

import base64
import tempfile
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from pondwatch.service import create_app
from pondwatch.synth import SynthConfig, synth_generate, write_region

root = Path(tempfile.mkdtemp(prefix="pond_serve_"))
write_region(synth_generate(SynthConfig(width=64, height=64, pond_count=8, seed=4)), root / "region_00")

client = TestClient(create_app(root))

regions = client.get("/api/regions").json()
print("regions:", [(r["id"], r["width"], r["height"]) for r in regions])

payload = client.get("/api/regions/region_00/labels?date=change").json()
values = np.frombuffer(base64.b64decode(payload["data"]), np.uint8).copy()
values = values.reshape(payload["height"], payload["width"])
print("revision:", payload["revision"], "classes:", payload["classes"])

# recolor the first labeled pond pixel's whole row as a crude "edit"
ys, xs = np.nonzero(values != 0)
values[ys[0], :] = values[ys[0], xs[0]]
resp = client.put(
    "/api/regions/region_00/labels?date=change",
    json={"revision": payload["revision"],
          "data": base64.b64encode(values.tobytes()).decode()},
)
print("save ->", resp.status_code, resp.json())

stale = client.put(
    "/api/regions/region_00/labels?date=change",
    json={"revision": payload["revision"],
          "data": base64.b64encode(values.tobytes()).decode()},
)
print("stale save ->", stale.status_code, "(conflict as expected)")

png = client.get("/api/regions/region_00/composite.png?date=t2&bands=swgb")
print("swgb composite:", png.status_code, len(png.content), "bytes")
print(f"region directory: {root}")
print("for a real server: pondwatch serve --root", root)
