"""Capture UI test fixtures from a live segmentation service.

Starts ``segrelax serve`` on an ephemeral port, uploads a generated scene,
sets seeds, solves with two methods, and records everything a client-side
renderer must reproduce: the superpixel id map, the full-precision labels,
the server's own binary and continuous PNGs decoded to pixel arrays, and
the session stats.  Output goes to ``frontend/fixtures/service_fixture.json``.

Run from the repository root after installing the Python package:

    python3 frontend/scripts/make_fixtures.py
"""

import io
import json
import os
import subprocess
import sys
import time
import urllib.error
import urllib.request

import numpy as np
from PIL import Image

from segrelax import pipeline

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, os.pardir, "fixtures", "service_fixture.json")
THRESHOLD = 0.3


def start_server():
    proc = subprocess.Popen(
        [sys.executable, "-c",
         "import sys; from segrelax.cli import main; "
         "sys.exit(main(['serve', '--port', '0']))"],
        stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, text=True,
    )
    banner = proc.stdout.readline()
    port = int(banner.strip().rsplit(":", 1)[1])
    return proc, f"http://127.0.0.1:{port}"


def request(base, method, path, data=None, retries=1):
    for attempt in range(retries):
        try:
            req = urllib.request.Request(base + path, data=data, method=method)
            with urllib.request.urlopen(req, timeout=30) as resp:
                return resp.read()
        except (ConnectionError, urllib.error.URLError):
            if attempt == retries - 1:
                raise
            time.sleep(0.25)


def png_pixels(data):
    return [int(v) for v in np.asarray(Image.open(io.BytesIO(data))).ravel()]


def main():
    scene = pipeline.generate_two_region(size=(32, 32), rng=11)
    buf = io.BytesIO()
    arr = np.clip(np.round(scene.image * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(buf, format="PNG")

    proc, base = start_server()
    try:
        created = json.loads(request(base, "POST", "/sessions?superpixels=40",
                                     buf.getvalue(), retries=40))
        sid = created["session"]

        fg, bg = scene.seed_points()
        row_major = lambda p: (p[1], p[0])
        seeds = {
            "v": 1,
            "foreground": [list(p) for p in sorted(set(fg), key=row_major)],
            "background": [list(p) for p in sorted(set(bg), key=row_major)],
        }
        request(base, "PUT", f"/sessions/{sid}/seeds",
                json.dumps(seeds).encode())

        solve = lambda method: json.loads(request(
            base, "POST", f"/sessions/{sid}/solve",
            json.dumps({"v": 1, "method": method,
                        "threshold": THRESHOLD}).encode()))
        solve_qp = solve("qp")
        solve_compact = solve("compact_lp")

        ids_doc = json.loads(request(base, "GET", f"/sessions/{sid}/superpixels"))
        binary_png = request(
            base, "GET",
            f"/sessions/{sid}/labels?method=qp&view=binary&threshold={THRESHOLD}")
        continuous_png = request(base, "GET", f"/sessions/{sid}/labels?method=qp")
        stats = json.loads(request(base, "GET", f"/sessions/{sid}/stats"))

        fixture = {
            "v": 1,
            "width": ids_doc["width"],
            "height": ids_doc["height"],
            "count": ids_doc["count"],
            "threshold": THRESHOLD,
            "seeds": seeds,
            "ids": ids_doc["ids"],
            "solve": solve_qp,
            "solveCompact": solve_compact,
            "binaryPixels": png_pixels(binary_png),
            "continuousPixels": png_pixels(continuous_png),
            "stats": stats,
        }
        os.makedirs(os.path.dirname(OUT), exist_ok=True)
        with open(OUT, "w", encoding="utf-8") as fh:
            json.dump(fixture, fh)
        print(f"wrote {os.path.normpath(OUT)}: "
              f"{ids_doc['width']}x{ids_doc['height']}, "
              f"{ids_doc['count']} superpixels, "
              f"{len(seeds['foreground'])}+{len(seeds['background'])} seed points")
    finally:
        proc.terminate()
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()


if __name__ == "__main__":
    main()
