"""HTTP segmentation service.

Sessions hold one uploaded image each, superpixelized and factorized once at
creation; seed edits and solves afterwards reuse the stored Cholesky factor
(``/stats`` exposes the factorization counter so clients can confirm this).
Solving is serialized per session but sessions are independent, and identical
requests against identical state return byte-identical JSON.  Idle sessions
expire after a configurable TTL.

The image is uploaded as the raw request body (any format Pillow reads), so
no multipart parsing is involved; seeds are JSON point lists in pixel
coordinates.  Label maps are also available rendered as grayscale PNGs whose
pixel values are the JSON labels quantized to 8 bits, and the per-pixel
superpixel id map is exposed so a client can render and re-threshold masks
on its own.
"""

from __future__ import annotations

import io
import json
import secrets
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from PIL import Image

from . import pipeline
from .config import Config
from .errors import InputError, SolverError
from .factorization import cholesky_upper
from .graph import SeedSet, build_incidence, build_wtilde
from .relaxations import METHODS, compute_energies, segment

PAYLOAD_VERSION = 1


class SessionNotFound(Exception):
    pass


@dataclass
class Session:
    sid: str
    spmap: pipeline.SuperpixelMap
    graph: object
    factor: object
    config: Config
    seeds: SeedSet | None = None
    results: dict = field(default_factory=dict)   # method -> (LabelField, EnergyReport)
    factorizations: int = 1
    solves: int = 0
    seed_edits: int = 0
    created: float = field(default_factory=time.monotonic)
    last_access: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def touch(self):
        self.last_access = time.monotonic()


def _json_response(doc, status_code: int = 200) -> Response:
    body = json.dumps(doc, sort_keys=True).encode()
    return Response(content=body, status_code=status_code,
                    media_type="application/json")


def _superpixel_polygons(spmap: pipeline.SuperpixelMap) -> list:
    """Outline polygon per superpixel in (x, y) pixel coordinates."""
    from scipy import ndimage
    from skimage import measure

    out = []
    lab = spmap.labels
    h, w = lab.shape
    objects = ndimage.find_objects(lab + 1)
    for k in range(spmap.count):
        sl = objects[k] if k < len(objects) else None
        if sl is None:
            out.append({"id": k, "polygon": []})
            continue
        r0 = max(0, sl[0].start - 1)
        r1 = min(h, sl[0].stop + 1)
        c0 = max(0, sl[1].start - 1)
        c1 = min(w, sl[1].stop + 1)
        mask = (lab[r0:r1, c0:c1] == k).astype(float)
        padded = np.pad(mask, 1)
        contours = measure.find_contours(padded, 0.5)
        poly = []
        if contours:
            longest = max(contours, key=len)
            step = max(1, len(longest) // 80)  # cap payload size
            for rr, cc in longest[::step]:
                poly.append([round(float(cc - 1 + c0), 2),
                             round(float(rr - 1 + r0), 2)])
        out.append({"id": k, "polygon": poly})
    return out


def _labels_png(spmap: pipeline.SuperpixelMap, labels: np.ndarray,
                view: str, threshold: float) -> bytes:
    painted = spmap.paint(labels)
    if view == "binary":
        pix = np.where(painted >= threshold, 255, 0).astype(np.uint8)
    else:
        pix = np.clip(np.round(painted * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(pix, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def create_app(config: Config | None = None) -> FastAPI:
    cfg = config or Config()
    app = FastAPI(title="segrelax service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    app.state.sessions = sessions

    def purge():
        now = time.monotonic()
        with registry_lock:
            dead = [k for k, s in sessions.items()
                    if now - s.last_access > cfg.session_ttl]
            for k in dead:
                del sessions[k]

    def get_session(sid: str) -> Session:
        purge()
        with registry_lock:
            sess = sessions.get(sid)
        if sess is None:
            raise SessionNotFound(sid)
        sess.touch()
        return sess

    @app.exception_handler(SessionNotFound)
    async def _not_found(request: Request, exc: SessionNotFound):
        return _json_response(
            {"v": PAYLOAD_VERSION, "error": f"unknown session {exc.args[0]!r}"}, 404
        )

    @app.exception_handler(InputError)
    async def _bad_input(request: Request, exc: InputError):
        return _json_response({"v": PAYLOAD_VERSION, "error": str(exc)}, 400)

    @app.exception_handler(SolverError)
    async def _solver_fail(request: Request, exc: SolverError):
        return _json_response(
            {"v": PAYLOAD_VERSION, "error": f"solver failure: {exc}"}, 500
        )

    @app.post("/sessions")
    async def create_session(request: Request,
                             superpixels: int | None = Query(default=None)):
        purge()
        raw = await request.body()
        return _create(raw, superpixels)

    def _create(raw: bytes, superpixels: int | None):
        if not raw:
            raise InputError("request body must contain the image bytes")
        try:
            with Image.open(io.BytesIO(raw)) as im:
                arr = np.asarray(im.convert("RGB"))
        except Exception as exc:
            raise InputError(f"cannot decode image: {exc}") from exc
        count = superpixels or cfg.superpixels
        count = min(count, arr.shape[0] * arr.shape[1])
        spmap = pipeline.superpixelize(arr, count, cfg.compactness)
        graph = spmap.to_graph(cfg.edge_constant)
        factor = cholesky_upper(build_wtilde(build_incidence(graph), cfg.epsilon))
        sid = secrets.token_hex(16)
        sess = Session(sid, spmap, graph, factor, cfg)
        with registry_lock:
            sessions[sid] = sess
        return _json_response(
            {
                "v": PAYLOAD_VERSION,
                "session": sid,
                "width": int(arr.shape[1]),
                "height": int(arr.shape[0]),
                "superpixels": spmap.count,
                "boundaries": _superpixel_polygons(spmap),
            },
            201,
        )

    @app.put("/sessions/{sid}/seeds")
    async def put_seeds(sid: str, request: Request):
        sess = get_session(sid)
        text = (await request.body()).decode("utf-8", errors="replace")
        fg, bg = pipeline.load_seeds_json(text)
        with sess.lock:
            sess.seeds = pipeline.rasterize_seed_points(sess.spmap, fg, bg)
            sess.results.clear()
            sess.seed_edits += 1
            return _json_response(
                {
                    "v": PAYLOAD_VERSION,
                    "foreground_superpixels": len(sess.seeds.foreground),
                    "background_superpixels": len(sess.seeds.background),
                }
            )

    @app.post("/sessions/{sid}/solve")
    async def solve(sid: str, request: Request):
        sess = get_session(sid)
        try:
            doc = json.loads((await request.body()).decode("utf-8", errors="replace"))
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed solve request: {exc}") from exc
        if int(doc.get("v", PAYLOAD_VERSION)) != PAYLOAD_VERSION:
            raise InputError(f"unsupported payload version {doc.get('v')!r}")
        method = doc.get("method", "compact_lp")
        if method not in METHODS:
            raise InputError(f"unknown method {method!r}; choose from {METHODS}")
        threshold = float(doc.get("threshold", sess.config.threshold))
        if not 0.0 <= threshold <= 1.0:
            raise InputError(f"threshold must be in [0, 1], got {threshold}")
        with sess.lock:
            if sess.seeds is None or not sess.seeds.foreground \
                    or not sess.seeds.background:
                raise InputError(
                    "both foreground and background seeds are required before solving"
                )
            if method in sess.results:
                field_, report = sess.results[method]
            else:
                field_, report = segment(
                    sess.graph, sess.seeds, method, factor=sess.factor,
                    boundary_weight=sess.config.boundary_weight,
                    tol=sess.config.lp_tol,
                    max_iterations=sess.config.lp_max_iter,
                )
                sess.results[method] = (field_, report)
                sess.solves += 1
            binary = pipeline.threshold_labels(field_.labels, threshold)
            return _json_response(
                {
                    "v": PAYLOAD_VERSION,
                    "labels": [float(v) for v in field_.labels],
                    "binary": [int(v) for v in binary],
                    "energy": report.as_dict(),
                    "solver": field_.solver,
                    "threshold": threshold,
                }
            )

    @app.get("/sessions/{sid}/labels")
    def get_labels(sid: str, method: str = Query(default="compact_lp"),
                   view: str = Query(default="continuous"),
                   threshold: float | None = Query(default=None)):
        sess = get_session(sid)
        if view not in ("continuous", "binary"):
            raise InputError(f"view must be continuous or binary, got {view!r}")
        with sess.lock:
            if method not in sess.results:
                raise SessionNotFound(f"{sid}/labels[{method}] (not solved yet)")
            field_, _ = sess.results[method]
            t = sess.config.threshold if threshold is None else float(threshold)
            if not 0.0 <= t <= 1.0:
                raise InputError(f"threshold must be in [0, 1], got {t}")
            png = _labels_png(sess.spmap, field_.labels, view, t)
        return Response(content=png, media_type="image/png")

    @app.get("/sessions/{sid}/superpixels")
    def superpixel_ids(sid: str):
        """Row-major per-pixel superpixel ids, for client-side mask rendering."""
        sess = get_session(sid)
        h, w = sess.spmap.shape
        return _json_response(
            {
                "v": PAYLOAD_VERSION,
                "width": int(w),
                "height": int(h),
                "count": sess.spmap.count,
                "ids": [int(v) for v in sess.spmap.labels.ravel()],
            }
        )

    @app.get("/sessions/{sid}/stats")
    def stats(sid: str):
        sess = get_session(sid)
        with sess.lock:
            return _json_response(
                {
                    "v": PAYLOAD_VERSION,
                    "factorizations": sess.factorizations,
                    "solves": sess.solves,
                    "seed_edits": sess.seed_edits,
                    "superpixels": sess.spmap.count,
                    "nodes": sess.graph.node_count,
                    "edges": sess.graph.edge_count,
                    "age_seconds": round(time.monotonic() - sess.created, 3),
                }
            )

    return app
