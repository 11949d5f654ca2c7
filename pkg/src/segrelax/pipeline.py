"""From images to graphs and from label fields back to masks.

The front half turns an RGB image into a superpixel graph: a small local
k-means over (color, position) on a grid of cluster centers, followed by a
cleanup that splits disconnected clusters into their 4-connected pieces and
merges the smallest pieces into their most similar neighbors until the
requested count is reached, with final ids renumbered row-major by centroid
so node ordering (and hence Cholesky fill-in) is reproducible.  The back half
evaluates segmentations: thresholding continuous labels, overlap scoring
against ground truth, threshold sweeps, a scripted "robot user" that drops
one corrective seed per round, and a generator of noisy two-region test
scenes.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from PIL import Image
from scipy import ndimage
from scipy.sparse.csgraph import connected_components

from .errors import InputError
from .graph import SeedSet, SuperpixelGraph, compute_edge_weights

MAX_IMAGE_SIDE = 4096


# ---------------------------------------------------------------------------
# superpixels


@dataclass(frozen=True)
class SuperpixelMap:
    """Pixel-to-superpixel assignment plus per-superpixel summaries."""

    labels: np.ndarray       # (H, W) int32, values 0..K-1
    mean_colors: np.ndarray  # (K, C)
    centroids: np.ndarray    # (K, 2) as (row, col)
    sizes: np.ndarray        # (K,)

    @property
    def count(self) -> int:
        return self.mean_colors.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def adjacency_edges(self) -> np.ndarray:
        """Canonical (i < j) pairs of 4-adjacent superpixels."""
        lab = self.labels
        pairs = np.concatenate(
            [
                np.column_stack([lab[:, :-1].ravel(), lab[:, 1:].ravel()]),
                np.column_stack([lab[:-1, :].ravel(), lab[1:, :].ravel()]),
            ]
        )
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        lo = pairs.min(axis=1)
        hi = pairs.max(axis=1)
        key = lo.astype(np.int64) * self.count + hi
        uniq = np.unique(key)
        return np.column_stack([uniq // self.count, uniq % self.count])

    def to_graph(self, constant: float) -> SuperpixelGraph:
        return SuperpixelGraph.from_features(
            self.mean_colors, self.adjacency_edges(), constant
        )

    def paint(self, values) -> np.ndarray:
        """Spread per-superpixel values onto the pixel grid."""
        vals = np.asarray(values, dtype=float)
        if vals.shape[0] != self.count:
            raise InputError("value count does not match superpixel count")
        return vals[self.labels]

    def boundary_mask(self) -> np.ndarray:
        """Pixels whose right or lower neighbor belongs to a different superpixel."""
        lab = self.labels
        mask = np.zeros(lab.shape, dtype=bool)
        mask[:, :-1] |= lab[:, :-1] != lab[:, 1:]
        mask[:-1, :] |= lab[:-1, :] != lab[1:, :]
        return mask


def _as_float_image(image) -> np.ndarray:
    img = np.asarray(image)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[0] == 0 or img.shape[1] == 0:
        raise InputError(f"expected an (H, W[, C]) image, got shape {img.shape}")
    if img.shape[0] > MAX_IMAGE_SIDE or img.shape[1] > MAX_IMAGE_SIDE:
        raise InputError(
            f"image exceeds {MAX_IMAGE_SIDE}x{MAX_IMAGE_SIDE}: {img.shape[:2]}"
        )
    if img.dtype == np.uint8:
        img = img.astype(float) / 255.0
    else:
        img = img.astype(float)
        if not np.all(np.isfinite(img)):
            raise InputError("image contains non-finite values")
    return img


def _grid_dims(h: int, w: int, target: int) -> tuple[int, int]:
    """Grid of cluster centers whose product best approximates the target."""
    s = np.sqrt(h * w / target)
    best = None
    for r in {max(1, int(np.floor(h / s))), max(1, int(np.ceil(h / s)))}:
        for c in {max(1, int(np.floor(w / s))), max(1, int(np.ceil(w / s)))}:
            key = (abs(r * c - target), -r * c, -r)
            if best is None or key < best[0]:
                best = (key, r, c)
    return best[1], best[2]


def _connected_pieces(raw: np.ndarray) -> tuple[int, np.ndarray]:
    """Pieces of the plane where 4-adjacent pixels share a raw id."""
    h, w = raw.shape
    total = h * w
    idx = np.arange(total, dtype=np.int64).reshape(h, w)
    same_r = raw[:, :-1] == raw[:, 1:]
    same_d = raw[:-1, :] == raw[1:, :]
    i = np.concatenate([idx[:, :-1][same_r], idx[:-1, :][same_d]])
    j = np.concatenate([idx[:, 1:][same_r], idx[1:, :][same_d]])
    adj = sp.coo_matrix(
        (np.ones(i.size, dtype=bool), (i, j)), shape=(total, total)
    )
    count, piece = connected_components(adj, directed=False)
    return count, piece.reshape(h, w).astype(np.int64)


def _merge_to_target(raw: np.ndarray, img: np.ndarray, target: int) -> np.ndarray:
    """4-connected ids hitting the target count by smallest-piece merges.

    The k-means assignment can leave an id in several disconnected pieces;
    each piece becomes its own id, then the smallest piece is repeatedly
    merged into its most color-similar neighbor until ``target`` ids remain.
    Wholly deterministic: ties break on piece index.
    """
    count, piece = _connected_pieces(raw)
    if count <= target:
        return piece.astype(np.int32)
    flat = piece.ravel()
    sizes = np.bincount(flat, minlength=count)
    colors = np.column_stack(
        [np.bincount(flat, weights=img[:, :, ch].ravel(), minlength=count)
         for ch in range(img.shape[2])]
    ) / sizes[:, None]

    p1 = np.concatenate(
        [piece[:, :-1][piece[:, :-1] != piece[:, 1:]],
         piece[:-1, :][piece[:-1, :] != piece[1:, :]]]
    )
    p2 = np.concatenate(
        [piece[:, 1:][piece[:, :-1] != piece[:, 1:]],
         piece[1:, :][piece[:-1, :] != piece[1:, :]]]
    )
    lo = np.minimum(p1, p2)
    hi = np.maximum(p1, p2)
    neighbors = [set() for _ in range(count)]
    for key in np.unique(lo * count + hi):
        a, b = divmod(int(key), count)
        neighbors[a].add(b)
        neighbors[b].add(a)

    parent = np.arange(count)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    heap = [(int(sizes[i]), i) for i in range(count)]
    heapq.heapify(heap)
    alive = count
    while alive > target and heap:
        s0, p0 = heapq.heappop(heap)
        if find(p0) != p0 or sizes[p0] != s0:
            continue  # merged away or grown since this entry was pushed
        others = {find(q) for q in neighbors[p0]} - {p0}
        if not others:
            continue  # a piece covering a whole image is beyond merging
        best = min(
            others,
            key=lambda q: (float(((colors[p0] - colors[q]) ** 2).sum()), q),
        )
        parent[p0] = best
        colors[best] = (colors[best] * sizes[best] + colors[p0] * sizes[p0]) \
            / (sizes[best] + sizes[p0])
        sizes[best] += sizes[p0]
        neighbors[best] |= neighbors[p0]
        neighbors[best].discard(p0)
        neighbors[best].discard(best)
        alive -= 1
        heapq.heappush(heap, (int(sizes[best]), best))

    roots = np.fromiter((find(i) for i in range(count)), dtype=np.int64, count=count)
    alive_ids = np.unique(roots)
    remap = np.zeros(count, dtype=np.int32)
    remap[alive_ids] = np.arange(alive_ids.size, dtype=np.int32)
    return remap[roots[piece]]


def superpixelize(image, target_count: int, compactness: float = 0.2,
                  iterations: int = 10) -> SuperpixelMap:
    """Partition an image into roughly ``target_count`` compact superpixels.

    Local k-means over concatenated (color, position) features: cluster
    centers start on a regular grid with spacing ``S = sqrt(H*W / target)``,
    each iteration reassigns pixels within a 2S window of each center by

        d^2 = ||color - center_color||^2 + (compactness / S)^2 * ||xy - center_xy||^2

    and recomputes the centers.  Disconnected clusters are then split into
    their 4-connected pieces and the smallest pieces merged into their most
    color-similar neighbors until exactly ``target_count`` ids remain (fewer
    only if k-means produced fewer pieces), renumbered row-major by centroid.
    ``target_count == H*W`` returns the identity partition.
    """
    img = _as_float_image(image)
    h, w, _ = img.shape
    total = h * w
    if not 1 <= target_count <= total:
        raise InputError(f"target_count must be in [1, {total}], got {target_count}")
    if target_count == total:
        labels = np.arange(total, dtype=np.int32).reshape(h, w)
        return _summarize(img, labels)
    s = float(np.sqrt(total / target_count))
    rows, cols = _grid_dims(h, w, target_count)
    cr = (np.arange(rows) + 0.5) * (h / rows) - 0.5
    cc = (np.arange(cols) + 0.5) * (w / cols) - 0.5
    grid_r, grid_c = np.meshgrid(cr, cc, indexing="ij")
    centers_rc = np.column_stack([grid_r.ravel(), grid_c.ravel()])
    ridx = np.clip(np.round(centers_rc[:, 0]).astype(int), 0, h - 1)
    cidx = np.clip(np.round(centers_rc[:, 1]).astype(int), 0, w - 1)
    centers_color = img[ridx, cidx].astype(float)
    k = centers_rc.shape[0]
    spatial_scale = (compactness / s) ** 2
    rr_grid, cc_grid = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    labels = np.zeros((h, w), dtype=np.int32)
    for _ in range(max(1, iterations)):
        best = np.full((h, w), np.inf)
        assign = np.full((h, w), -1, dtype=np.int32)
        for kk in range(k):
            r0 = max(0, int(centers_rc[kk, 0] - s))
            r1 = min(h, int(centers_rc[kk, 0] + s) + 2)
            c0 = max(0, int(centers_rc[kk, 1] - s))
            c1 = min(w, int(centers_rc[kk, 1] + s) + 2)
            patch = img[r0:r1, c0:c1]
            dc = ((patch - centers_color[kk]) ** 2).sum(axis=2)
            dr = (rr_grid[r0:r1, c0:c1] - centers_rc[kk, 0]) ** 2
            dcc = (cc_grid[r0:r1, c0:c1] - centers_rc[kk, 1]) ** 2
            d2 = dc + spatial_scale * (dr + dcc)
            win_best = best[r0:r1, c0:c1]
            better = d2 < win_best
            win_best[better] = d2[better]
            assign[r0:r1, c0:c1][better] = kk
        missed = assign < 0
        if missed.any():
            # centers drifted off a region; fall back to nearest center
            pos = np.column_stack([rr_grid[missed], cc_grid[missed]])
            d = ((pos[:, None, :] - centers_rc[None, :, :]) ** 2).sum(axis=2)
            assign[missed] = np.argmin(d, axis=1).astype(np.int32)
        labels = assign
        flat = labels.ravel()
        counts = np.bincount(flat, minlength=k).astype(float)
        occupied = counts > 0
        sum_r = np.bincount(flat, weights=rr_grid.ravel(), minlength=k)
        sum_c = np.bincount(flat, weights=cc_grid.ravel(), minlength=k)
        centers_rc[occupied, 0] = sum_r[occupied] / counts[occupied]
        centers_rc[occupied, 1] = sum_c[occupied] / counts[occupied]
        for ch in range(img.shape[2]):
            sum_col = np.bincount(flat, weights=img[:, :, ch].ravel(), minlength=k)
            centers_color[occupied, ch] = sum_col[occupied] / counts[occupied]
    labels = _merge_to_target(labels, img, target_count)
    return _summarize(img, labels)


def _summarize(img: np.ndarray, labels: np.ndarray) -> SuperpixelMap:
    h, w, c = img.shape
    flat = labels.ravel()
    k = int(flat.max()) + 1
    sizes = np.bincount(flat, minlength=k)
    if sizes.min() == 0:
        raise InputError("superpixel ids are not contiguous")
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    cent = np.column_stack(
        [
            np.bincount(flat, weights=rr.ravel(), minlength=k) / sizes,
            np.bincount(flat, weights=cc.ravel(), minlength=k) / sizes,
        ]
    )
    colors = np.column_stack(
        [np.bincount(flat, weights=img[:, :, ch].ravel(), minlength=k) / sizes
         for ch in range(c)]
    )
    # renumber row-major over centroids
    order = np.lexsort((cent[:, 1], cent[:, 0]))
    rank = np.empty(k, dtype=np.int32)
    rank[order] = np.arange(k, dtype=np.int32)
    labels = rank[labels]
    return SuperpixelMap(labels, colors[order], cent[order], sizes[order])


# ---------------------------------------------------------------------------
# seeds in pixel space


def rasterize_seed_points(spmap: SuperpixelMap, foreground, background) -> SeedSet:
    """Map (x, y) pixel points to superpixel seeds, majority per superpixel.

    A superpixel hit by both classes goes to whichever has more points in it;
    exact ties break to foreground.
    """
    h, w = spmap.shape
    votes_fg = np.zeros(spmap.count, dtype=np.int64)
    votes_bg = np.zeros(spmap.count, dtype=np.int64)
    for pts, votes in ((foreground, votes_fg), (background, votes_bg)):
        for x, y in pts:
            xi, yi = int(x), int(y)
            if not (0 <= xi < w and 0 <= yi < h):
                raise InputError(f"seed point ({x}, {y}) outside the image")
            votes[spmap.labels[yi, xi]] += 1
    fg = {int(i) for i in np.flatnonzero(votes_fg >= np.maximum(votes_bg, 1))}
    bg = {int(i) for i in np.flatnonzero(votes_bg > votes_fg)}
    return SeedSet.of(fg, bg)


def rasterize_scribble_image(spmap: SuperpixelMap, scribbles) -> SeedSet:
    """Seeds from an RGBA scribble overlay: red marks foreground, blue background."""
    arr = np.asarray(scribbles)
    if arr.ndim != 3 or arr.shape[2] < 3 or arr.shape[:2] != spmap.shape:
        raise InputError("scribble overlay must be (H, W, 3|4) matching the image")
    alpha = arr[:, :, 3] > 0 if arr.shape[2] >= 4 else np.ones(arr.shape[:2], bool)
    r = arr[:, :, 0].astype(int)
    b = arr[:, :, 2].astype(int)
    fg_pix = alpha & (r >= 128) & (b < 128)
    bg_pix = alpha & (b >= 128) & (r < 128)
    fg_pts = [(c, rr) for rr, c in zip(*np.nonzero(fg_pix))]
    bg_pts = [(c, rr) for rr, c in zip(*np.nonzero(bg_pix))]
    return rasterize_seed_points(spmap, fg_pts, bg_pts)


def border_background_seeds(spmap: SuperpixelMap) -> set:
    """Superpixels touching the image border (for a skip-the-scribbles mode)."""
    lab = spmap.labels
    return set(np.unique(np.concatenate(
        [lab[0], lab[-1], lab[:, 0], lab[:, -1]]
    )).tolist())


# ---------------------------------------------------------------------------
# masks, overlap, sweeps


def threshold_labels(labels, threshold: float) -> np.ndarray:
    """Binary mask ``labels >= threshold`` (foreground closed at the threshold)."""
    if not 0.0 <= threshold <= 1.0:
        raise InputError(f"threshold must be in [0, 1], got {threshold}")
    return np.asarray(labels, dtype=float) >= threshold


def overlap_ratio(mask_a, mask_b) -> float:
    """Intersection over union; two empty masks count as a perfect match."""
    a = np.asarray(mask_a, dtype=bool)
    b = np.asarray(mask_b, dtype=bool)
    if a.shape != b.shape:
        raise InputError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


@dataclass(frozen=True)
class SweepReport:
    thresholds: np.ndarray
    gamma: dict          # method -> (grid_size,) overlap ratios
    mean: dict
    std: dict

    def rows(self):
        for method in sorted(self.gamma):
            for t, g in zip(self.thresholds, self.gamma[method]):
                yield float(t), method, float(g)


def threshold_sweep(label_maps: dict, truth, grid_size: int = 100) -> SweepReport:
    """Overlap ratio of every method's thresholded mask over an even grid.

    ``label_maps`` holds per-pixel continuous label images; ``grid_size``
    points are placed evenly over [0, 1] inclusive (so 2 gives {0, 1}).
    """
    if grid_size < 2:
        raise InputError("grid_size must be at least 2")
    truth = np.asarray(truth, dtype=bool)
    ts = np.linspace(0.0, 1.0, grid_size)
    gamma = {}
    for method, lab in label_maps.items():
        lab = np.asarray(lab, dtype=float)
        gamma[method] = np.array(
            [overlap_ratio(lab >= t, truth) for t in ts]
        )
    mean = {m: float(g.mean()) for m, g in gamma.items()}
    std = {m: float(g.std()) for m, g in gamma.items()}
    return SweepReport(ts, gamma, mean, std)


def robot_user_step(current_mask, truth_mask, seeds: SeedSet,
                    spmap: SuperpixelMap) -> SeedSet:
    """Add one corrective seed the way a patient user would.

    Takes the largest 4-connected region where the current mask disagrees
    with the truth and seeds the superpixel under the region's most central
    pixel with the true label.  If that superpixel already carries that seed,
    the next-most-central pixel of the region is tried.  A perfect mask (or a
    region whose superpixels are all seeded already) returns the seeds
    unchanged.
    """
    cur = np.asarray(current_mask, dtype=bool)
    tru = np.asarray(truth_mask, dtype=bool)
    if cur.shape != tru.shape or cur.shape != spmap.shape:
        raise InputError("mask shapes do not match the superpixel map")
    wrong = cur != tru
    if not wrong.any():
        return seeds
    comp, count = ndimage.label(wrong)
    sizes = ndimage.sum_labels(wrong, comp, index=np.arange(1, count + 1))
    biggest = 1 + int(np.argmax(sizes))
    rs, cs = np.nonzero(comp == biggest)
    center = (rs.mean(), cs.mean())
    order = np.argsort((rs - center[0]) ** 2 + (cs - center[1]) ** 2, kind="stable")
    want_fg = None
    for idx in order:
        r, c = int(rs[idx]), int(cs[idx])
        sp_id = int(spmap.labels[r, c])
        want_fg = bool(tru[r, c])
        level = seeds.foreground if want_fg else seeds.background
        if sp_id not in level:
            return seeds.with_added(sp_id, want_fg)
    return seeds


# ---------------------------------------------------------------------------
# synthetic two-region scenes


@dataclass(frozen=True)
class SyntheticScene:
    image: np.ndarray         # (H, W, 3) float in [0, 1]
    truth: np.ndarray         # (H, W) bool
    fg_scribbles: np.ndarray  # (H, W) bool
    bg_scribbles: np.ndarray  # (H, W) bool

    def seed_points(self):
        fg = [(int(c), int(r)) for r, c in zip(*np.nonzero(self.fg_scribbles))]
        bg = [(int(c), int(r)) for r, c in zip(*np.nonzero(self.bg_scribbles))]
        return fg, bg


def generate_two_region(size=(64, 64), contrast: float = 0.4, noise: float = 0.1,
                        rng=None, erode_px: int = 3) -> SyntheticScene:
    """A wobbly bright blob on a darker background, plus scribbles.

    The two tones sit ``contrast`` apart around mid-gray on every channel and
    i.i.d. Gaussian noise of the given standard deviation is added.  Scribble
    masks are erosions of the two true regions, giving generous seeds that
    stay safely away from the boundary.
    """
    rng = np.random.default_rng(rng)
    h, w = size
    center = np.array([h / 2, w / 2]) + rng.uniform(-0.05, 0.05, 2) * [h, w]
    base_r = 0.30 * min(h, w) * rng.uniform(0.9, 1.1)
    amps = rng.uniform(-0.12, 0.12, 4)
    phases = rng.uniform(0, 2 * np.pi, 4)
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    theta = np.arctan2(rr - center[0], cc - center[1])
    radius = base_r * (1 + sum(a * np.cos((k + 2) * theta + p)
                               for k, (a, p) in enumerate(zip(amps, phases))))
    dist = np.hypot(rr - center[0], cc - center[1])
    truth = dist <= radius
    lo, hi = 0.5 - contrast / 2, 0.5 + contrast / 2
    img = np.where(truth, hi, lo)[:, :, None].repeat(3, axis=2)
    img = np.clip(img + rng.normal(0.0, noise, img.shape), 0.0, 1.0)

    def _scribble(mask):
        px = erode_px
        while px > 0:
            er = ndimage.binary_erosion(mask, iterations=px)
            if er.any():
                return er
            px -= 1
        return mask.copy()

    return SyntheticScene(img, truth, _scribble(truth), _scribble(~truth))


# ---------------------------------------------------------------------------
# files


def load_image(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return _as_float_image(np.asarray(im.convert("RGB")))
    except InputError:
        raise
    except Exception as exc:
        raise InputError(f"cannot read image {path}: {exc}") from exc


def save_image(path, image) -> None:
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        arr = (np.clip(arr, 0.0, 1.0) * 255.0).round().astype(np.uint8)
    Image.fromarray(arr).save(path)


def save_mask_png(path, mask) -> None:
    save_image(path, np.where(np.asarray(mask, bool), 255, 0).astype(np.uint8))


def load_mask_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L")) >= 128
    except Exception as exc:
        raise InputError(f"cannot read mask {path}: {exc}") from exc


def load_seeds_json(path_or_text) -> tuple[list, list]:
    """Seed point lists from ``{"v": 1, "foreground": [[x, y]...], ...}``."""
    text = path_or_text
    if not str(text).lstrip().startswith("{"):
        try:
            with open(path_or_text, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read seeds file {path_or_text}: {exc}") from exc
    try:
        doc = json.loads(text)
        if int(doc.get("v", 1)) != 1:
            raise InputError(f"unsupported seeds payload version {doc.get('v')!r}")
        fg = [(float(x), float(y)) for x, y in doc["foreground"]]
        bg = [(float(x), float(y)) for x, y in doc["background"]]
    except InputError:
        raise
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed seeds JSON: {exc}") from exc
    return fg, bg


def sweep_to_csv(report: SweepReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["threshold", "method", "gamma"])
    for t, method, g in report.rows():
        writer.writerow([repr(t), method, repr(g)])
    return buf.getvalue()
