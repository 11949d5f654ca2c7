// Scribble strokes and their conversion to the seed point payload the
// service consumes. A stroke is a polyline with a brush radius; stamping
// walks each segment and fills the brush disc, and later strokes overwrite
// earlier ones where they overlap. Export produces a canonical payload
// (points deduplicated and sorted row-major) so that exporting, importing,
// and exporting again is a fixed point.

export type Tool = "foreground" | "background";

export interface Stroke {
  tool: Tool;
  radius: number;
  points: Array<[number, number]>;
}

export interface SeedPayload {
  v: 1;
  foreground: Array<[number, number]>;
  background: Array<[number, number]>;
}

/** Pixel indices (y * width + x) covered by one stroke, clipped to bounds. */
export function stampStroke(stroke: Stroke, width: number, height: number): Set<number> {
  const out = new Set<number>();
  const r = Math.max(0, stroke.radius);
  const stamp = (cx: number, cy: number) => {
    if (r === 0) {
      const px = Math.round(cx);
      const py = Math.round(cy);
      if (px >= 0 && px < width && py >= 0 && py < height) {
        out.add(py * width + px);
      }
      return;
    }
    const y0 = Math.max(0, Math.ceil(cy - r));
    const y1 = Math.min(height - 1, Math.floor(cy + r));
    for (let y = y0; y <= y1; y++) {
      const x0 = Math.max(0, Math.ceil(cx - r));
      const x1 = Math.min(width - 1, Math.floor(cx + r));
      for (let x = x0; x <= x1; x++) {
        const dx = x - cx;
        const dy = y - cy;
        if (dx * dx + dy * dy <= r * r) {
          out.add(y * width + x);
        }
      }
    }
  };
  const pts = stroke.points;
  if (pts.length === 0) return out;
  stamp(pts[0][0], pts[0][1]);
  for (let k = 1; k < pts.length; k++) {
    const [ax, ay] = pts[k - 1];
    const [bx, by] = pts[k];
    const steps = Math.max(1, Math.ceil(Math.hypot(bx - ax, by - ay)));
    for (let s = 1; s <= steps; s++) {
      stamp(ax + ((bx - ax) * s) / steps, ay + ((by - ay) * s) / steps);
    }
  }
  return out;
}

/** Rasterize strokes to the canonical seed payload; later strokes win. */
export function exportSeeds(strokes: Stroke[], width: number, height: number): SeedPayload {
  const owner = new Map<number, Tool>();
  for (const stroke of strokes) {
    for (const idx of stampStroke(stroke, width, height)) {
      owner.set(idx, stroke.tool);
    }
  }
  const fg: Array<[number, number]> = [];
  const bg: Array<[number, number]> = [];
  for (const [idx, tool] of owner) {
    const pt: [number, number] = [idx % width, Math.floor(idx / width)];
    (tool === "foreground" ? fg : bg).push(pt);
  }
  const rowMajor = (a: [number, number], b: [number, number]) =>
    a[1] - b[1] || a[0] - b[0];
  fg.sort(rowMajor);
  bg.sort(rowMajor);
  return { v: 1, foreground: fg, background: bg };
}

function checkPoints(value: unknown, name: string): Array<[number, number]> {
  if (!Array.isArray(value)) {
    throw new TypeError(`seed payload ${name} must be a list of [x, y] points`);
  }
  return value.map((p) => {
    if (!Array.isArray(p) || p.length !== 2 ||
        !Number.isInteger(p[0]) || !Number.isInteger(p[1])) {
      throw new TypeError(`seed payload ${name} contains a malformed point`);
    }
    return [p[0], p[1]] as [number, number];
  });
}

export function importSeeds(doc: unknown): SeedPayload {
  if (typeof doc !== "object" || doc === null) {
    throw new TypeError("seed payload must be an object");
  }
  const rec = doc as Record<string, unknown>;
  if (rec.v !== 1) {
    throw new TypeError(`unsupported seed payload version ${String(rec.v)}`);
  }
  return {
    v: 1,
    foreground: checkPoints(rec.foreground, "foreground"),
    background: checkPoints(rec.background, "background"),
  };
}

/** Imported points become radius-0 dot strokes, one per point, so that no
 * segment interpolation invents pixels the payload never contained. */
export function toStrokes(payload: SeedPayload): Stroke[] {
  const dot = (tool: Tool) => (p: [number, number]): Stroke => ({
    tool,
    radius: 0,
    points: [p],
  });
  return [
    ...payload.foreground.map(dot("foreground")),
    ...payload.background.map(dot("background")),
  ];
}

/** Solving needs at least one seed on each side. */
export function canSolve(payload: SeedPayload): boolean {
  return payload.foreground.length > 0 && payload.background.length > 0;
}
