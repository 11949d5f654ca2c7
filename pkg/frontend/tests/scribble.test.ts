import { describe, expect, it } from "vitest";

import {
  SeedPayload,
  Stroke,
  canSolve,
  exportSeeds,
  importSeeds,
  stampStroke,
  toStrokes,
} from "../src/scribble";

const dot = (tool: Stroke["tool"], x: number, y: number, radius = 0): Stroke => ({
  tool,
  radius,
  points: [[x, y]],
});

describe("stampStroke", () => {
  it("stamps a single pixel at radius 0", () => {
    expect(stampStroke(dot("foreground", 3, 2), 8, 8)).toEqual(new Set([2 * 8 + 3]));
  });

  it("stamps a disc at radius 2", () => {
    const hits = stampStroke(dot("foreground", 4, 4, 2), 9, 9);
    expect(hits.size).toBe(13);
    expect(hits.has(4 * 9 + 4)).toBe(true);    // center
    expect(hits.has(2 * 9 + 4)).toBe(true);    // straight up two
    expect(hits.has(2 * 9 + 2)).toBe(false);   // corner is sqrt(8) > 2 away
  });

  it("clips to the image bounds", () => {
    const hits = stampStroke(dot("background", 0, 0, 2), 4, 4);
    for (const idx of hits) {
      expect(idx).toBeGreaterThanOrEqual(0);
      expect(idx).toBeLessThan(16);
    }
    expect(hits.has(0)).toBe(true);
  });

  it("fills segments between distant points without gaps", () => {
    const stroke: Stroke = {
      tool: "foreground",
      radius: 0,
      points: [[0, 0], [5, 0]],
    };
    const hits = stampStroke(stroke, 8, 8);
    for (let x = 0; x <= 5; x++) expect(hits.has(x)).toBe(true);
  });

  it("handles empty strokes", () => {
    expect(stampStroke({ tool: "foreground", radius: 1, points: [] }, 8, 8).size)
      .toBe(0);
  });
});

describe("exportSeeds", () => {
  it("classifies pixels by tool with later strokes winning", () => {
    const payload = exportSeeds(
      [dot("foreground", 1, 1), dot("background", 2, 1), dot("background", 1, 1)],
      4, 4,
    );
    expect(payload.foreground).toEqual([]);
    expect(payload.background).toEqual([[1, 1], [2, 1]]);
  });

  it("sorts points row-major", () => {
    const payload = exportSeeds(
      [dot("foreground", 3, 2), dot("foreground", 0, 1), dot("foreground", 2, 1)],
      5, 5,
    );
    expect(payload.foreground).toEqual([[0, 1], [2, 1], [3, 2]]);
  });

  it("produces an empty payload with no strokes, which disables solving", () => {
    const payload = exportSeeds([], 8, 8);
    expect(payload).toEqual({ v: 1, foreground: [], background: [] });
    expect(canSolve(payload)).toBe(false);
  });
});

describe("round trip", () => {
  it("export, import, export is a fixed point", () => {
    const strokes: Stroke[] = [
      { tool: "foreground", radius: 2, points: [[4, 4], [8, 6]] },
      { tool: "background", radius: 1, points: [[12, 2]] },
    ];
    const first = exportSeeds(strokes, 16, 16);
    const second = exportSeeds(toStrokes(importSeeds(first)), 16, 16);
    expect(second).toEqual(first);
  });

  it("accepts a hand-written payload unchanged", () => {
    const payload: SeedPayload = {
      v: 1,
      foreground: [[2, 0], [1, 3]],
      background: [[0, 0]],
    };
    const back = exportSeeds(toStrokes(importSeeds(payload)), 4, 4);
    expect(back).toEqual({
      v: 1,
      foreground: [[2, 0], [1, 3]],
      background: [[0, 0]],
    });
  });
});

describe("importSeeds validation", () => {
  it("rejects wrong versions and malformed structures", () => {
    expect(() => importSeeds(null)).toThrow(TypeError);
    expect(() => importSeeds({ v: 2, foreground: [], background: [] }))
      .toThrow(/version/);
    expect(() => importSeeds({ v: 1, foreground: "no", background: [] }))
      .toThrow(TypeError);
    expect(() => importSeeds({ v: 1, foreground: [[1.5, 2]], background: [] }))
      .toThrow(/malformed/);
    expect(() => importSeeds({ v: 1, foreground: [[1, 2, 3]], background: [] }))
      .toThrow(/malformed/);
  });
});

describe("canSolve", () => {
  it("requires seeds on both sides", () => {
    expect(canSolve({ v: 1, foreground: [[0, 0]], background: [] })).toBe(false);
    expect(canSolve({ v: 1, foreground: [], background: [[0, 0]] })).toBe(false);
    expect(canSolve({ v: 1, foreground: [[0, 0]], background: [[1, 1]] }))
      .toBe(true);
  });
});
