// Label thresholding and pixel rendering, kept bit-compatible with the
// service: foreground is label >= t (ties included), and the continuous
// view quantizes labels to 8 bits with round-half-to-even, which is what
// the server's PNG encoder does.

export function thresholdLabels(labels: ArrayLike<number>, t: number): Uint8Array {
  if (!Number.isFinite(t) || t < 0 || t > 1) {
    throw new RangeError(`threshold must be in [0, 1], got ${t}`);
  }
  const out = new Uint8Array(labels.length);
  for (let i = 0; i < labels.length; i++) {
    out[i] = labels[i] >= t ? 1 : 0;
  }
  return out;
}

function roundHalfEven(x: number): number {
  const f = Math.floor(x);
  const diff = x - f;
  if (diff > 0.5) return f + 1;
  if (diff < 0.5) return f;
  return f % 2 === 0 ? f : f + 1;
}

function checkIds(ids: ArrayLike<number>, nodeCount: number): void {
  for (let i = 0; i < ids.length; i++) {
    const id = ids[i];
    if (!Number.isInteger(id) || id < 0 || id >= nodeCount) {
      throw new RangeError(`superpixel id ${id} at pixel ${i} out of range`);
    }
  }
}

/** Per-pixel binary mask (0 or 255) from the superpixel id map and labels. */
export function renderMaskPixels(
  ids: ArrayLike<number>,
  labels: ArrayLike<number>,
  t: number,
): Uint8Array {
  const node = thresholdLabels(labels, t);
  checkIds(ids, labels.length);
  const out = new Uint8Array(ids.length);
  for (let i = 0; i < ids.length; i++) {
    out[i] = node[ids[i]] ? 255 : 0;
  }
  return out;
}

/** Per-pixel 8-bit label view, equal to the server's continuous PNG. */
export function renderContinuousPixels(
  ids: ArrayLike<number>,
  labels: ArrayLike<number>,
): Uint8Array {
  checkIds(ids, labels.length);
  const gray = new Uint8Array(labels.length);
  for (let k = 0; k < labels.length; k++) {
    gray[k] = Math.min(255, Math.max(0, roundHalfEven(labels[k] * 255)));
  }
  const out = new Uint8Array(ids.length);
  for (let i = 0; i < ids.length; i++) {
    out[i] = gray[ids[i]];
  }
  return out;
}
