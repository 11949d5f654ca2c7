// Pixel compositing for the result view: mask tinting over the image,
// a heat ramp for the continuous labels, and superpixel boundary lines.

export type Rgb = [number, number, number];

/**
 * Tint masked pixels of an RGBA image toward a color.
 *
 * `base` has 4 bytes per pixel, `mask` one byte (0 or 255); the result is a
 * copy with masked pixels blended `(1 - alpha) * base + alpha * color` and
 * forced opaque. Unmasked pixels pass through untouched.
 */
export function composeOverlay(
  base: Uint8ClampedArray,
  mask: Uint8Array,
  color: Rgb,
  alpha: number,
): Uint8ClampedArray {
  if (base.length !== 4 * mask.length) {
    throw new RangeError(
      `RGBA length ${base.length} does not match mask length ${mask.length}`,
    );
  }
  if (!(alpha >= 0 && alpha <= 1)) {
    throw new RangeError(`alpha must be in [0, 1], got ${alpha}`);
  }
  const out = new Uint8ClampedArray(base);
  for (let i = 0; i < mask.length; i++) {
    if (mask[i] === 0) continue;
    const o = 4 * i;
    out[o] = Math.round(base[o] * (1 - alpha) + color[0] * alpha);
    out[o + 1] = Math.round(base[o + 1] * (1 - alpha) + color[1] * alpha);
    out[o + 2] = Math.round(base[o + 2] * (1 - alpha) + color[2] * alpha);
    out[o + 3] = 255;
  }
  return out;
}

/** Cold-to-warm ramp for 8-bit label values: 0 is blue, 255 is red. */
export function heatPixels(gray: Uint8Array): Uint8ClampedArray {
  const out = new Uint8ClampedArray(4 * gray.length);
  for (let i = 0; i < gray.length; i++) {
    const v = gray[i];
    const o = 4 * i;
    out[o] = v;
    out[o + 1] = 0;
    out[o + 2] = 255 - v;
    out[o + 3] = 255;
  }
  return out;
}

/**
 * Boundary mask of a superpixel id map: a pixel is marked when its id
 * differs from its left or top neighbor.
 */
export function boundaryMask(
  ids: ArrayLike<number>,
  width: number,
  height: number,
): Uint8Array {
  if (ids.length !== width * height) {
    throw new RangeError(`id map length ${ids.length} is not ${width}x${height}`);
  }
  const out = new Uint8Array(ids.length);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const i = y * width + x;
      if ((x > 0 && ids[i] !== ids[i - 1]) ||
          (y > 0 && ids[i] !== ids[i - width])) {
        out[i] = 255;
      }
    }
  }
  return out;
}
