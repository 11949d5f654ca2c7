// Browser wiring: upload an image, paint foreground/background strokes,
// solve with a chosen method, and re-threshold the result instantly from
// the full-precision labels. A solve happens only on seed or method
// changes; the threshold slider never talks to the server.

import { ApiClient, Method, SolveQueue } from "./api";
import { boundaryMask, composeOverlay, heatPixels } from "./render";
import { Stroke, Tool, canSolve, exportSeeds } from "./scribble";
import { renderContinuousPixels, renderMaskPixels } from "./threshold";

function must<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const serviceUrl = must<HTMLInputElement>("service-url");
const imageFile = must<HTMLInputElement>("image-file");
const superpixelCount = must<HTMLInputElement>("superpixel-count");
const brushRadius = must<HTMLInputElement>("brush-radius");
const clearButton = must<HTMLButtonElement>("clear-strokes");
const methodSelect = must<HTMLSelectElement>("method");
const thresholdSlider = must<HTMLInputElement>("threshold");
const thresholdValue = must<HTMLElement>("threshold-value");
const solveButton = must<HTMLButtonElement>("solve");
const busyTag = must<HTMLElement>("busy");
const boundariesToggle = must<HTMLInputElement>("boundaries-toggle");
const statusLine = must<HTMLElement>("status");
const viewCanvas = must<HTMLCanvasElement>("view-canvas");
const heatCanvas = must<HTMLCanvasElement>("heat-canvas");

const viewCtx = viewCanvas.getContext("2d")!;
const heatCtx = heatCanvas.getContext("2d")!;

let client: ApiClient | null = null;
let sessionId: string | null = null;
let ids: number[] | null = null;
let imagePixels: Uint8ClampedArray | null = null;
let labels: number[] | null = null;
let strokes: Stroke[] = [];
let activeStroke: Stroke | null = null;
const queue = new SolveQueue();

function currentTool(): Tool {
  const checked = document.querySelector<HTMLInputElement>(
    'input[name="tool"]:checked',
  );
  return checked && checked.value === "background" ? "background" : "foreground";
}

function threshold(): number {
  return Number(thresholdSlider.value);
}

function setStatus(text: string): void {
  statusLine.textContent = text;
}

function updateControls(): void {
  const payload = exportSeeds(strokes, viewCanvas.width, viewCanvas.height);
  solveButton.disabled = sessionId === null || !canSolve(payload);
  busyTag.hidden = !queue.busy;
  thresholdValue.textContent = threshold().toFixed(2);
}

function strokeColor(tool: Tool): string {
  return tool === "foreground" ? "rgba(255, 60, 60, 0.8)" : "rgba(60, 90, 255, 0.8)";
}

function redraw(): void {
  if (!imagePixels || !ids) return;
  const w = viewCanvas.width;
  const h = viewCanvas.height;
  let pixels: Uint8ClampedArray;
  if (labels) {
    const mask = renderMaskPixels(ids, labels, threshold());
    pixels = composeOverlay(imagePixels, mask, [255, 70, 70], 0.45);
  } else {
    pixels = new Uint8ClampedArray(imagePixels);
  }
  if (boundariesToggle.checked) {
    const edges = boundaryMask(ids, w, h);
    for (let i = 0; i < edges.length; i++) {
      if (edges[i]) {
        pixels[4 * i] = 0;
        pixels[4 * i + 1] = 0;
        pixels[4 * i + 2] = 0;
      }
    }
  }
  const frame = viewCtx.createImageData(w, h);
  frame.data.set(pixels);
  viewCtx.putImageData(frame, 0, 0);
  for (const stroke of strokes.concat(activeStroke ? [activeStroke] : [])) {
    viewCtx.strokeStyle = strokeColor(stroke.tool);
    viewCtx.fillStyle = strokeColor(stroke.tool);
    viewCtx.lineWidth = 2 * stroke.radius + 1;
    viewCtx.lineCap = "round";
    viewCtx.lineJoin = "round";
    const pts = stroke.points;
    if (pts.length === 1) {
      viewCtx.beginPath();
      viewCtx.arc(pts[0][0], pts[0][1], stroke.radius + 0.5, 0, 2 * Math.PI);
      viewCtx.fill();
    } else {
      viewCtx.beginPath();
      viewCtx.moveTo(pts[0][0], pts[0][1]);
      for (let k = 1; k < pts.length; k++) viewCtx.lineTo(pts[k][0], pts[k][1]);
      viewCtx.stroke();
    }
  }
  if (labels) {
    const heat = heatCtx.createImageData(w, h);
    heat.data.set(heatPixels(renderContinuousPixels(ids, labels)));
    heatCtx.putImageData(heat, 0, 0);
  } else {
    heatCtx.clearRect(0, 0, w, h);
  }
}

async function loadImage(file: File): Promise<void> {
  client = new ApiClient(serviceUrl.value);
  setStatus("uploading...");
  try {
    const bytes = await file.arrayBuffer();
    const info = await client.createSession(
      bytes, Number(superpixelCount.value) || undefined,
    );
    sessionId = info.session;
    const idDoc = await client.superpixels(sessionId);
    ids = idDoc.ids;
    viewCanvas.width = heatCanvas.width = info.width;
    viewCanvas.height = heatCanvas.height = info.height;
    const bitmap = await createImageBitmap(file);
    viewCtx.drawImage(bitmap, 0, 0);
    imagePixels = new Uint8ClampedArray(
      viewCtx.getImageData(0, 0, info.width, info.height).data,
    );
    labels = null;
    strokes = [];
    setStatus(`${info.width}x${info.height}, ${info.superpixels} superpixels`);
  } catch (err) {
    sessionId = null;
    setStatus(`upload failed: ${err instanceof Error ? err.message : err}`);
  }
  updateControls();
  redraw();
}

function requestSolve(): void {
  if (!client || !sessionId) return;
  const payload = exportSeeds(strokes, viewCanvas.width, viewCanvas.height);
  if (!canSolve(payload)) return;
  const api = client;
  const sid = sessionId;
  const method = methodSelect.value as Method;
  busyTag.hidden = false;
  queue
    .submit(async () => {
      await api.putSeeds(sid, payload);
      return api.solve(sid, method, threshold());
    })
    .then((result) => {
      if (result) {
        labels = result.labels;
        setStatus(`${result.solver}: l1 energy ${result.energy.l1.toFixed(4)}`);
        redraw();
      }
    })
    .catch((err) => {
      setStatus(`solve failed: ${err instanceof Error ? err.message : err}`);
    })
    .finally(() => {
      busyTag.hidden = queue.busy === false ? true : false;
      updateControls();
    });
}

function canvasPoint(event: PointerEvent): [number, number] {
  const rect = viewCanvas.getBoundingClientRect();
  const x = ((event.clientX - rect.left) * viewCanvas.width) / rect.width;
  const y = ((event.clientY - rect.top) * viewCanvas.height) / rect.height;
  return [Math.round(x), Math.round(y)];
}

viewCanvas.addEventListener("pointerdown", (event) => {
  if (!sessionId) return;
  viewCanvas.setPointerCapture(event.pointerId);
  activeStroke = {
    tool: currentTool(),
    radius: Number(brushRadius.value),
    points: [canvasPoint(event)],
  };
  redraw();
});

viewCanvas.addEventListener("pointermove", (event) => {
  if (!activeStroke) return;
  activeStroke.points.push(canvasPoint(event));
  redraw();
});

viewCanvas.addEventListener("pointerup", () => {
  if (!activeStroke) return;
  strokes.push(activeStroke);
  activeStroke = null;
  updateControls();
  redraw();
});

clearButton.addEventListener("click", () => {
  strokes = [];
  activeStroke = null;
  updateControls();
  redraw();
});

imageFile.addEventListener("change", () => {
  const file = imageFile.files && imageFile.files[0];
  if (file) void loadImage(file);
});

thresholdSlider.addEventListener("input", () => {
  updateControls();
  redraw();
});

boundariesToggle.addEventListener("change", redraw);
methodSelect.addEventListener("change", requestSolve);
solveButton.addEventListener("click", requestSolve);

updateControls();
