// Browser entry point: wires the store, the canvas, and the toolbar.
// The page is static; the service address comes from the ?api= query
// parameter (default: same origin) and sessions are addressed with
// ?session=<id> or through the toolbar inputs.

import { ApiClient } from './api.js';
import { DelineationStore, PICK_RADIUS_PX } from './state.js';
import type { LayerVisibility, UiState } from './state.js';
import { drawScene } from './render.js';
import type { SceneImage } from './render.js';
import { boundsOfPoints, fitBounds, pan, worldToScreen, zoomAt } from './transform.js';
import type { ViewTransform } from './transform.js';

const DRAG_THRESHOLD_PX = 3;
const VERTEX_GRAB_PX = 10;
const TOAST_MS = 4000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const params = new URLSearchParams(window.location.search);
const apiBase = params.get('api') ?? window.location.origin;
const api = new ApiClient(apiBase);
const store = new DelineationStore(api);

const canvas = el<HTMLCanvasElement>('scene');
const ctx = canvas.getContext('2d');
if (ctx === null) throw new Error('canvas 2d context unavailable');

let view: ViewTransform = { originX: -10, originY: 10, scale: 20 };
let fitted = false;
let overlay: SceneImage | null = null;
let toastTimer: number | undefined;

// vertex drag state while the Edit toggle is on
let editMode = false;
let dragVertex: number | null = null;
let draggedCoords: number[][] | null = null;
let mouseDown: { x: number; y: number; moved: boolean } | null = null;

function resizeCanvas(): void {
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  redraw();
}

function redraw(): void {
  const state = store.state;
  if (!fitted && state.nodes.length > 0) {
    const bounds = boundsOfPoints(state.nodes.map((n) => [n.x, n.y]));
    if (bounds !== null) {
      view = fitBounds(bounds, canvas.width, canvas.height);
      fitted = true;
    }
  }
  let scene: UiState = state;
  if (draggedCoords !== null && state.candidate !== null) {
    scene = {
      ...state,
      candidate: {
        ...state.candidate,
        geometry: { type: 'LineString', coordinates: draggedCoords },
      },
    };
  }
  drawScene(ctx as never, canvas.width, canvas.height, view, scene, overlay);
}

function renderChrome(state: UiState): void {
  const banner = el<HTMLDivElement>('banner');
  banner.textContent = state.banner ?? '';
  banner.style.display = state.banner === null ? 'none' : 'block';

  const toast = el<HTMLDivElement>('toast');
  if (state.toast !== null) {
    toast.textContent = state.toast;
    toast.style.display = 'block';
    window.clearTimeout(toastTimer);
    toastTimer = window.setTimeout(() => {
      toast.style.display = 'none';
    }, TOAST_MS);
  }

  el<HTMLSpanElement>('status').textContent =
    state.phase + (state.busy ? ' (working)' : '');

  const cand = state.candidate;
  const info = el<HTMLDivElement>('candidate-info');
  if (cand === null) {
    info.textContent = state.selection.length === 1
      ? 'pick a second node to route a line'
      : 'no candidate';
  } else {
    const swatch = `<span class="swatch" style="background:${cssColor(cand.color)}"></span>`;
    info.innerHTML =
      `${swatch} ${escapeHtml(cand.color)} ` +
      `&middot; sinuosity ${cand.sinuosity.toFixed(3)} ` +
      `&middot; ${cand.simplified ? 'simplified' : 'raw'}`;
  }
  el<HTMLSpanElement>('accepted-count').textContent = String(state.accepted.length);

  const hasCandidate = cand !== null;
  el<HTMLButtonElement>('accept-btn').disabled = !hasCandidate || state.busy;
  el<HTMLButtonElement>('delete-btn').disabled = !hasCandidate || state.busy;
  el<HTMLButtonElement>('simplify-btn').disabled = !hasCandidate || state.busy;
  el<HTMLButtonElement>('edit-btn').disabled = !hasCandidate;
}

function cssColor(name: string): string {
  const key = name.toLowerCase();
  if (key === 'green') return '#1a9641';
  if (key === 'yellow') return '#e0a80c';
  if (key === 'red') return '#d7191c';
  return '#888888';
}

function escapeHtml(text: string): string {
  return text.replace(/[&<>"]/g, (c) =>
    c === '&' ? '&amp;' : c === '<' ? '&lt;' : c === '>' ? '&gt;' : '&quot;');
}

store.subscribe((state) => {
  renderChrome(state);
  redraw();
});

// --- canvas interaction ---

canvas.addEventListener('mousedown', (ev) => {
  mouseDown = { x: ev.offsetX, y: ev.offsetY, moved: false };
  if (editMode && store.state.candidate !== null) {
    const coords = store.state.candidate.geometry.coordinates;
    let best = -1;
    let bestD = VERTEX_GRAB_PX;
    for (let i = 0; i < coords.length; i++) {
      const [sx, sy] = worldToScreen(view, coords[i]);
      const d = Math.hypot(sx - ev.offsetX, sy - ev.offsetY);
      if (d <= bestD) {
        best = i;
        bestD = d;
      }
    }
    if (best >= 0) {
      dragVertex = best;
      draggedCoords = coords.map((c) => c.slice());
    }
  }
});

canvas.addEventListener('mousemove', (ev) => {
  if (mouseDown === null) return;
  const dx = ev.offsetX - mouseDown.x;
  const dy = ev.offsetY - mouseDown.y;
  if (Math.hypot(dx, dy) > DRAG_THRESHOLD_PX) mouseDown.moved = true;
  if (!mouseDown.moved) return;
  if (dragVertex !== null && draggedCoords !== null) {
    const [wx, wy] = [
      view.originX + ev.offsetX / view.scale,
      view.originY - ev.offsetY / view.scale,
    ];
    draggedCoords[dragVertex] = [wx, wy];
    redraw();
  } else {
    view = pan(view, dx, dy);
    mouseDown.x = ev.offsetX;
    mouseDown.y = ev.offsetY;
    redraw();
  }
});

canvas.addEventListener('mouseup', (ev) => {
  const down = mouseDown;
  mouseDown = null;
  if (dragVertex !== null && draggedCoords !== null) {
    const coords = draggedCoords;
    dragVertex = null;
    draggedCoords = null;
    void store.replaceCandidateGeometry(coords);
    return;
  }
  if (down !== null && !down.moved) {
    void store.clickAt([ev.offsetX, ev.offsetY], view);
  }
});

canvas.addEventListener('mouseleave', () => {
  mouseDown = null;
  dragVertex = null;
  draggedCoords = null;
});

canvas.addEventListener('wheel', (ev) => {
  ev.preventDefault();
  const factor = Math.exp(-ev.deltaY * 0.0015);
  view = zoomAt(view, [ev.offsetX, ev.offsetY], factor);
  redraw();
}, { passive: false });

// --- toolbar ---

el<HTMLButtonElement>('load-btn').addEventListener('click', () => {
  const id = el<HTMLInputElement>('session-input').value.trim();
  if (id !== '') {
    fitted = false;
    void store.load(id);
  }
});

el<HTMLButtonElement>('create-btn').addEventListener('click', () => {
  const image = el<HTMLInputElement>('image-input').value.trim();
  if (image === '') return;
  void api.createSession({ image }).then(
    (created) => {
      el<HTMLInputElement>('session-input').value = created.session_id;
      fitted = false;
      return store.load(created.session_id);
    },
    (err) => {
      store.state.banner = err instanceof Error ? err.message : String(err);
      renderChrome(store.state);
    },
  );
});

el<HTMLButtonElement>('accept-btn').addEventListener('click', () => {
  void store.acceptCandidate();
});

el<HTMLButtonElement>('delete-btn').addEventListener('click', () => {
  void store.deleteCandidate();
});

el<HTMLButtonElement>('clear-btn').addEventListener('click', () => {
  store.clearSelection();
});

el<HTMLButtonElement>('edit-btn').addEventListener('click', () => {
  editMode = !editMode;
  el<HTMLButtonElement>('edit-btn').classList.toggle('active', editMode);
});

const simplifyRange = el<HTMLInputElement>('simplify-range');
simplifyRange.addEventListener('input', () => {
  el<HTMLSpanElement>('simplify-value').textContent = `${simplifyRange.value} m`;
});

el<HTMLButtonElement>('simplify-btn').addEventListener('click', () => {
  void store.simplifyCandidate(Number(simplifyRange.value));
});

el<HTMLButtonElement>('export-btn').addEventListener('click', () => {
  void store.exportBoundaries().then((fc) => {
    if (fc === null) return;
    const blob = new Blob([JSON.stringify(fc, null, 2)], { type: 'application/geo+json' });
    const url = URL.createObjectURL(blob);
    const a = document.createElement('a');
    a.href = url;
    a.download = `${store.state.sessionId ?? 'boundaries'}.geojson`;
    a.click();
    URL.revokeObjectURL(url);
  });
});

for (const name of ['image', 'network', 'nodes', 'candidate', 'accepted'] as const) {
  const box = el<HTMLInputElement>(`layer-${name}`);
  box.checked = store.state.layers[name as keyof LayerVisibility];
  box.addEventListener('change', () => {
    store.toggleLayer(name as keyof LayerVisibility);
  });
}

// Local orthoimage overlay: the service exposes vectors only, so the
// raster is loaded straight from disk with its world file.
el<HTMLInputElement>('overlay-image').addEventListener('change', async () => {
  const imageFile = el<HTMLInputElement>('overlay-image').files?.[0];
  const worldFile = el<HTMLInputElement>('overlay-world').files?.[0];
  if (imageFile === undefined || worldFile === undefined) return;
  const text = await worldFile.text();
  const values = text.trim().split(/\s+/).map(Number);
  if (values.length < 6 || values.some((v) => !Number.isFinite(v))) {
    store.state.banner = 'world file must hold six numbers';
    renderChrome(store.state);
    return;
  }
  const [a, , , e, c, f] = values;
  const bitmap = await createImageBitmap(imageFile);
  // c, f locate the center of the top left pixel
  const west = c - a / 2;
  const north = f - e / 2;
  overlay = {
    source: bitmap,
    west,
    north,
    east: west + bitmap.width * a,
    south: north + bitmap.height * e,
  };
  redraw();
});

window.addEventListener('resize', resizeCanvas);
resizeCanvas();

const initialSession = params.get('session');
if (initialSession !== null) {
  el<HTMLInputElement>('session-input').value = initialSession;
  void store.load(initialSession);
}

el<HTMLSpanElement>('pick-note').textContent =
  `pick radius ${PICK_RADIUS_PX} px, scroll to zoom, drag to pan`;
