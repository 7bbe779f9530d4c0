/** Application wiring: region browser, layer toggles, editing, saving. */

import { ApiClient, ConflictError, LabelLayer, RegionInfo } from "./api.js";
import { LabelBuffer } from "./labels.js";
import { classColor, cssColor } from "./palette.js";
import { LayerView } from "./render.js";

interface ViewState {
  region: RegionInfo | null;
  compositeDate: "t1" | "t2";
  compositeBands: "rgb" | "swgb";
  labelLayer: LabelLayer;
  opacity: number;
  selectedClass: number | null;
  brushMode: boolean;
  buffer: LabelBuffer | null;
}

const state: ViewState = {
  region: null,
  compositeDate: "t1",
  compositeBands: "rgb",
  labelLayer: "change",
  opacity: 0.55,
  selectedClass: null,
  brushMode: false,
  buffer: null,
};

const api = new ApiClient("");
let view: LayerView;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string, kind: "info" | "error" = "info"): void {
  const banner = el<HTMLDivElement>("status");
  banner.textContent = text;
  banner.className = kind;
}

async function refreshComposite(): Promise<void> {
  if (!state.region) return;
  const url =
    api.compositeUrl(state.region.id, state.compositeDate, state.compositeBands) +
    `&_=${Date.now()}`;
  await view.setComposite(url);
  redraw();
}

function redraw(): void {
  view.draw(state.buffer, state.opacity);
}

async function loadLabels(): Promise<void> {
  if (!state.region) return;
  const payload = await api.getLabels(state.region.id, state.labelLayer);
  state.buffer = new LabelBuffer(payload);
  state.selectedClass = state.buffer.classCodes()[0] ?? null;
  renderLegend();
  redraw();
  setStatus(
    `${state.region.id} / ${state.labelLayer} labels, revision ${payload.revision}`,
  );
}

function renderLegend(): void {
  const legend = el<HTMLDivElement>("legend");
  legend.innerHTML = "";
  if (!state.buffer) return;
  for (const code of state.buffer.classCodes()) {
    const name = state.buffer.className(code);
    const row = document.createElement("label");
    row.className = "legend-row";
    const radio = document.createElement("input");
    radio.type = "radio";
    radio.name = "class";
    radio.checked = code === state.selectedClass;
    radio.addEventListener("change", () => {
      state.selectedClass = code;
    });
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.background = cssColor(classColor(code, name));
    const text = document.createElement("span");
    text.textContent = `${code} ${name}`;
    row.append(radio, swatch, text);
    legend.append(row);
  }
}

async function loadRegion(id: string): Promise<void> {
  const regions = await api.listRegions();
  const region = regions.find((r) => r.id === id) ?? null;
  if (!region) {
    setStatus(`unknown region ${id}`, "error");
    return;
  }
  state.region = region;
  const canvas = el<HTMLCanvasElement>("view");
  canvas.width = region.width * 4;
  canvas.height = region.height * 4;
  await refreshComposite();
  await loadLabels();
}

async function save(): Promise<void> {
  if (!state.region || !state.buffer) return;
  try {
    const revision = await api.putLabels(
      state.region.id,
      state.labelLayer,
      state.buffer.revision,
      state.buffer.values,
    );
    state.buffer.revision = revision;
    setStatus(`saved revision ${revision}`);
  } catch (err) {
    if (err instanceof ConflictError) {
      const fresh = await api.getLabels(state.region.id, state.labelLayer);
      setStatus(
        `conflict: server is at revision ${fresh.revision}; your edits are kept ` +
          `locally - review and save again to overwrite`,
        "error",
      );
      state.buffer.revision = fresh.revision;
    } else {
      setStatus(String(err), "error");
    }
  }
}

function onCanvasClick(ev: MouseEvent): void {
  if (!state.buffer || state.selectedClass === null) return;
  const { x, y } = view.pixelFromEvent(ev);
  if (x < 0 || y < 0 || x >= state.buffer.width || y >= state.buffer.height) return;
  const changed = state.brushMode
    ? state.buffer.paint(x, y, state.selectedClass)
    : state.buffer.floodFill(x, y, state.selectedClass);
  if (changed > 0) {
    redraw();
    setStatus(`${changed} pixel(s) -> ${state.buffer.className(state.selectedClass)}`);
  }
}

function onCanvasMove(ev: MouseEvent): void {
  if (!state.buffer) return;
  const { x, y } = view.pixelFromEvent(ev);
  const readout = el<HTMLSpanElement>("cursor-readout");
  if (x < 0 || y < 0 || x >= state.buffer.width || y >= state.buffer.height) {
    readout.textContent = "";
    return;
  }
  const value = state.buffer.valueAt(x, y);
  readout.textContent = `(${x}, ${y}) = ${value} ${state.buffer.className(value)}`;
}

async function init(): Promise<void> {
  view = new LayerView(el<HTMLCanvasElement>("view"));
  const canvas = el<HTMLCanvasElement>("view");
  canvas.addEventListener("click", onCanvasClick);
  canvas.addEventListener("mousemove", onCanvasMove);

  el<HTMLButtonElement>("save").addEventListener("click", () => void save());
  el<HTMLButtonElement>("undo").addEventListener("click", () => {
    if (state.buffer?.undo()) {
      redraw();
      setStatus("undid last edit");
    }
  });
  document.addEventListener("keydown", (ev) => {
    if ((ev.ctrlKey || ev.metaKey) && ev.key === "z") {
      ev.preventDefault();
      if (state.buffer?.undo()) redraw();
    }
  });

  el<HTMLSelectElement>("composite-date").addEventListener("change", (ev) => {
    state.compositeDate = (ev.target as HTMLSelectElement).value as "t1" | "t2";
    void refreshComposite();
  });
  el<HTMLSelectElement>("composite-bands").addEventListener("change", (ev) => {
    state.compositeBands = (ev.target as HTMLSelectElement).value as "rgb" | "swgb";
    void refreshComposite();
  });
  el<HTMLSelectElement>("label-layer").addEventListener("change", (ev) => {
    state.labelLayer = (ev.target as HTMLSelectElement).value as LabelLayer;
    void loadLabels();
  });
  el<HTMLInputElement>("opacity").addEventListener("input", (ev) => {
    state.opacity = Number((ev.target as HTMLInputElement).value) / 100;
    redraw();
  });
  el<HTMLInputElement>("brush-mode").addEventListener("change", (ev) => {
    state.brushMode = (ev.target as HTMLInputElement).checked;
  });

  const select = el<HTMLSelectElement>("region-select");
  const regions = await api.listRegions();
  for (const region of regions) {
    const option = document.createElement("option");
    option.value = region.id;
    option.textContent = `${region.id} (${region.width}x${region.height})`;
    select.append(option);
  }
  select.addEventListener("change", () => void loadRegion(select.value));
  if (regions.length > 0) {
    select.value = regions[0].id;
    await loadRegion(regions[0].id);
  } else {
    setStatus("no regions found under the service root", "error");
  }
}

void init();
