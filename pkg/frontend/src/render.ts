/** Canvas rendering: composite underlay plus label overlay. */

import { LabelBuffer } from "./labels.js";
import { classColor } from "./palette.js";

/** Paint the label buffer into RGBA pixels with the given opacity. */
export function overlayImage(
  buffer: LabelBuffer,
  opacity: number,
): Uint8ClampedArray {
  const out = new Uint8ClampedArray(buffer.width * buffer.height * 4);
  const alpha = Math.round(255 * opacity);
  for (let i = 0; i < buffer.values.length; i++) {
    const code = buffer.values[i];
    if (code === buffer.nodata) continue; // transparent
    const color = classColor(code, buffer.className(code));
    out[i * 4] = color.r;
    out[i * 4 + 1] = color.g;
    out[i * 4 + 2] = color.b;
    out[i * 4 + 3] = alpha;
  }
  return out;
}

export class LayerView {
  private composite: HTMLImageElement | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private scale: number = 4,
  ) {}

  async setComposite(url: string): Promise<void> {
    this.composite = await loadImage(url);
  }

  draw(buffer: LabelBuffer | null, opacity: number): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.imageSmoothingEnabled = false;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.composite) {
      ctx.drawImage(
        this.composite,
        0,
        0,
        this.composite.width * this.scale,
        this.composite.height * this.scale,
      );
    }
    if (buffer && opacity > 0) {
      const overlay = new ImageData(buffer.width, buffer.height);
      overlay.data.set(overlayImage(buffer, opacity));
      const off = document.createElement("canvas");
      off.width = buffer.width;
      off.height = buffer.height;
      off.getContext("2d")!.putImageData(overlay, 0, 0);
      ctx.drawImage(off, 0, 0, buffer.width * this.scale, buffer.height * this.scale);
    }
  }

  /** Canvas event position -> raster pixel indices. */
  pixelFromEvent(ev: MouseEvent): { x: number; y: number } {
    const rect = this.canvas.getBoundingClientRect();
    return {
      x: Math.floor((ev.clientX - rect.left) / this.scale),
      y: Math.floor((ev.clientY - rect.top) / this.scale),
    };
  }
}

function loadImage(url: string): Promise<HTMLImageElement> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => resolve(img);
    img.onerror = () => reject(new Error(`failed to load ${url}`));
    img.src = url;
  });
}
