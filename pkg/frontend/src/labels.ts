/** Editable label raster with flood-fill relabeling and undo history. */

import { LabelPayload, decodeBase64 } from "./api.js";

const UNDO_DEPTH = 32;

export class LabelBuffer {
  readonly width: number;
  readonly height: number;
  readonly classes: Map<number, string>;
  readonly nodata: number;
  revision: number;
  values: Uint8Array;
  private undoStack: Uint8Array[] = [];

  constructor(payload: LabelPayload) {
    this.width = payload.width;
    this.height = payload.height;
    this.nodata = payload.nodata;
    this.revision = payload.revision;
    this.classes = new Map(
      Object.entries(payload.classes).map(([code, name]) => [Number(code), name]),
    );
    this.values = decodeBase64(payload.data);
    if (this.values.length !== this.width * this.height) {
      throw new Error(
        `label payload holds ${this.values.length} bytes, expected ${this.width * this.height}`,
      );
    }
  }

  valueAt(x: number, y: number): number {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) {
      throw new Error(`(${x}, ${y}) outside ${this.width}x${this.height}`);
    }
    return this.values[y * this.width + x];
  }

  className(code: number): string {
    if (code === this.nodata) return "nodata";
    return this.classes.get(code) ?? `class ${code}`;
  }

  classCodes(): number[] {
    return [...this.classes.keys()].sort((a, b) => a - b);
  }

  private assertEditable(newClass: number): void {
    if (!this.classes.has(newClass)) {
      throw new Error(`class ${newClass} is not in the layer's class set`);
    }
  }

  private snapshot(): void {
    this.undoStack.push(this.values.slice());
    if (this.undoStack.length > UNDO_DEPTH) this.undoStack.shift();
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  /**
   * Relabel the 4-connected component of the clicked pixel's current
   * class.  Clicking nodata, or a pixel already in the target class,
   * is a no-op.  Returns the number of pixels changed.
   */
  floodFill(x: number, y: number, newClass: number): number {
    this.assertEditable(newClass);
    const source = this.valueAt(x, y);
    if (source === this.nodata || source === newClass) return 0;
    this.snapshot();
    const { width, values } = this;
    const stack: number[] = [y * width + x];
    let changed = 0;
    while (stack.length > 0) {
      const idx = stack.pop()!;
      if (values[idx] !== source) continue;
      values[idx] = newClass;
      changed++;
      const px = idx % width;
      if (px > 0) stack.push(idx - 1);
      if (px + 1 < width) stack.push(idx + 1);
      if (idx >= width) stack.push(idx - width);
      if (idx + width < values.length) stack.push(idx + width);
    }
    return changed;
  }

  /** Single-pixel brush (secondary tool); nodata stays untouchable. */
  paint(x: number, y: number, newClass: number): number {
    this.assertEditable(newClass);
    const idx = y * this.width + x;
    const current = this.valueAt(x, y);
    if (current === this.nodata || current === newClass) return 0;
    this.snapshot();
    this.values[idx] = newClass;
    return 1;
  }

  /** Restore the previous buffer; returns false when nothing to undo. */
  undo(): boolean {
    const prev = this.undoStack.pop();
    if (!prev) return false;
    this.values = prev;
    return true;
  }
}
