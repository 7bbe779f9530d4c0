/** Display colors for label overlays, keyed by class name. */

export interface Rgb {
  r: number;
  g: number;
  b: number;
}

const NAMED: Record<string, Rgb> = {
  // pond states
  NoWater: { r: 64, g: 64, b: 64 },
  Inactive: { r: 46, g: 204, b: 113 },
  Transition: { r: 241, g: 196, b: 15 },
  Active: { r: 231, g: 76, b: 60 },
  // change categories
  NoChange: { r: 64, g: 64, b: 64 },
  Decrease: { r: 52, g: 152, b: 219 },
  Increase: { r: 230, g: 126, b: 34 },
  WaterExistAbsence: { r: 155, g: 89, b: 182 },
};

const FALLBACK: Rgb[] = [
  { r: 31, g: 119, b: 180 },
  { r: 255, g: 127, b: 14 },
  { r: 44, g: 160, b: 44 },
  { r: 214, g: 39, b: 40 },
  { r: 148, g: 103, b: 189 },
  { r: 140, g: 86, b: 75 },
];

export function classColor(code: number, name: string): Rgb {
  return NAMED[name] ?? FALLBACK[code % FALLBACK.length];
}

export function cssColor(c: Rgb): string {
  return `rgb(${c.r}, ${c.g}, ${c.b})`;
}
