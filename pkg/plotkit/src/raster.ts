/**
 * Tiny raster canvas: flat RGB buffer plus the primitives the figures
 * need (lines, rectangles, markers, bitmap text, dashed segments).
 */

import { GLYPH_HEIGHT, GLYPH_WIDTH, glyphFor } from "./font.js";
import { encodePng } from "./png.js";

export type Color = readonly [number, number, number];

export const BLACK: Color = [0, 0, 0];
export const WHITE: Color = [255, 255, 255];
export const GRAY: Color = [150, 150, 150];
export const LIGHT_GRAY: Color = [220, 220, 220];

export const PALETTE: Color[] = [
  [31, 119, 180],
  [214, 39, 40],
  [44, 160, 44],
  [255, 127, 14],
  [148, 103, 189],
  [140, 86, 75],
  [23, 190, 207],
  [227, 119, 194],
];

export class Canvas {
  readonly width: number;
  readonly height: number;
  readonly pixels: Uint8Array;

  constructor(width: number, height: number, background: Color = WHITE) {
    this.width = width;
    this.height = height;
    this.pixels = new Uint8Array(width * height * 3);
    for (let i = 0; i < width * height; i++) {
      this.pixels[3 * i] = background[0];
      this.pixels[3 * i + 1] = background[1];
      this.pixels[3 * i + 2] = background[2];
    }
  }

  set(x: number, y: number, color: Color): void {
    const xi = Math.round(x);
    const yi = Math.round(y);
    if (xi < 0 || yi < 0 || xi >= this.width || yi >= this.height) {
      return;
    }
    const offset = 3 * (yi * this.width + xi);
    this.pixels[offset] = color[0];
    this.pixels[offset + 1] = color[1];
    this.pixels[offset + 2] = color[2];
  }

  fillRect(x0: number, y0: number, w: number, h: number, color: Color): void {
    for (let y = y0; y < y0 + h; y++) {
      for (let x = x0; x < x0 + w; x++) {
        this.set(x, y, color);
      }
    }
  }

  line(x0: number, y0: number, x1: number, y1: number, color: Color, thick = 1): void {
    let xa = Math.round(x0);
    let ya = Math.round(y0);
    const xb = Math.round(x1);
    const yb = Math.round(y1);
    const dx = Math.abs(xb - xa);
    const dy = -Math.abs(yb - ya);
    const sx = xa < xb ? 1 : -1;
    const sy = ya < yb ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      this.dot(xa, ya, color, thick);
      if (xa === xb && ya === yb) {
        break;
      }
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        xa += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ya += sy;
      }
    }
  }

  dashedLine(x0: number, y0: number, x1: number, y1: number, color: Color, dash = 5): void {
    const length = Math.hypot(x1 - x0, y1 - y0);
    const segments = Math.max(1, Math.floor(length / dash));
    for (let i = 0; i < segments; i += 2) {
      const ta = i / segments;
      const tb = Math.min(1, (i + 1) / segments);
      this.line(
        x0 + (x1 - x0) * ta,
        y0 + (y1 - y0) * ta,
        x0 + (x1 - x0) * tb,
        y0 + (y1 - y0) * tb,
        color,
      );
    }
  }

  dot(x: number, y: number, color: Color, size = 1): void {
    if (size <= 1) {
      this.set(x, y, color);
      return;
    }
    const r = Math.floor(size / 2);
    for (let dy = -r; dy <= r; dy++) {
      for (let dx = -r; dx <= r; dx++) {
        this.set(x + dx, y + dy, color);
      }
    }
  }

  marker(x: number, y: number, color: Color): void {
    this.dot(x, y, color, 5);
  }

  /** Draw text with its top-left corner at (x, y); returns the width. */
  text(x: number, y: number, message: string, color: Color, scale = 1): number {
    let cx = Math.round(x);
    for (const ch of message) {
      const rows = glyphFor(ch);
      for (let ry = 0; ry < GLYPH_HEIGHT; ry++) {
        for (let rx = 0; rx < GLYPH_WIDTH; rx++) {
          if ((rows[ry] >> (GLYPH_WIDTH - 1 - rx)) & 1) {
            for (let sy = 0; sy < scale; sy++) {
              for (let sx = 0; sx < scale; sx++) {
                this.set(cx + rx * scale + sx, y + ry * scale + sy, color);
              }
            }
          }
        }
      }
      cx += (GLYPH_WIDTH + 1) * scale;
    }
    return cx - Math.round(x);
  }

  textWidth(message: string, scale = 1): number {
    return message.length * (GLYPH_WIDTH + 1) * scale;
  }

  /** Text horizontally centred on x. */
  textCentered(x: number, y: number, message: string, color: Color, scale = 1): void {
    this.text(x - this.textWidth(message, scale) / 2, y, message, color, scale);
  }

  /** Text rendered bottom-to-top (for y-axis titles). */
  textVertical(x: number, y: number, message: string, color: Color, scale = 1): void {
    let cy = Math.round(y);
    for (const ch of message) {
      const rows = glyphFor(ch);
      for (let ry = 0; ry < GLYPH_HEIGHT; ry++) {
        for (let rx = 0; rx < GLYPH_WIDTH; rx++) {
          if ((rows[ry] >> (GLYPH_WIDTH - 1 - rx)) & 1) {
            // rotate 90 degrees counterclockwise
            for (let sy = 0; sy < scale; sy++) {
              for (let sx = 0; sx < scale; sx++) {
                this.set(x + ry * scale + sy, cy - rx * scale - sx, color);
              }
            }
          }
        }
      }
      cy -= (GLYPH_WIDTH + 1) * scale;
    }
  }

  toPng(): Buffer {
    return encodePng(this.width, this.height, this.pixels);
  }
}
