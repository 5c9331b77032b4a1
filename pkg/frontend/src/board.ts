/** Canvas renderer: one cell per (slot, capacity unit). Deterministic: the
 * same view model always issues the same drawing operations. The context is
 * injected behind a minimal interface so tests can record operations. */

import { GridViewModel } from "./viewModel";

export interface Ctx2d {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

export const Palette = {
  background: "#11131a",
  grid: "#2a2e3b",
  load: "#4f83cc",
  preview: "#7ce08f",
  forbidden: "rgba(200,60,60,0.25)",
  threshold: "#e05555",
  badge: "#f0f0f0",
} as const;

export const CELL = 14;

export function boardSize(vm: GridViewModel): { width: number; height: number } {
  return { width: vm.columns * CELL, height: vm.rows * CELL };
}

/** Row r (0 = bottom) maps to canvas y. */
function cellY(vm: GridViewModel, row: number): number {
  return (vm.rows - 1 - row) * CELL;
}

export function drawBoard(ctx: Ctx2d, vm: GridViewModel): void {
  const { width, height } = boardSize(vm);
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = Palette.background;
  ctx.fillRect(0, 0, width, height);

  ctx.fillStyle = Palette.forbidden;
  for (let col = 0; col < vm.columns; col += 1) {
    if (vm.forbidden[col]) {
      ctx.fillRect(col * CELL, 0, CELL, height);
    }
  }

  ctx.fillStyle = Palette.load;
  for (let col = 0; col < vm.columns; col += 1) {
    for (let row = 0; row < vm.heights[col]; row += 1) {
      ctx.fillRect(col * CELL + 1, cellY(vm, row) + 1, CELL - 2, CELL - 2);
    }
  }

  ctx.fillStyle = Palette.preview;
  for (const [col, row] of vm.preview) {
    ctx.fillRect(col * CELL + 1, cellY(vm, row) + 1, CELL - 2, CELL - 2);
  }

  ctx.strokeStyle = Palette.grid;
  for (let col = 0; col <= vm.columns; col += 1) {
    ctx.beginPath();
    ctx.moveTo(col * CELL, 0);
    ctx.lineTo(col * CELL, height);
    ctx.stroke();
  }
  for (let row = 0; row <= vm.rows; row += 1) {
    ctx.beginPath();
    ctx.moveTo(0, row * CELL);
    ctx.lineTo(width, row * CELL);
    ctx.stroke();
  }

  if (vm.thresholdRow !== null && vm.thresholdRow < vm.rows) {
    ctx.strokeStyle = Palette.threshold;
    ctx.beginPath();
    ctx.moveTo(0, cellY(vm, vm.thresholdRow) );
    ctx.lineTo(width, cellY(vm, vm.thresholdRow));
    ctx.stroke();
  }

  // saturated columns get a numeric badge instead of taller pixels
  ctx.fillStyle = Palette.badge;
  for (let col = 0; col < vm.columns; col += 1) {
    if (vm.loads[col] > vm.rows) {
      ctx.fillText(String(vm.loads[col]), col * CELL + 2, 12);
    }
  }
}
