/** Pure derivation of the drawable grid from the last service view.
 * Columns are time slots (1-indexed in the payload); row 0 is the bottom
 * capacity unit. The active block preview rests conformally on the
 * committed load, exactly as the engine draws it. */

import { EpisodeView } from "./types";

export interface GridViewModel {
  columns: number;
  rows: number;
  /** committed load height per column, clamped to the render height */
  heights: number[];
  /** true numeric load per column (badges when it exceeds the render height) */
  loads: number[];
  /** active block preview cells as [column, row] pairs (0-indexed) */
  preview: [number, number][];
  /** columns the active block may never occupy */
  forbidden: boolean[];
  /** optional threshold line height (drawn by the compare overlay) */
  thresholdRow: number | null;
  budget: number;
  score: number;
  terminal: boolean;
}

export function buildGridViewModel(
  view: EpisodeView,
  thresholdRow: number | null = null,
): GridViewModel {
  const columns = view.T;
  const rows = view.render_rows;
  const loads = view.profile.slice();
  const heights = loads.map((c) => Math.min(c, rows));
  const forbidden = new Array<boolean>(columns).fill(false);
  const preview: [number, number][] = [];
  if (!view.terminal && view.block && view.candidate !== null) {
    const { ar, d, l } = view.block;
    for (let col = 0; col < columns; col += 1) {
      const slot = col + 1;
      forbidden[col] = slot < ar || slot > d;
    }
    for (let slot = view.candidate; slot < view.candidate + l; slot += 1) {
      const col = slot - 1;
      const row = Math.min(loads[col], rows - 1);
      preview.push([col, row]);
    }
  }
  return {
    columns,
    rows,
    heights,
    loads,
    preview,
    forbidden,
    thresholdRow,
    budget: view.budget_left,
    score: view.score,
    terminal: view.terminal,
  };
}
