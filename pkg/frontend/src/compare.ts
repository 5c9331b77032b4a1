/** Comparison panel: rows mirror the compare endpoint payload value-for-
 * value; the session's own row is highlighted. No reformatting beyond
 * string conversion happens here, so displayed numbers are exactly the
 * payload numbers. */

import { ComparePayload } from "./types";

export interface PanelRow {
  policy: string;
  maxMin: number | null;
  rmse: number | null;
  score: number | null;
  highlight: boolean;
  failed: boolean;
}

export function buildComparePanel(payload: ComparePayload): PanelRow[] {
  const rows: PanelRow[] = [
    {
      policy: payload.session.policy,
      maxMin: payload.session.max_min,
      rmse: payload.session.rmse,
      score: payload.session.score,
      highlight: true,
      failed: false,
    },
  ];
  for (const row of payload.rows) {
    rows.push({
      policy: row.policy,
      maxMin: row.failed ? null : row.max_min ?? null,
      rmse: row.failed ? null : row.rmse ?? null,
      score: null,
      highlight: false,
      failed: row.failed ?? false,
    });
  }
  return rows;
}

export function renderPanelText(rows: PanelRow[]): string[] {
  return rows.map((row) => {
    const tag = row.highlight ? ">" : " ";
    if (row.failed) {
      return `${tag} ${row.policy}: failed`;
    }
    const score = row.score === null ? "" : ` score=${String(row.score)}`;
    return `${tag} ${row.policy}: max-min=${String(row.maxMin)} rmse=${String(row.rmse)}${score}`;
  });
}
