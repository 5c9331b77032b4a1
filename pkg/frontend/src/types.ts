/** JSON payloads of the episode service. These mirror the server schema;
 * the client never derives scheduling state on its own. */

export type ActionName = "LEFT" | "RIGHT" | "DOWN";

export interface BlockView {
  ev_id: number;
  ar: number;
  d: number;
  l: number;
  feasible_range: [number, number];
}

export interface TraceRecord {
  ev_id: number;
  action: ActionName;
  candidate_after: number;
  reward?: number;
}

export interface FinalMetrics {
  max_min: number;
  rmse: number;
  score: number;
}

export interface CommittedBlock {
  ev_id: number;
  ar: number;
  d: number;
  l: number;
  start: number;
}

export interface EpisodeView {
  session_id: string;
  mode: string;
  T: number;
  slot_minutes: number;
  render_rows: number;
  cap: number | null;
  profile: number[];
  completed: number;
  score: number;
  terminal: boolean;
  block: BlockView | null;
  candidate: number | null;
  budget_left: number;
  reward?: number | null;
  final?: FinalMetrics;
  trace?: TraceRecord[];
  blocks?: CommittedBlock[];
}

export interface CompareRow {
  policy: string;
  max_min?: number;
  rmse?: number;
  peak?: number;
  failed?: boolean;
}

export interface ComparePayload {
  session: {
    policy: string;
    max_min: number;
    rmse: number;
    peak: number;
    score: number;
  };
  rows: CompareRow[];
}

export interface ScenarioInfo {
  id: number;
  name: string;
  n_evs: number;
  T: number;
}
