/** Spectator replay: step through a recorded trace, producing the exact
 * board state after every step. The reconstruction mirrors the engine's
 * semantics record-for-record: movement records only move the candidate,
 * commit records (the ones carrying a reward) add the block at
 * candidate_after and advance to the next block. */

import { EpisodeView, TraceRecord } from "./types";

export interface ReplayFrame {
  index: number;
  profile: number[];
  candidate: number | null;
  activeEvId: number | null;
  blockLength: number | null;
  score: number;
  reward: number | null;
  terminal: boolean;
}

export class TraceReplay {
  private frames: ReplayFrame[] = [];

  constructor(
    T: number,
    trace: TraceRecord[],
    blocks: Map<number, { ar: number; l: number }>,
  ) {
    const profile = new Array<number>(T).fill(0);
    let score = 0;
    trace.forEach((record, index) => {
      const block = blocks.get(record.ev_id);
      if (!block) {
        throw new Error(`trace references unknown EV ${record.ev_id}`);
      }
      let reward: number | null = null;
      let candidate: number | null = null;
      if (record.reward !== undefined && record.reward !== null) {
        // commit: the block lands at candidate_after
        for (
          let slot = record.candidate_after;
          slot < record.candidate_after + block.l;
          slot += 1
        ) {
          profile[slot - 1] += 1;
        }
        score += record.reward;
        reward = record.reward;
      } else {
        candidate = record.candidate_after;
      }
      this.frames.push({
        index,
        profile: profile.slice(),
        candidate,
        activeEvId: reward === null ? record.ev_id : null,
        blockLength: reward === null ? block.l : null,
        score,
        reward,
        terminal: false,
      });
    });
    if (this.frames.length > 0) {
      this.frames[this.frames.length - 1].terminal = true;
    }
  }

  get length(): number {
    return this.frames.length;
  }

  frame(index: number): ReplayFrame {
    if (index < 0 || index >= this.frames.length) {
      throw new Error(`frame ${index} out of range 0..${this.frames.length - 1}`);
    }
    return this.frames[index];
  }

  finalFrame(): ReplayFrame {
    return this.frame(this.frames.length - 1);
  }

  finalSchedule(trace: TraceRecord[]): Map<number, number> {
    const starts = new Map<number, number>();
    for (const record of trace) {
      if (record.reward !== undefined && record.reward !== null) {
        starts.set(record.ev_id, record.candidate_after);
      }
    }
    return starts;
  }
}

/** Rebuild a replay from a terminal view: the service reveals every
 * committed block's geometry once the episode is over. */
export function replayFromView(view: EpisodeView): TraceReplay {
  if (!view.trace || !view.blocks) {
    throw new Error("view carries no trace to replay");
  }
  const blocks = new Map<number, { ar: number; l: number }>();
  for (const b of view.blocks) {
    blocks.set(b.ev_id, { ar: b.ar, l: b.l });
  }
  return new TraceReplay(view.T, view.trace, blocks);
}
