/** Acceptance: a recorded human key sequence replayed through the UI
 * pipeline yields the identical final schedule and score as the engine's
 * own replay of the action log (zero divergence), and auto-play traces
 * reconstruct frame-for-frame. */

import { describe, expect, it } from "vitest";
import fixture from "./fixtures/session.json";

import { EpisodeApi, Transport } from "../src/api";
import { PlayLoop, actionForKey } from "../src/controls";
import { TraceReplay, replayFromView } from "../src/replay";
import { EpisodeView, TraceRecord } from "../src/types";

/** Transport that replays the recorded request/response exchanges. */
function recordedTransport(): Transport {
  let cursor = 0;
  return {
    async get(path: string): Promise<unknown> {
      if (path.endsWith("/compare")) return fixture.compare;
      throw new Error(`unexpected GET ${path}`);
    },
    async post(path: string, body: unknown): Promise<unknown> {
      if (!path.endsWith("/actions")) throw new Error(`unexpected POST ${path}`);
      const exchange = fixture.exchanges[cursor];
      cursor += 1;
      expect((body as { action: string }).action).toBe(exchange.action);
      return exchange.view;
    },
  };
}

describe("thin-client replay", () => {
  it("maps the recorded keys to the recorded actions", () => {
    for (const exchange of fixture.exchanges) {
      expect(actionForKey(exchange.key)).toBe(exchange.action);
    }
  });

  it("reaches the engine's final schedule and score with zero divergence", async () => {
    const api = new EpisodeApi(recordedTransport());
    const rendered: EpisodeView[] = [];
    const loop = new PlayLoop(api, fixture.create_view.session_id, (view) =>
      rendered.push(view),
    );
    for (const key of fixture.keys) {
      await loop.press(key);
    }
    const finalView = rendered[rendered.length - 1];
    expect(finalView.terminal).toBe(true);
    expect(finalView.profile).toEqual(fixture.engine_truth.final_profile);
    expect(finalView.final!.score).toBe(fixture.engine_truth.total_reward);

    // the schedule committed on screen equals the engine's replay
    const starts = new Map<string, number>();
    for (const view of rendered) {
      if (view.blocks) {
        for (const b of view.blocks) {
          starts.set(String(b.ev_id), b.start);
        }
      }
    }
    expect(Object.fromEntries(starts)).toEqual(fixture.engine_truth.final_schedule);
  });

  it("client-side action log preserves the full key sequence", async () => {
    const api = new EpisodeApi(recordedTransport());
    const loop = new PlayLoop(api, "s", () => {});
    for (const key of fixture.keys) {
      await loop.press(key);
    }
    expect(loop.actionLog).toEqual(fixture.keys.map((k: string) => actionForKey(k)));
  });
});

describe("spectator trace replay", () => {
  it("frame count equals trace length", () => {
    const replay = replayFromView(fixture.autoplay_view as unknown as EpisodeView);
    expect(replay.length).toBe(fixture.autoplay_view.trace.length);
  });

  it("final frame matches the service's terminal profile and score", () => {
    const view = fixture.autoplay_view as unknown as EpisodeView;
    const replay = replayFromView(view);
    const last = replay.finalFrame();
    expect(last.profile).toEqual(view.profile);
    expect(last.score).toBe(view.final!.score);
    expect(last.terminal).toBe(true);
  });

  it("intermediate frames accumulate monotonically", () => {
    const view = fixture.autoplay_view as unknown as EpisodeView;
    const replay = replayFromView(view);
    let previousTotal = 0;
    for (let i = 0; i < replay.length; i += 1) {
      const total = replay.frame(i).profile.reduce((a, b) => a + b, 0);
      expect(total).toBeGreaterThanOrEqual(previousTotal);
      previousTotal = total;
    }
  });

  it("rebuilds the heuristic schedule from commit records", () => {
    const view = fixture.autoplay_view as unknown as EpisodeView;
    const replay = replayFromView(view);
    const schedule = replay.finalSchedule(view.trace as TraceRecord[]);
    for (const b of view.blocks!) {
      expect(schedule.get(b.ev_id)).toBe(b.start);
    }
  });

  it("rejects a trace with unknown blocks", () => {
    const bad: TraceRecord[] = [
      { ev_id: 99, action: "DOWN", candidate_after: 1, reward: 0 },
    ];
    expect(() => new TraceReplay(6, bad, new Map())).toThrow(/unknown EV/);
  });
});
