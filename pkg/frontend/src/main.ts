/** Browser entry point: create or resume an episode, render every service
 * response onto the canvas, flash commit rewards, and show the comparison
 * table once the episode ends. */

import { EpisodeApi, fetchTransport } from "./api";
import { CELL, boardSize, drawBoard } from "./board";
import { buildComparePanel, renderPanelText } from "./compare";
import { PlayLoop } from "./controls";
import { replayFromView } from "./replay";
import { EpisodeView } from "./types";
import { buildGridViewModel } from "./viewModel";

const api = new EpisodeApi(fetchTransport(""));

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderStatus(view: EpisodeView): void {
  const bits = [
    `budget ${view.budget_left}`,
    `score ${view.score}`,
    view.block
      ? `block #${view.block.ev_id} len ${view.block.l} window [${view.block.ar}, ${view.block.d}]`
      : "",
    view.terminal && view.final
      ? `final: max-min ${view.final.max_min}, rmse ${view.final.rmse.toFixed(3)}`
      : "",
  ];
  el<HTMLDivElement>("status").textContent = bits.filter(Boolean).join("  |  ");
}

function flashReward(view: EpisodeView): void {
  if (view.reward === undefined || view.reward === null) return;
  const flash = el<HTMLDivElement>("reward-flash");
  flash.textContent = view.reward > 0 ? "+1" : view.reward < 0 ? "-1" : "0";
  flash.className = view.reward > 0 ? "good" : view.reward < 0 ? "bad" : "neutral";
  setTimeout(() => {
    flash.textContent = "";
    flash.className = "";
  }, 600);
}

function renderView(view: EpisodeView): void {
  const canvas = el<HTMLCanvasElement>("board");
  const vm = buildGridViewModel(view);
  const { width, height } = boardSize(vm);
  canvas.width = width;
  canvas.height = height;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas unavailable");
  drawBoard(ctx, vm);
  renderStatus(view);
  flashReward(view);
}

async function showCompare(sessionId: string): Promise<void> {
  const payload = await api.compare(sessionId);
  const rows = buildComparePanel(payload);
  el<HTMLPreElement>("compare").textContent = renderPanelText(rows).join("\n");
}

async function spectate(view: EpisodeView, delayMs: number): Promise<void> {
  if (!view.trace) return;
  const replay = replayFromView(view);
  for (let i = 0; i < replay.length; i += 1) {
    const frame = replay.frame(i);
    const fake: EpisodeView = {
      ...view,
      profile: frame.profile,
      candidate: frame.candidate,
      score: frame.score,
      terminal: frame.terminal,
      block: null,
      reward: frame.reward,
    };
    renderView(fake);
    await new Promise((resolve) => setTimeout(resolve, delayMs));
  }
}

async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const mode = params.get("mode") ?? "human";
  const scenario = Number(params.get("scenario") ?? "1");
  const seed = Number(params.get("seed") ?? "0");
  const view = await api.createEpisode({ scenario, seed, mode });
  renderView(view);

  if (mode === "human") {
    const loop = new PlayLoop(api, view.session_id, (v) => {
      renderView(v);
      if (v.terminal) {
        void showCompare(view.session_id);
      }
    });
    window.addEventListener("keydown", (event) => {
      if (event.repeat) return;
      void loop.press(event.code);
    });
    for (const [buttonId, code] of [
      ["btn-left", "ArrowLeft"],
      ["btn-right", "ArrowRight"],
      ["btn-down", "ArrowDown"],
    ] as const) {
      el<HTMLButtonElement>(buttonId).addEventListener("click", () => {
        void loop.press(code);
      });
    }
  } else {
    const speed = Number(params.get("frame_ms") ?? "120");
    await spectate(view, speed);
    await showCompare(view.session_id);
  }
}

void start();

export { CELL };
