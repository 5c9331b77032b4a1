/** Keyboard-first play loop. One action in flight at a time: keys pressed
 * while a request is pending are dropped, never queued or rendered
 * optimistically (the board only changes on a service response). */

import { EpisodeApi } from "./api";
import { ActionName, EpisodeView } from "./types";

export const KeyBindings: Record<string, ActionName> = {
  ArrowLeft: "LEFT",
  ArrowRight: "RIGHT",
  ArrowDown: "DOWN",
  KeyA: "LEFT",
  KeyD: "RIGHT",
  KeyS: "DOWN",
  Space: "DOWN",
};

export function actionForKey(code: string): ActionName | null {
  return KeyBindings[code] ?? null;
}

export class PlayLoop {
  private inFlight = false;
  private pendingLog: ActionName[] = [];

  constructor(
    private readonly api: EpisodeApi,
    private readonly sessionId: string,
    private readonly onView: (view: EpisodeView) => void,
    private readonly maxRetries = 2,
  ) {}

  /** The action log kept client-side so a dropped connection can resume. */
  get actionLog(): readonly ActionName[] {
    return this.pendingLog;
  }

  get busy(): boolean {
    return this.inFlight;
  }

  async press(code: string): Promise<EpisodeView | null> {
    const action = actionForKey(code);
    if (action === null || this.inFlight) {
      return null;
    }
    return this.send(action);
  }

  async send(action: ActionName): Promise<EpisodeView> {
    this.inFlight = true;
    try {
      let lastError: unknown = null;
      for (let attempt = 0; attempt <= this.maxRetries; attempt += 1) {
        try {
          const view = await this.api.applyAction(this.sessionId, action);
          this.pendingLog.push(action);
          this.onView(view);
          return view;
        } catch (error) {
          lastError = error;
        }
      }
      throw lastError;
    } finally {
      this.inFlight = false;
    }
  }
}
