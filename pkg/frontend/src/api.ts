/** Typed client for the episode service. A transport is injected so tests
 * can replay recorded request/response pairs without a server. */

import { ActionName, ComparePayload, EpisodeView, ScenarioInfo } from "./types";

export interface Transport {
  get(path: string): Promise<unknown>;
  post(path: string, body: unknown): Promise<unknown>;
}

export function fetchTransport(baseUrl: string): Transport {
  const request = async (path: string, init?: RequestInit): Promise<unknown> => {
    const response = await fetch(baseUrl + path, init);
    if (!response.ok) {
      const detail = await response.text();
      throw new Error(`${response.status} on ${path}: ${detail}`);
    }
    return response.json();
  };
  return {
    get: (path) => request(path),
    post: (path, body) =>
      request(path, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      }),
  };
}

export class EpisodeApi {
  constructor(private readonly transport: Transport) {}

  scenarios(): Promise<ScenarioInfo[]> {
    return this.transport.get("/scenarios") as Promise<ScenarioInfo[]>;
  }

  createEpisode(body: {
    scenario?: number;
    instance?: unknown;
    seed?: number;
    mode?: string;
  }): Promise<EpisodeView> {
    return this.transport.post("/episodes", body) as Promise<EpisodeView>;
  }

  getEpisode(sessionId: string): Promise<EpisodeView> {
    return this.transport.get(`/episodes/${sessionId}`) as Promise<EpisodeView>;
  }

  applyAction(sessionId: string, action: ActionName): Promise<EpisodeView> {
    return this.transport.post(`/episodes/${sessionId}/actions`, {
      action,
    }) as Promise<EpisodeView>;
  }

  compare(sessionId: string): Promise<ComparePayload> {
    return this.transport.get(`/episodes/${sessionId}/compare`) as Promise<ComparePayload>;
  }
}
