/**
 * Thin fetch client for the planning service. Long-running generate calls may
 * come back as 202 plus a poll URL; pollGenerate follows them to completion.
 */

import type { CardRankingJson } from "./board.js";
import type { PlanView } from "./timeline.js";

export interface IterationView {
  index: number;
  plans: PlanView[];
  curated: string[] | null;
  rankings: Record<string, CardRankingJson>;
  scores: Record<string, Record<string, number>>;
  fits: Record<string, { total_error: number; fitted: Record<string, number> }>;
  comments: string[];
  warnings: string[];
  pending_ranking: boolean;
}

export interface SessionView {
  session_id: string;
  status: string;
  accepted: string | null;
  criteria: string[];
  periods: number;
  budgets: Record<string, number[]>;
  objectives: string[];
  iterations: IterationView[];
}

export interface GridCell {
  budget: string;
  objective: string;
  synergy?: boolean;
  required?: string[][];
  forbidden?: string[][];
  min_two_per_building?: boolean;
  precedences?: string[][];
}

export interface ApiError {
  code: string;
  message: string;
  details: unknown[];
}

export class ServiceError extends Error {
  constructor(readonly status: number, readonly body: ApiError) {
    super(`${body.code}: ${body.message}`);
    this.name = "ServiceError";
  }
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export class PlannerClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (response.status >= 400) {
      throw new ServiceError(response.status, payload as ApiError);
    }
    return payload as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  async createSession(
    instance: unknown,
    objectives?: Record<string, unknown>,
  ): Promise<string> {
    const body: Record<string, unknown> = { instance };
    if (objectives) body.objectives = objectives;
    const out = await this.request<{ session_id: string }>("POST", "/sessions", body);
    return out.session_id;
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  /** Run a generation grid, following a 202 job to completion if needed. */
  async pollGenerate(
    sessionId: string,
    grid: GridCell[],
    pollMs = 500,
  ): Promise<IterationView> {
    const response = await fetch(`${this.baseUrl}/sessions/${sessionId}/generate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ grid }),
    });
    let payload = await response.json();
    if (response.status >= 400) throw new ServiceError(response.status, payload);
    if (response.status !== 202) return payload as IterationView;
    const jobPath = (payload as { job: string }).job;
    for (;;) {
      await sleep(pollMs);
      const poll = await fetch(this.baseUrl + jobPath);
      payload = await poll.json();
      if (poll.status >= 400) throw new ServiceError(poll.status, payload);
      if (poll.status !== 202) return payload as IterationView;
    }
  }

  async submitRanking(
    sessionId: string,
    iteration: number,
    rankings: Record<string, CardRankingJson>,
    merges: { lower: string; upper: string; bridge: number; name: string }[] = [],
  ): Promise<Record<string, Record<string, number>>> {
    const out = await this.request<{ scores: Record<string, Record<string, number>> }>(
      "POST",
      `/sessions/${sessionId}/rankings`,
      { iteration, rankings, merges },
    );
    return out.scores;
  }

  async runFits(
    sessionId: string,
    iteration: number,
    requests: Record<string, unknown>[],
  ): Promise<Record<string, { total_error: number; fitted: Record<string, number> }>> {
    const out = await this.request<{ fits: Record<string, never> }>(
      "POST",
      `/sessions/${sessionId}/fits`,
      { iteration, requests },
    );
    return out.fits;
  }

  curate(sessionId: string, iteration: number, plans: string[]): Promise<unknown> {
    return this.request("POST", `/sessions/${sessionId}/curate`, { iteration, plans });
  }

  accept(sessionId: string, plan: string): Promise<SessionView> {
    return this.request("POST", `/sessions/${sessionId}/accept`, { plan });
  }
}
