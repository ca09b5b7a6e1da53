// Thin typed client for the gateway's HTTP endpoints.

import type { SceneResponse, SessionStateName, StateResponse } from './types';

export class GatewayError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function expectJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new GatewayError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class GatewayClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.fetchImpl(`${this.baseUrl}${path}`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    }).then((r) => expectJson<T>(r));
  }

  private get<T>(path: string): Promise<T> {
    return this.fetchImpl(`${this.baseUrl}${path}`).then((r) => expectJson<T>(r));
  }

  healthz(): Promise<{ ok: boolean }> {
    return this.get('/healthz');
  }

  createSession(domain: string, items?: Record<string, number>, seed = 0) {
    return this.post<{ session_id: string; state: SessionStateName }>('/sessions', {
      domain,
      seed,
      ...(items ? { items } : {}),
    });
  }

  submitRequest(sessionId: string, text: string) {
    return this.post<{ state: SessionStateName }>(`/sessions/${sessionId}/request`, { text });
  }

  interrupt(sessionId: string, text: string) {
    return this.post<{ queued: boolean; state: SessionStateName }>(
      `/sessions/${sessionId}/interrupt`,
      { text },
    );
  }

  advance(sessionId: string) {
    return this.post<{ state: SessionStateName }>(`/sessions/${sessionId}/advance`);
  }

  runSession(sessionId: string) {
    return this.post<{ state: SessionStateName }>(`/sessions/${sessionId}/run`);
  }

  state(sessionId: string) {
    return this.get<StateResponse>(`/sessions/${sessionId}/state`);
  }

  scene(sessionId: string) {
    return this.get<SceneResponse>(`/sessions/${sessionId}/scene`);
  }
}
