/** Typed fetch client for the session service. */

import type {
  ApiErrorBody,
  CostsPayload,
  CurvesPayload,
  LabelEdit,
  LabelsPayload,
  RunOutcome,
  SessionStatus,
  StudyResult,
  WhatIfPayload,
} from './types.js';

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.status = status;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const body = await resp.json();
  if (!resp.ok) {
    throw new ApiError(resp.status, body as ApiErrorBody);
  }
  return body as T;
}

export class SnoopyClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}${path}`;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return request<T>(this.url(path), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  listSessions(): Promise<{ sessions: string[] }> {
    return request(this.url('/sessions'));
  }

  createSession(manifest: unknown): Promise<{ session_id: string; status: string }> {
    return this.post('/sessions', manifest);
  }

  status(id: string): Promise<SessionStatus> {
    return request(this.url(`/sessions/${id}`));
  }

  run(id: string): Promise<RunOutcome> {
    return this.post(`/sessions/${id}/run`, {});
  }

  result(id: string): Promise<RunOutcome> {
    return request(this.url(`/sessions/${id}/result`));
  }

  curves(id: string): Promise<CurvesPayload> {
    return request(this.url(`/sessions/${id}/curves`));
  }

  labels(id: string): Promise<LabelsPayload> {
    return request(this.url(`/sessions/${id}/labels`));
  }

  editLabels(id: string, edits: LabelEdit[]): Promise<StudyResult> {
    return this.post(`/sessions/${id}/labels`, { edits });
  }

  whatIf(id: string, cleanFraction: number, assumedBaseBer = 0): Promise<WhatIfPayload> {
    return this.post(`/sessions/${id}/whatif`, {
      clean_fraction: cleanFraction,
      assumed_base_ber: assumedBaseBer,
    });
  }

  costs(id: string): Promise<CostsPayload> {
    return request(this.url(`/sessions/${id}/costs`));
  }
}
