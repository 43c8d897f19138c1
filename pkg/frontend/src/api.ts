import type { ApiErrorBody, Entry, ScenarioResponse, VersionMeta } from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: ApiErrorBody['code'],
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, init);
  } catch (err) {
    throw new ApiError(0, 'BAD_INPUT', `service unreachable: ${String(err)}`);
  }
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    const error = (body ?? {}) as Partial<ApiErrorBody>;
    throw new ApiError(
      response.status,
      error.code ?? 'BAD_INPUT',
      error.message ?? `HTTP ${response.status}`,
    );
  }
  return body as T;
}

export class RegisterApi {
  constructor(readonly baseUrl: string) {}

  versions(): Promise<VersionMeta[]> {
    return request(`${this.baseUrl}/versions`);
  }

  entries(versionId: number): Promise<Entry[]> {
    return request(`${this.baseUrl}/versions/${versionId}/entries`);
  }

  stats(versionId: number): Promise<Record<string, unknown>> {
    return request(`${this.baseUrl}/versions/${versionId}/stats`);
  }

  scenario(tThreat: number): Promise<ScenarioResponse> {
    return request(`${this.baseUrl}/scenario`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ t_threat: tThreat }),
    });
  }

  override(
    versionId: number,
    qerId: string,
    toWave: number,
    actor: string,
    rationale: string,
  ): Promise<{ version_id: number }> {
    return request(`${this.baseUrl}/versions/${versionId}/entries/${encodeURIComponent(qerId)}/override`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ to_wave: toWave, actor, rationale }),
    });
  }
}
