import type { ChatResponse, FeedbackResponse, FinalReport, PatientSummary } from './types.js';

export class ApiError extends Error {
  status: number;
  code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private base: string;
  private token: string | null;
  private fetchImpl: FetchLike;

  constructor(base = '', token: string | null = null, fetchImpl: FetchLike = fetch.bind(globalThis)) {
    this.base = base.replace(/\/$/, '');
    this.token = token;
    this.fetchImpl = fetchImpl;
  }

  private headers(): Record<string, string> {
    const h: Record<string, string> = { 'Content-Type': 'application/json' };
    if (this.token) h['Authorization'] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchImpl(`${this.base}/api/v1${path}`, { ...init, headers: this.headers() });
    } catch (e) {
      throw new ApiError(0, 'offline', `transport failure: ${String(e)}`);
    }
    let body: unknown = null;
    try {
      body = await resp.json();
    } catch {
      body = null;
    }
    if (!resp.ok) {
      const detail = (body as { detail?: { code?: string; message?: string } } | null)?.detail;
      throw new ApiError(resp.status, detail?.code ?? 'error', detail?.message ?? `HTTP ${resp.status}`);
    }
    return body as T;
  }

  health(): Promise<{ status: string; tasks: string[] }> {
    return this.request('/health');
  }

  patients(): Promise<{ patients: PatientSummary[] }> {
    return this.request('/patients');
  }

  assess(patientId: string, task = 'prediction', horizon = 3): Promise<FinalReport> {
    return this.request('/assess', {
      method: 'POST',
      body: JSON.stringify({ patient_id: patientId, task, horizon }),
    });
  }

  feedback(caseRef: string, freeText: string, direction: 'higher' | 'lower' | null): Promise<FeedbackResponse> {
    return this.request('/feedback', {
      method: 'POST',
      body: JSON.stringify({ case_ref: caseRef, free_text: freeText, suggested_direction: direction }),
    });
  }

  chat(session: string, message: string): Promise<ChatResponse> {
    return this.request('/chat', {
      method: 'POST',
      body: JSON.stringify({ session, message }),
    });
  }

  notebook(): Promise<{ version: number; entries: unknown[] }> {
    return this.request('/notebook');
  }
}
