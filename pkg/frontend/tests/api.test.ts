import { describe, expect, it, vi } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

describe('ApiClient', () => {
  it('posts assess payloads to the versioned path', async () => {
    const fetchMock = vi.fn(async (url: string, init?: RequestInit) => {
      expect(url).toBe('/api/v1/assess');
      expect(init?.method).toBe('POST');
      const body = JSON.parse(String(init?.body));
      expect(body).toEqual({ patient_id: 'P000001', task: 'prediction', horizon: 2 });
      return jsonResponse({ report_id: 'r1', schema_version: 1 });
    });
    const client = new ApiClient('', null, fetchMock);
    const report = await client.assess('P000001', 'prediction', 2);
    expect(report.report_id).toBe('r1');
  });

  it('raises typed errors with server error codes', async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ detail: { code: 'unknown_patient' } }, 404));
    const client = new ApiClient('', null, fetchMock);
    await expect(client.assess('PX')).rejects.toMatchObject({ status: 404, code: 'unknown_patient' });
  });

  it('marks transport failures as offline', async () => {
    const fetchMock = vi.fn(async () => {
      throw new TypeError('network down');
    });
    const client = new ApiClient('', null, fetchMock);
    try {
      await client.health();
      expect.unreachable();
    } catch (e) {
      expect(e).toBeInstanceOf(ApiError);
      expect((e as ApiError).status).toBe(0);
      expect((e as ApiError).code).toBe('offline');
    }
  });

  it('sends the bearer token when configured', async () => {
    const fetchMock = vi.fn(async (_url: string, init?: RequestInit) => {
      const headers = init?.headers as Record<string, string>;
      expect(headers['Authorization']).toBe('Bearer sekrit');
      return jsonResponse({ status: 'ok', tasks: [] });
    });
    const client = new ApiClient('', 'sekrit', fetchMock);
    await client.health();
    expect(fetchMock).toHaveBeenCalledOnce();
  });

  it('feedback carries direction and text', async () => {
    const fetchMock = vi.fn(async (_url: string, init?: RequestInit) => {
      const body = JSON.parse(String(init?.body));
      expect(body.suggested_direction).toBe('higher');
      return jsonResponse({ schema_version: 1, status: 'accepted', notebook_version: 1 });
    });
    const client = new ApiClient('', null, fetchMock);
    const resp = await client.feedback('case-1', 'diabetes raises risk', 'higher');
    expect(resp.status).toBe('accepted');
    expect(resp.notebook_version).toBe(1);
  });
});
