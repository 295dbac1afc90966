import { afterEach, describe, expect, it, vi } from 'vitest';

import { ApiClient, ApiRequestError, pollJob } from '../src/api.js';

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
  vi.useRealTimers();
});

describe('ApiClient', () => {
  it('posts preview with the class keyword the service expects', async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ labels: [], silhouette: null }));
    vi.stubGlobal('fetch', fetchMock);
    await new ApiClient('http://host').preview(2, 3, 7);
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe('http://host/api/preview');
    expect(JSON.parse(init.body)).toEqual({ class: 2, k: 3, seed: 7 });
  });

  it('encodes the class filter as a query parameter', async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ points: [], kl_final: 0 }));
    vi.stubGlobal('fetch', fetchMock);
    await new ApiClient().embedding(3);
    expect(fetchMock.mock.calls[0][0]).toBe('/api/embedding?class=3');
  });

  it('surfaces service error codes', async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValue(jsonResponse({ code: 'JobInProgress', message: 'busy' }, 409));
    vi.stubGlobal('fetch', fetchMock);
    const err = await new ApiClient().startTrain({ '2': 2 }).catch((e) => e);
    expect(err).toBeInstanceOf(ApiRequestError);
    expect(err.status).toBe(409);
    expect(err.code).toBe('JobInProgress');
  });
});

describe('pollJob', () => {
  it('resolves when the job reaches done', async () => {
    vi.useFakeTimers();
    const statuses = ['queued', 'running', 'done'];
    let call = 0;
    const fetchMock = vi
      .fn()
      .mockImplementation(() =>
        Promise.resolve(
          jsonResponse({ job_id: 'job-1', kind: 'train', status: statuses[call++] }),
        ),
      );
    vi.stubGlobal('fetch', fetchMock);
    const seen: string[] = [];
    const promise = pollJob(new ApiClient(), 'job-1', 10, (info) => seen.push(info.status));
    await vi.advanceTimersByTimeAsync(35);
    const info = await promise;
    expect(info.status).toBe('done');
    expect(seen).toEqual(['queued', 'running', 'done']);
  });

  it('rejects with the server error message on failure', async () => {
    vi.useFakeTimers();
    const fetchMock = vi
      .fn()
      .mockResolvedValue(
        jsonResponse({ job_id: 'job-2', kind: 'train', status: 'failed', error: 'boom' }),
      );
    vi.stubGlobal('fetch', fetchMock);
    const promise = pollJob(new ApiClient(), 'job-2', 10).catch((e) => e);
    await vi.advanceTimersByTimeAsync(15);
    expect((await promise).message).toBe('boom');
  });
});
