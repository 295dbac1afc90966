/** Thin typed client for the tuning service endpoints. */

import type {
  EmbeddingPayload,
  JobInfo,
  PreviewResult,
  Summary,
  TrainReport,
} from './types.js';

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<ApiRequestError> {
  let code = 'HttpError';
  let message = `${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body === 'object') {
      code = body.code ?? code;
      message = body.message ?? message;
    }
  } catch {
    /* non-JSON error body; keep defaults */
  }
  return new ApiRequestError(resp.status, code, message);
}

export class ApiClient {
  constructor(private baseUrl: string = '') {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    if (!resp.ok) throw await parseError(resp);
    return resp.json() as Promise<T>;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw await parseError(resp);
    return resp.json() as Promise<T>;
  }

  summary(): Promise<Summary> {
    return this.get('/api/summary');
  }

  startEmbed(params: { perplexity?: number; iters?: number; seed?: number } = {}): Promise<{
    job_id: string;
  }> {
    return this.post('/api/embed', params);
  }

  embedding(classFilter?: number): Promise<EmbeddingPayload> {
    const query = classFilter === undefined ? '' : `?class=${classFilter}`;
    return this.get(`/api/embedding${query}`);
  }

  preview(classIndex: number, k: number, seed = 0): Promise<PreviewResult> {
    return this.post('/api/preview', { class: classIndex, k, seed });
  }

  startTrain(
    K: Record<string, number>,
    hyper: Record<string, number> = {},
  ): Promise<{ job_id: string }> {
    return this.post('/api/train', { K, hyper });
  }

  jobStatus(jobId: string): Promise<JobInfo> {
    return this.get(`/api/jobs/${jobId}`);
  }

  report(jobId: string): Promise<TrainReport> {
    return this.get(`/api/report/${jobId}`);
  }
}

/**
 * Poll a job until it reaches a terminal state. Resolves with the final
 * status record for done jobs, rejects for failed ones.
 */
export function pollJob(
  client: ApiClient,
  jobId: string,
  intervalMs = 1000,
  onTick?: (info: JobInfo) => void,
): Promise<JobInfo> {
  return new Promise((resolve, reject) => {
    const timer = setInterval(async () => {
      let info: JobInfo;
      try {
        info = await client.jobStatus(jobId);
      } catch (err) {
        clearInterval(timer);
        reject(err);
        return;
      }
      onTick?.(info);
      if (info.status === 'done') {
        clearInterval(timer);
        resolve(info);
      } else if (info.status === 'failed') {
        clearInterval(timer);
        reject(new Error(info.error ?? 'job failed'));
      }
    }, intervalMs);
  });
}
