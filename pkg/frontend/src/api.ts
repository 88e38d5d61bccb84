// Thin typed client over the /v1 endpoints, plus long-job polling with
// backoff. All errors surface as ApiError with the response detail so views
// can map them onto form fields.

import type {
  BoundariesResponse,
  DecideRequest,
  DecideResponse,
  JobRecord,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  detail: unknown;

  constructor(status: number, detail: unknown) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.status = status;
    this.detail = detail;
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiError(resp.status, (body as { detail?: unknown }).detail ?? body);
  }
  return body as T;
}

export function decide(req: DecideRequest): Promise<DecideResponse> {
  return request<DecideResponse>("/v1/decide", {
    method: "POST",
    body: JSON.stringify(req),
  });
}

export function boundaries(
  lambda: number,
  gamma: number,
  schedule: number[],
  phi: number,
): Promise<BoundariesResponse> {
  const params = new URLSearchParams({
    lambda: String(lambda),
    gamma: String(gamma),
    schedule: schedule.join(","),
    phi: String(phi),
  });
  return request<BoundariesResponse>(`/v1/boundaries?${params}`);
}

export function submitCalibrate(config: unknown): Promise<JobRecord> {
  return request<JobRecord>("/v1/calibrate", {
    method: "POST",
    body: JSON.stringify({ config }),
  });
}

export function submitSimulate(
  config: unknown,
  methods: string[],
  nTrials: number,
): Promise<JobRecord> {
  return request<JobRecord>("/v1/simulate", {
    method: "POST",
    body: JSON.stringify({ config, methods, n_trials: nTrials }),
  });
}

export function getJob(jobId: string): Promise<JobRecord> {
  return request<JobRecord>(`/v1/jobs/${jobId}`);
}

export type PollOptions = {
  initialMs?: number;
  maxMs?: number;
  timeoutMs?: number;
  onProgress?: (record: JobRecord) => void;
  sleep?: (ms: number) => Promise<void>;
};

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

// Poll until the job reaches a terminal state, with exponential backoff so
// weeks-apart users hammering refresh don't hammer the service.
export async function pollJob(jobId: string, options: PollOptions = {}): Promise<JobRecord> {
  const initialMs = options.initialMs ?? 250;
  const maxMs = options.maxMs ?? 4000;
  const timeoutMs = options.timeoutMs ?? 10 * 60 * 1000;
  const sleep = options.sleep ?? defaultSleep;
  const started = Date.now();
  let wait = initialMs;
  for (;;) {
    const record = await getJob(jobId);
    options.onProgress?.(record);
    if (record.status === "done") return record;
    if (record.status === "failed") {
      throw new ApiError(500, record.error ?? "job failed");
    }
    if (Date.now() - started > timeoutMs) {
      throw new ApiError(408, `job ${jobId} timed out after ${timeoutMs}ms`);
    }
    await sleep(wait);
    wait = Math.min(wait * 2, maxMs);
  }
}
