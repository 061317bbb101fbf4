// Thin typed client for the control API. Every UI action maps to
// exactly one of these calls; the UI holds no other state source.

import type { FileRow, JobStatus, ServiceInfo } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: Record<string, unknown>,
  ) {
    super(`HTTP ${status}: ${JSON.stringify(body)}`);
  }

  get code(): string {
    return typeof this.body.error === "string" ? this.body.error : `HTTP_${this.status}`;
  }

  get authUrl(): string | null {
    return typeof this.body.auth_url === "string" ? this.body.auth_url : null;
  }
}

export interface ControlApi {
  listServices(): Promise<ServiceInfo[]>;
  listFiles(serviceId: string): Promise<FileRow[]>;
  submitAuthCode(serviceId: string, code: string): Promise<string>;
  acquire(serviceId: string, fileIds: string[]): Promise<string>;
  jobStatus(jobId: string): Promise<JobStatus>;
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(path, init);
  let body: Record<string, unknown> = {};
  try {
    body = (await resp.json()) as Record<string, unknown>;
  } catch {
    body = {};
  }
  if (!resp.ok) {
    throw new ApiError(resp.status, body);
  }
  return body as T;
}

export class HttpControlApi implements ControlApi {
  constructor(private base: string = "") {}

  listServices(): Promise<ServiceInfo[]> {
    return request<ServiceInfo[]>(`${this.base}/api/services`);
  }

  async listFiles(serviceId: string): Promise<FileRow[]> {
    const body = await request<{ files: FileRow[] }>(
      `${this.base}/api/files?service=${encodeURIComponent(serviceId)}`,
    );
    return body.files;
  }

  async submitAuthCode(serviceId: string, code: string): Promise<string> {
    const body = await request<{ user: string }>(`${this.base}/api/auth`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ service_id: serviceId, code }),
    });
    return body.user;
  }

  async acquire(serviceId: string, fileIds: string[]): Promise<string> {
    const body = await request<{ job_id: string }>(`${this.base}/api/acquire`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ service_id: serviceId, file_ids: fileIds }),
    });
    return body.job_id;
  }

  jobStatus(jobId: string): Promise<JobStatus> {
    return request<JobStatus>(`${this.base}/api/jobs/${encodeURIComponent(jobId)}`);
  }
}
