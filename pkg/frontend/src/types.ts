// Shapes of the control-api JSON payloads the console consumes.

export interface ServiceInfo {
  service_id: string;
  display_name: string;
  dialect: string;
}

export interface FileRow {
  file_id: string;
  remote_path: string;
  name: string;
  revisions: number;
  hash: string;
  category: string;
  cloud_native: boolean;
  size: number;
}

export interface JobProgress {
  items_total: number;
  items_done: number;
  bytes_done: number;
}

export type JobState = "PENDING" | "RUNNING" | "DONE" | "FAILED";

export interface RecordRow {
  time_utc: string;
  application: string;
  user: string;
  file_id: string;
  remote_path: string;
  revision: string;
  local_path: string;
  hash: string;
}

export interface FailureRow {
  file_id: string;
  remote_path: string;
  error_code: string;
  message: string;
}

export interface JobStatus {
  job_id: string;
  state: JobState;
  progress: JobProgress;
  summary?: string;
  records?: RecordRow[];
  failures?: FailureRow[];
  error?: string;
}
