// Pure state helpers for the three-screen flow. Screen transitions
// are one-directional: SERVICE_SELECT -> TARGET_SELECT (needs a loaded
// manifest) -> RESULTS (needs a job id).

import type { FileRow, JobProgress } from "./types.js";

export type Screen = "SERVICE_SELECT" | "TARGET_SELECT" | "RESULTS";

export interface UiState {
  screen: Screen;
  selectedService: string | null;
  rows: FileRow[];
  checked: Set<string>;
  jobId: string | null;
  lastProgress: JobProgress;
}

export function initialState(): UiState {
  return {
    screen: "SERVICE_SELECT",
    selectedService: null,
    rows: [],
    checked: new Set(),
    jobId: null,
    lastProgress: { items_total: 0, items_done: 0, bytes_done: 0 },
  };
}

export function toTargetSelect(state: UiState, service: string, rows: FileRow[]): UiState {
  return { ...state, screen: "TARGET_SELECT", selectedService: service, rows, checked: new Set() };
}

export function toResults(state: UiState, jobId: string): UiState {
  if (state.screen !== "TARGET_SELECT") {
    throw new Error("RESULTS is only reachable from a loaded manifest");
  }
  return {
    ...state,
    screen: "RESULTS",
    jobId,
    lastProgress: { items_total: 0, items_done: 0, bytes_done: 0 },
  };
}

// The category quick filters mirror the CLI filter taxonomy.
export const QUICK_FILTERS = [
  "all",
  "doc",
  "xls",
  "ppt",
  "text",
  "pdf",
  "officedocs",
  "image",
  "audio",
  "video",
] as const;

const OFFICEDOCS = new Set(["doc", "xls", "ppt"]);

export function quickFilterIds(rows: FileRow[], filter: string): string[] {
  if (filter === "all") {
    return rows.map((r) => r.file_id);
  }
  if (filter === "officedocs") {
    return rows.filter((r) => OFFICEDOCS.has(r.category)).map((r) => r.file_id);
  }
  return rows.filter((r) => r.category === filter).map((r) => r.file_id);
}

export function canDownload(checked: Set<string>): boolean {
  return checked.size > 0;
}

// Progress never regresses on screen even if poll responses arrive
// out of order: merge component-wise maxima.
export function monotonicProgress(prev: JobProgress, next: JobProgress): JobProgress {
  return {
    items_total: Math.max(prev.items_total, next.items_total),
    items_done: Math.max(prev.items_done, next.items_done),
    bytes_done: Math.max(prev.bytes_done, next.bytes_done),
  };
}

export function progressPercent(progress: JobProgress): number {
  if (progress.items_total <= 0) {
    return 0;
  }
  return Math.min(100, Math.round((100 * progress.items_done) / progress.items_total));
}
