// The investigator console: choose a service, tick the targets,
// download, watch the results come in. Wholesale acquisition stays a
// three-click path (service -> select all -> download).

import { ApiError, type ControlApi } from "./api.js";
import {
  QUICK_FILTERS,
  type UiState,
  canDownload,
  initialState,
  monotonicProgress,
  progressPercent,
  quickFilterIds,
  toResults,
  toTargetSelect,
} from "./state.js";
import type { FailureRow, JobStatus, RecordRow, ServiceInfo } from "./types.js";

export class App {
  state: UiState = initialState();
  private services: ServiceInfo[] = [];
  private pollTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private root: HTMLElement,
    private api: ControlApi,
    private pollIntervalMs = 500,
  ) {}

  async start(): Promise<void> {
    try {
      this.services = await this.api.listServices();
    } catch (err) {
      this.renderError(`cannot reach the control API: ${String(err)}`, () => this.start());
      return;
    }
    this.renderServiceSelect();
  }

  stop(): void {
    if (this.pollTimer !== null) {
      clearTimeout(this.pollTimer);
      this.pollTimer = null;
    }
  }

  // -- screen 1: service selection ------------------------------------

  private renderServiceSelect(): void {
    this.state = initialState();
    const box = this.freshScreen("screen-service-select");
    box.appendChild(el("h1", {}, "Acquire a cloud drive"));
    box.appendChild(el("p", {}, "Choose the target service to begin content discovery."));
    const list = el("div", { id: "service-list" });
    for (const svc of this.services) {
      const btn = el(
        "button",
        { "data-service": svc.service_id, class: "service-btn" },
        svc.display_name,
      ) as HTMLButtonElement;
      btn.addEventListener("click", () => void this.selectService(svc.service_id));
      list.appendChild(btn);
    }
    box.appendChild(list);
  }

  async selectService(serviceId: string): Promise<void> {
    try {
      const rows = await this.api.listFiles(serviceId);
      this.state = toTargetSelect(this.state, serviceId, rows);
      this.renderTargetSelect();
    } catch (err) {
      if (err instanceof ApiError && err.status === 401 && err.authUrl) {
        this.renderAuthPrompt(serviceId, err.authUrl);
        return;
      }
      this.renderError(
        err instanceof ApiError ? `provider error: ${err.code}` : String(err),
        () => this.selectService(serviceId),
      );
    }
  }

  private renderAuthPrompt(serviceId: string, authUrl: string): void {
    const box = this.freshScreen("screen-auth");
    box.appendChild(el("h1", {}, "Authorize access"));
    box.appendChild(el("p", {}, "Visit this URL, approve access, then paste the code:"));
    box.appendChild(el("a", { id: "auth-url", href: authUrl, target: "_blank" }, authUrl));
    const input = el("input", { id: "auth-code", placeholder: "access code" }) as HTMLInputElement;
    const submit = el("button", { id: "auth-submit" }, "Authorize") as HTMLButtonElement;
    submit.addEventListener("click", async () => {
      try {
        await this.api.submitAuthCode(serviceId, input.value.trim());
        await this.selectService(serviceId);
      } catch (err) {
        this.renderError(
          err instanceof ApiError ? `authorization failed: ${err.code}` : String(err),
          () => this.selectService(serviceId),
        );
      }
    });
    box.appendChild(input);
    box.appendChild(submit);
  }

  // -- screen 2: target selection ----------------------------------------

  private renderTargetSelect(): void {
    const box = this.freshScreen("screen-target-select");
    box.appendChild(el("h1", {}, `Select targets (${this.state.rows.length} files)`));

    const filters = el("div", { id: "quick-filters" });
    for (const name of QUICK_FILTERS) {
      const btn = el("button", { "data-filter": name, class: "filter-btn" }, name);
      btn.addEventListener("click", () => {
        this.state.checked = new Set(quickFilterIds(this.state.rows, name));
        this.renderTargetSelect();
      });
      filters.appendChild(btn);
    }
    box.appendChild(filters);

    const table = el("table", { id: "file-table" });
    const head = el("tr", {});
    const selectAll = el("input", { type: "checkbox", id: "select-all" }) as HTMLInputElement;
    selectAll.checked =
      this.state.rows.length > 0 && this.state.checked.size === this.state.rows.length;
    selectAll.addEventListener("change", () => {
      this.state.checked = selectAll.checked
        ? new Set(this.state.rows.map((r) => r.file_id))
        : new Set();
      this.renderTargetSelect();
    });
    head.appendChild(el("th", {}, selectAll));
    for (const title of ["Remote path", "Category", "Revisions", "Hash"]) {
      head.appendChild(el("th", {}, title));
    }
    table.appendChild(head);

    for (const row of this.state.rows) {
      const tr = el("tr", { "data-row": row.file_id });
      const check = el("input", {
        type: "checkbox",
        class: "row-check",
        "data-file": row.file_id,
      }) as HTMLInputElement;
      check.checked = this.state.checked.has(row.file_id);
      check.addEventListener("change", () => {
        if (check.checked) {
          this.state.checked.add(row.file_id);
        } else {
          this.state.checked.delete(row.file_id);
        }
        this.syncDownloadButton();
      });
      tr.appendChild(el("td", {}, check));
      tr.appendChild(el("td", {}, row.remote_path));
      tr.appendChild(el("td", {}, row.cloud_native ? `${row.category} (cloud-native)` : row.category));
      tr.appendChild(el("td", {}, String(row.revisions)));
      tr.appendChild(el("td", {}, row.hash));
      table.appendChild(tr);
    }
    box.appendChild(table);

    const download = el("button", { id: "download-btn" }, "Download selected") as HTMLButtonElement;
    download.addEventListener("click", () => void this.startDownload());
    box.appendChild(download);
    this.syncDownloadButton();
  }

  private syncDownloadButton(): void {
    const btn = this.root.querySelector<HTMLButtonElement>("#download-btn");
    if (btn) {
      btn.disabled = !canDownload(this.state.checked);
    }
  }

  async startDownload(): Promise<void> {
    const service = this.state.selectedService;
    if (!service || !canDownload(this.state.checked)) {
      return;
    }
    try {
      const jobId = await this.api.acquire(service, [...this.state.checked]);
      this.state = toResults(this.state, jobId);
      this.renderResults(null);
      this.schedulePoll();
    } catch (err) {
      this.renderError(
        err instanceof ApiError ? `cannot start acquisition: ${err.code}` : String(err),
        () => this.renderTargetSelect(),
      );
    }
  }

  // -- screen 3: results -------------------------------------------------

  private schedulePoll(): void {
    this.pollTimer = setTimeout(() => void this.poll(), this.pollIntervalMs);
  }

  private async poll(): Promise<void> {
    if (!this.state.jobId) {
      return;
    }
    let status: JobStatus;
    try {
      status = await this.api.jobStatus(this.state.jobId);
    } catch (err) {
      this.renderError(String(err), () => {
        this.renderResults(null);
        this.schedulePoll();
      });
      return;
    }
    this.state.lastProgress = monotonicProgress(this.state.lastProgress, status.progress);
    this.renderResults(status);
    if (status.state === "PENDING" || status.state === "RUNNING") {
      this.schedulePoll();
    }
  }

  private renderResults(status: JobStatus | null): void {
    const box = this.freshScreen("screen-results");
    box.appendChild(el("h1", {}, "Acquisition results"));

    const progress = this.state.lastProgress;
    const pct = progressPercent(progress);
    const bar = el("div", { id: "progress-track" });
    bar.appendChild(
      el("div", {
        id: "progress-bar",
        style: `width: ${pct}%`,
        "aria-valuenow": String(pct),
        "data-items-done": String(progress.items_done),
        "data-items-total": String(progress.items_total),
      }),
    );
    box.appendChild(bar);
    box.appendChild(
      el(
        "p",
        { id: "progress-text" },
        `${progress.items_done} of ${progress.items_total} items, ${progress.bytes_done} bytes`,
      ),
    );

    if (!status || status.state === "PENDING" || status.state === "RUNNING") {
      box.appendChild(el("p", { id: "job-state" }, status ? status.state : "STARTING"));
      return;
    }

    box.appendChild(el("p", { id: "job-state" }, status.state));
    if (status.summary) {
      box.appendChild(el("p", { id: "summary-line" }, status.summary));
    }
    if (status.error) {
      box.appendChild(el("p", { class: "error" }, status.error));
    }
    if (status.records && status.records.length > 0) {
      box.appendChild(this.resultsTable(status.records));
    }
    if (status.failures && status.failures.length > 0) {
      box.appendChild(this.failuresList(status.failures));
    }
  }

  private resultsTable(records: RecordRow[]): HTMLElement {
    const table = el("table", { id: "results-table" });
    const head = el("tr", {});
    for (const title of ["Remote path", "Revision", "Local path", "Hash"]) {
      head.appendChild(el("th", {}, title));
    }
    table.appendChild(head);
    for (const rec of records) {
      const tr = el("tr", { class: "result-row", "data-file": rec.file_id });
      tr.appendChild(el("td", {}, rec.remote_path));
      tr.appendChild(el("td", {}, rec.revision));
      tr.appendChild(el("td", { class: "local-path" }, rec.local_path));
      tr.appendChild(el("td", {}, rec.hash));
      table.appendChild(tr);
    }
    return table;
  }

  private failuresList(failures: FailureRow[]): HTMLElement {
    const box = el("div", { id: "failures" });
    box.appendChild(el("h2", {}, `${failures.length} item(s) failed`));
    for (const failure of failures) {
      box.appendChild(
        el(
          "p",
          { class: "failure-row", "data-file": failure.file_id },
          `${failure.file_id} ${failure.remote_path}: ${failure.error_code}`,
        ),
      );
    }
    return box;
  }

  // -- chrome ----------------------------------------------------------

  private renderError(message: string, retry: () => void | Promise<void>): void {
    const box = this.freshScreen("screen-error");
    box.appendChild(el("div", { id: "error-banner", class: "error" }, message));
    const btn = el("button", { id: "retry-btn" }, "Retry") as HTMLButtonElement;
    btn.addEventListener("click", () => void retry());
    box.appendChild(btn);
  }

  private freshScreen(id: string): HTMLElement {
    this.root.innerHTML = "";
    const box = el("div", { id, class: "screen" });
    this.root.appendChild(box);
    return box;
  }
}

function el(
  tag: string,
  attrs: Record<string, string> = {},
  child?: string | HTMLElement,
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (typeof child === "string") {
    node.textContent = child;
  } else if (child) {
    node.appendChild(child);
  }
  return node;
}
