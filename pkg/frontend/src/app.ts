/**
 * The post-editing workbench: one task at a time, keyboard-first.
 *
 * Every number shown comes straight from a service payload field; the
 * client does display formatting only. One submission is in flight at
 * most, and the server response is the source of truth (no optimistic
 * updates).
 *
 * Shortcuts: Ctrl/Cmd+Enter submits, Alt+A accepts the hypothesis
 * unchanged.
 */

import { ApiClient, ApiError } from "./api.js";
import type { PostEditResponse, StatsResponse, Task } from "./api.js";
import { clearDraft, loadDraft, saveDraft } from "./drafts.js";

export interface WorkbenchOptions {
  editorId: string;
  /** Dashboard poll period; the task itself is fetched on demand only. */
  statsIntervalMs?: number;
  /** Clock injection for lease-expiry tests. */
  now?: () => number;
}

type View = "loading" | "task" | "drained" | "error";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

const fmt = (value: number | null | undefined, places: number): string =>
  value === null || value === undefined ? "–" : value.toFixed(places);

export class Workbench {
  private view: View = "loading";
  private task: Task | null = null;
  private feedback: PostEditResponse | null = null;
  private errorMessage = "";
  private staleLease = false;
  private submitting = false;
  private leaseDeadline: number | null = null;
  private qualityHistory: number[] = [];
  private myFlagCount = 0;
  private stats: StatsResponse | null = null;

  private dashboardEl!: HTMLElement;
  private mainEl!: HTMLElement;
  private feedbackEl!: HTMLElement;
  private statsTimer: ReturnType<typeof setInterval> | null = null;
  private leaseTimer: ReturnType<typeof setInterval> | null = null;
  private readonly now: () => number;
  private readonly statsIntervalMs: number;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly opts: WorkbenchOptions,
  ) {
    this.now = opts.now ?? (() => Date.now());
    this.statsIntervalMs = opts.statsIntervalMs ?? 5000;
  }

  async start(): Promise<void> {
    this.root.replaceChildren();
    const header = el("header", {});
    header.append(
      el("h1", {}, "pedal workbench"),
      el("span", { class: "editor-id", "data-testid": "editor-id" }, this.opts.editorId),
    );
    this.dashboardEl = el("section", { class: "dashboard", "data-testid": "dashboard" });
    this.mainEl = el("section", { class: "main" });
    this.feedbackEl = el("section", { class: "feedback-slot" });
    this.root.append(header, this.dashboardEl, this.feedbackEl, this.mainEl);
    this.root.addEventListener("keydown", this.onKeyDown);

    this.renderDashboard();
    void this.refreshStats();
    this.statsTimer = setInterval(() => void this.refreshStats(), this.statsIntervalMs);
    this.leaseTimer = setInterval(() => this.checkLease(), 250);
    await this.fetchNext();
  }

  stop(): void {
    if (this.statsTimer) clearInterval(this.statsTimer);
    if (this.leaseTimer) clearInterval(this.leaseTimer);
    this.root.removeEventListener("keydown", this.onKeyDown);
  }

  // -- queue flow -------------------------------------------------------

  async fetchNext(): Promise<void> {
    this.view = "loading";
    this.staleLease = false;
    this.renderMain();
    try {
      const response = await this.api.nextTask(this.opts.editorId);
      if (response.status === "drained" || response.task === null) {
        this.view = "drained";
        this.task = null;
        this.leaseDeadline = null;
      } else {
        this.task = response.task;
        this.leaseDeadline = this.now() + response.task.lease_seconds * 1000;
        this.view = "task";
      }
    } catch (err) {
      this.view = "error";
      this.errorMessage = err instanceof Error ? err.message : String(err);
    }
    this.renderMain();
  }

  async submit(editedText: string): Promise<void> {
    if (this.submitting || this.task === null) return;
    this.submitting = true;
    this.setControlsDisabled(true);
    const segmentId = this.task.segment_id;
    try {
      const response = await this.api.submitPostEdit(
        segmentId,
        editedText,
        this.opts.editorId,
      );
      clearDraft(segmentId);
      this.feedback = response;
      this.renderFeedback();
      void this.refreshStats();
      this.submitting = false;
      await this.fetchNext();
    } catch (err) {
      this.submitting = false;
      if (err instanceof ApiError && err.status === 409) {
        // lease lost: non-destructive, the draft stays in storage
        this.staleLease = true;
        this.errorMessage = "lease lost: the segment was returned to the queue";
        this.renderMain();
      } else {
        this.showRetryBanner(err instanceof Error ? err.message : String(err));
      }
    }
  }

  acceptAsIs(): void {
    if (this.task) void this.submit(this.task.hypothesis_text);
  }

  private editorValue(): string {
    const area = this.mainEl.querySelector<HTMLTextAreaElement>("[data-testid=editor]");
    return area ? area.value : "";
  }

  private onKeyDown = (event: KeyboardEvent): void => {
    if ((event.ctrlKey || event.metaKey) && event.key === "Enter") {
      event.preventDefault();
      const button = this.mainEl.querySelector<HTMLButtonElement>("[data-testid=submit]");
      if (button && !button.disabled) void this.submit(this.editorValue());
    } else if (event.altKey && (event.key === "a" || event.key === "A")) {
      event.preventDefault();
      this.acceptAsIs();
    }
  };

  private checkLease(): void {
    if (
      this.view === "task" &&
      !this.staleLease &&
      this.leaseDeadline !== null &&
      this.now() >= this.leaseDeadline
    ) {
      // the server will sweep the lease; drafts do not outlive it
      if (this.task) clearDraft(this.task.segment_id);
      this.staleLease = true;
      this.errorMessage = "lease expired";
      this.renderMain();
      return;
    }
    const countdown = this.mainEl.querySelector("[data-testid=lease-countdown]");
    if (countdown && this.leaseDeadline !== null) {
      const left = Math.max(0, Math.round((this.leaseDeadline - this.now()) / 1000));
      countdown.textContent = `lease ${left}s`;
    }
  }

  // -- dashboard ----------------------------------------------------------

  private async refreshStats(): Promise<void> {
    try {
      const [stats, flags] = await Promise.all([
        this.api.stats(),
        this.api.flags(this.opts.editorId),
      ]);
      this.stats = stats;
      this.myFlagCount = flags.flags.length;
      if (stats.mean_corpus_quality !== null) {
        this.qualityHistory.push(stats.mean_corpus_quality);
        if (this.qualityHistory.length > 60) this.qualityHistory.shift();
      }
      this.renderDashboard();
    } catch {
      // dashboard is advisory; the next poll retries
    }
  }

  private sparkline(): SVGElement {
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", "0 0 120 24");
    svg.setAttribute("class", "sparkline");
    svg.setAttribute("data-testid", "sparkline");
    const values = this.qualityHistory;
    if (values.length >= 2) {
      const min = Math.min(...values);
      const span = Math.max(...values) - min || 1;
      const points = values
        .map((v, i) => {
          const x = (120 * i) / (values.length - 1);
          const y = 22 - (20 * (v - min)) / span;
          return `${x.toFixed(1)},${y.toFixed(1)}`;
        })
        .join(" ");
      const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
      line.setAttribute("points", points);
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", "currentColor");
      svg.append(line);
    }
    return svg;
  }

  private renderDashboard(): void {
    const stats = this.stats;
    const cell = (label: string, testid: string, value: string) => {
      const box = el("div", { class: "stat" });
      box.append(el("span", { class: "label" }, label));
      box.append(el("span", { class: "value", "data-testid": testid }, value));
      return box;
    };
    this.dashboardEl.replaceChildren(
      cell("post-edited", "stat-pct", stats ? `${fmt(stats.pct_post_edited, 1)}%` : "–"),
      cell("corpus quality", "stat-quality", stats ? fmt(stats.mean_corpus_quality, 2) : "–"),
      cell(
        "prequential MAE",
        "stat-mae",
        stats?.prequential ? fmt(stats.prequential.mae, 3) : "–",
      ),
      cell(
        "Kendall τ",
        "stat-tau",
        stats?.prequential ? fmt(stats.prequential.kendall_tau, 3) : "–",
      ),
      cell("my flags", "stat-flags", String(this.myFlagCount)),
    );
    this.dashboardEl.append(this.sparkline());
  }

  // -- task views ---------------------------------------------------------------

  private setControlsDisabled(disabled: boolean): void {
    for (const button of this.mainEl.querySelectorAll("button")) {
      if (disabled) button.setAttribute("disabled", "");
      else button.removeAttribute("disabled");
    }
  }

  private showRetryBanner(message: string): void {
    const existing = this.mainEl.querySelector("[data-testid=retry-banner]");
    if (existing) existing.remove();
    const banner = el("div", { class: "banner error", "data-testid": "retry-banner" });
    banner.append(el("span", {}, `request failed: ${message} — your edit is kept`));
    const retry = el("button", { "data-testid": "retry" }, "retry");
    retry.addEventListener("click", () => {
      banner.remove();
      this.setControlsDisabled(false);
      if (this.view !== "task") void this.fetchNext();
    });
    banner.append(retry);
    this.mainEl.prepend(banner);
    this.setControlsDisabled(false);
  }

  private renderMain(): void {
    if (this.view === "loading") {
      this.mainEl.replaceChildren(el("p", { class: "loading" }, "fetching next segment…"));
      return;
    }
    if (this.view === "drained") {
      const done = el("div", { class: "drained", "data-testid": "drained" });
      done.append(
        el("h2", {}, "queue complete"),
        el("p", {}, "every segment has been post-edited or auto-closed."),
      );
      this.mainEl.replaceChildren(done);
      return;
    }
    if (this.view === "error") {
      this.mainEl.replaceChildren();
      this.showRetryBanner(this.errorMessage);
      return;
    }
    const task = this.task;
    if (task === null) return;

    const panel = el("div", { class: "task", "data-testid": "task" });

    const meta = el("div", { class: "task-meta" });
    meta.append(
      el("span", { class: "segment-id", "data-testid": "segment-id" }, `#${task.segment_id}`),
      el(
        "span",
        { class: "badge", "data-testid": "predicted-ter" },
        fmt(task.predicted_ter, 3),
      ),
      el(
        "span",
        { class: "remaining", "data-testid": "pending-after" },
        `${task.pending_after} remaining`,
      ),
      el("span", { class: "lease", "data-testid": "lease-countdown" }, ""),
    );
    panel.append(meta);

    panel.append(el("h2", {}, "source"));
    panel.append(el("p", { class: "source", "data-testid": "source-text" }, task.source_text));

    panel.append(el("h2", {}, "hypothesis (edit below)"));
    const editor = el("textarea", {
      "data-testid": "editor",
      rows: "4",
      "aria-label": "post-edit",
    });
    const draft = loadDraft(task.segment_id);
    editor.value = draft ?? task.hypothesis_text;
    panel.append(editor);

    const controls = el("div", { class: "controls" });
    const submit = el("button", { "data-testid": "submit" }, "submit (Ctrl+Enter)");
    const accept = el("button", { "data-testid": "accept" }, "accept as-is (Alt+A)");
    const syncSubmitState = () => {
      if (editor.value !== task.hypothesis_text) submit.removeAttribute("disabled");
      else submit.setAttribute("disabled", "");
    };
    syncSubmitState();
    editor.addEventListener("input", () => {
      saveDraft(task.segment_id, editor.value);
      syncSubmitState();
    });
    submit.addEventListener("click", () => void this.submit(editor.value));
    accept.addEventListener("click", () => this.acceptAsIs());
    controls.append(submit, accept);
    panel.append(controls);

    if (this.staleLease) {
      const warning = el("div", { class: "banner warning", "data-testid": "stale-lease" });
      warning.append(el("span", {}, `${this.errorMessage} — re-claim to continue`));
      const reclaim = el("button", { "data-testid": "reclaim" }, "re-claim next task");
      reclaim.addEventListener("click", () => void this.fetchNext());
      warning.append(reclaim);
      panel.prepend(warning);
      editor.setAttribute("disabled", "");
      submit.setAttribute("disabled", "");
      accept.setAttribute("disabled", "");
    }

    this.mainEl.replaceChildren(panel);
  }

  private renderFeedback(): void {
    const fb = this.feedback;
    if (fb === null) return;
    const panel = el("div", { class: "feedback", "data-testid": "feedback" });
    const item = (label: string, testid: string, value: string) => {
      const box = el("div", { class: "stat" });
      box.append(el("span", { class: "label" }, label));
      box.append(el("span", { class: "value", "data-testid": testid }, value));
      return box;
    };
    panel.append(
      el("h2", {}, `segment #${fb.segment_id}`),
      item("realized TER", "fb-realized", fmt(fb.realized_ter, 3)),
      item("model predicted", "fb-blind", fmt(fb.blind_prediction, 3)),
      item("discrepancy", "fb-discrepancy", fmt(fb.discrepancy, 3)),
      item("queue size", "fb-queue-size", String(fb.queue_size)),
    );
    if (fb.sanity_flag !== null) {
      panel.append(
        el(
          "div",
          { class: "banner warning", "data-testid": "fb-flag" },
          `sanity flag: discrepancy ${fmt(fb.sanity_flag.discrepancy, 3)} above ` +
            `threshold ${fmt(fb.sanity_flag.threshold, 2)}`,
        ),
      );
    }
    this.feedbackEl.replaceChildren(panel);
  }
}
