/** Queue, task, and stats views wired over the triage API.
 *
 * The full labeling loop is keyboard reachable: j/k move the queue
 * selection, Enter opens a task, digits 1..9 cycle per-phrase verdicts,
 * r/i/u submit the overall verdict and advance, b goes back, s opens the
 * stats dashboard, g refreshes.  Submissions are optimistic: the next
 * pending task opens immediately and a rejected label rolls the queue
 * back and re-opens the task with the server's message, inputs intact.
 */

import { ApiError, TriageApi } from "./api.js";
import {
  SourceKind,
  TaskDetail,
  TaskSummary,
  Verdict,
  cycleVerdict,
  filterBySource,
  formatPercent,
  highlightSegments,
  progressPercent,
  sourceBadge,
  verdictForKey,
} from "./model.js";

const FILTERS: Array<SourceKind | "all"> = ["all", "comment", "commit_message", "issue"];

type View =
  | { name: "queue" }
  | { name: "task"; task: TaskDetail; error: string | null }
  | { name: "stats" }
  | { name: "done"; pending: number }
  | { name: "unreachable"; message: string };

function esc(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export interface AppOptions {
  rater: string;
}

export class App {
  private view: View = { name: "queue" };
  private tasks: TaskSummary[] = [];
  private filter: SourceKind | "all" = "all";
  private selected = 0;
  private phraseVerdicts: Record<string, Verdict> = {};
  private serverPending: number | null = null;
  private stats: import("./model.js").Stats | null = null;
  private busy: Promise<void> = Promise.resolve();
  private readonly onKey = (event: KeyboardEvent) => {
    this.enqueue(() => this.handleKey(event.key));
  };

  constructor(
    private readonly root: HTMLElement,
    private readonly api: TriageApi,
    private readonly options: AppOptions,
  ) {}

  /** Serialize user actions; tests await flush() after dispatching keys. */
  private enqueue(action: () => Promise<void>): void {
    this.busy = this.busy.then(action).catch((error) => {
      this.view = { name: "unreachable", message: String(error) };
      this.render();
    });
  }

  flush(): Promise<void> {
    return this.busy;
  }

  async start(): Promise<void> {
    document.addEventListener("keydown", this.onKey);
    await this.refreshQueue();
  }

  destroy(): void {
    document.removeEventListener("keydown", this.onKey);
  }

  private pendingTasks(): TaskSummary[] {
    return filterBySource(this.tasks, this.filter).filter((t) => t.status === "pending");
  }

  private async refreshQueue(): Promise<void> {
    try {
      const page = await this.api.listTasks(undefined);
      this.tasks = page.tasks;
      this.serverPending = page.tasks.filter((t) => t.status === "pending").length;
      this.view = { name: "queue" };
      if (this.selected >= this.pendingTasks().length) this.selected = 0;
    } catch (error) {
      this.view = { name: "unreachable", message: String(error) };
    }
    this.render();
  }

  private async openTask(taskId: string): Promise<void> {
    try {
      const task = await this.api.getTask(taskId);
      this.phraseVerdicts = {};
      this.view = { name: "task", task, error: null };
    } catch (error) {
      this.view = { name: "unreachable", message: String(error) };
    }
    this.render();
  }

  private async openStats(): Promise<void> {
    try {
      this.stats = await this.api.getStats();
      this.view = { name: "stats" };
    } catch (error) {
      this.view = { name: "unreachable", message: String(error) };
    }
    this.render();
  }

  private async finishIfDone(): Promise<void> {
    const page = await this.api.listTasks("pending");
    if (page.total === 0) {
      this.view = { name: "done", pending: 0 };
    } else {
      this.tasks = (await this.api.listTasks(undefined)).tasks;
      this.view = { name: "queue" };
    }
    this.render();
  }

  private async submit(verdict: Verdict): Promise<void> {
    if (this.view.name !== "task") return;
    const task = this.view.task;
    const submittedVerdicts = { ...this.phraseVerdicts };
    const ack = this.api.postLabel({
      task_id: task.task_id,
      rater: this.options.rater,
      verdict,
      phrase_verdicts: submittedVerdicts,
    });
    // optimistic: mark done locally and move on without waiting
    this.tasks = this.tasks.map((t) =>
      t.task_id === task.task_id ? { ...t, status: "done" as const } : t,
    );
    const next = this.pendingTasks()[0];
    if (next) {
      await this.openTask(next.task_id);
    }
    try {
      const result = await ack;
      this.serverPending = result.pending;
      if (!next) await this.finishIfDone();
      else this.render();
    } catch (error) {
      // roll back and re-open the rejected task with inputs preserved
      this.tasks = this.tasks.map((t) =>
        t.task_id === task.task_id ? { ...t, status: "pending" as const } : t,
      );
      const message = error instanceof ApiError ? error.message : String(error);
      this.phraseVerdicts = submittedVerdicts;
      this.view = { name: "task", task, error: message };
      this.render();
    }
  }

  async handleKey(key: string): Promise<void> {
    const view = this.view;
    if (key === "s" && view.name !== "task") return this.openStats();
    if (key === "g") return this.refreshQueue();
    switch (view.name) {
      case "queue": {
        const pending = this.pendingTasks();
        if (key === "j" || key === "ArrowDown") {
          this.selected = Math.min(this.selected + 1, Math.max(pending.length - 1, 0));
          this.render();
        } else if (key === "k" || key === "ArrowUp") {
          this.selected = Math.max(this.selected - 1, 0);
          this.render();
        } else if (key === "f") {
          const index = FILTERS.indexOf(this.filter);
          this.filter = FILTERS[(index + 1) % FILTERS.length] ?? "all";
          this.selected = 0;
          this.render();
        } else if (key === "Enter") {
          const chosen = pending[this.selected] ?? pending[0];
          if (chosen) return this.openTask(chosen.task_id);
        }
        return;
      }
      case "task": {
        const verdict = verdictForKey(key);
        if (verdict) return this.submit(verdict);
        if (key === "b" || key === "Escape") return this.refreshQueue();
        if (/^[1-9]$/.test(key)) {
          const phrases = [...new Set(view.task.matches.map((m) => m.phrase))].sort();
          const phrase = phrases[Number(key) - 1];
          if (phrase) {
            const next = cycleVerdict(this.phraseVerdicts[phrase]);
            if (next === undefined) delete this.phraseVerdicts[phrase];
            else this.phraseVerdicts[phrase] = next;
            this.render();
          }
        }
        return;
      }
      case "stats":
      case "done":
        if (key === "b" || key === "Escape") return this.refreshQueue();
        return;
      case "unreachable":
        if (key === "Enter") return this.refreshQueue();
        return;
    }
  }

  render(): void {
    const view = this.view;
    switch (view.name) {
      case "queue":
        this.root.innerHTML = this.queueHtml();
        break;
      case "task":
        this.root.innerHTML = this.taskHtml(view.task, view.error);
        break;
      case "stats":
        this.root.innerHTML = this.statsHtml();
        break;
      case "done":
        this.root.innerHTML = this.doneHtml(view.pending);
        break;
      case "unreachable":
        this.root.innerHTML = this.unreachableHtml(view.message);
        break;
    }
    this.bind();
  }

  private bind(): void {
    this.root.querySelectorAll<HTMLElement>("[data-open]").forEach((el) => {
      el.addEventListener("click", () => {
        const id = el.dataset.open;
        if (id) this.enqueue(() => this.openTask(id));
      });
    });
    this.root.querySelectorAll<HTMLElement>("[data-verdict]").forEach((el) => {
      el.addEventListener("click", () => {
        this.enqueue(() => this.submit(el.dataset.verdict as Verdict));
      });
    });
    this.root.querySelectorAll<HTMLElement>("[data-phrase]").forEach((el) => {
      el.addEventListener("click", () => {
        this.enqueue(() => this.handleKey(el.dataset.phrase ?? ""));
      });
    });
    const retry = this.root.querySelector<HTMLElement>("#retry");
    if (retry) {
      retry.addEventListener("click", () => this.enqueue(() => this.refreshQueue()));
      retry.focus();
    }
    const statsLink = this.root.querySelector<HTMLElement>("#stats-link");
    if (statsLink) {
      statsLink.addEventListener("click", () => this.enqueue(() => this.openStats()));
    }
    const filterSelect = this.root.querySelector<HTMLSelectElement>("#filter");
    if (filterSelect) {
      filterSelect.addEventListener("change", () => {
        this.filter = filterSelect.value as SourceKind | "all";
        this.selected = 0;
        this.render();
      });
    }
  }

  private queueHtml(): string {
    // completion keys off the unfiltered queue: an exhausted filter must
    // not report completion while other source kinds stay pending
    const allPending = this.tasks.filter((t) => t.status === "pending");
    if (allPending.length === 0 && this.tasks.length > 0) {
      return this.doneHtml(this.serverPending ?? 0);
    }
    const pending = this.pendingTasks();
    const options = FILTERS.map(
      (f) =>
        `<option value="${f}" ${f === this.filter ? "selected" : ""}>${f.replace("_", " ")}</option>`,
    ).join("");
    const rows = pending
      .map((task, index) => {
        const classes = index === this.selected ? "task-row selected" : "task-row";
        return `<li class="${classes}" data-open="${esc(task.task_id)}">
          <span class="badge ${task.source_kind}">${sourceBadge(task.source_kind)}</span>
          <span class="phrases">${task.phrases.map(esc).join(", ")}</span>
          <span class="muted">${esc(task.stratum)}</span>
        </li>`;
      })
      .join("");
    return `
      <header>
        <h1>triage queue</h1>
        <span class="muted">${pending.length} pending</span>
        <label class="muted">filter
          <select id="filter">${options}</select>
        </label>
        <button id="stats-link">stats (s)</button>
      </header>
      <ul class="queue">${rows}</ul>
      <footer class="muted">j/k select · Enter open · f filter · s stats · g refresh</footer>`;
  }

  private taskHtml(task: TaskDetail, error: string | null): string {
    const segments = highlightSegments(task.payload, task.matches)
      .map((segment) =>
        segment.highlighted
          ? `<mark>${esc(segment.text)}</mark>`
          : esc(segment.text),
      )
      .join("");
    const phrases = [...new Set(task.matches.map((m) => m.phrase))].sort();
    const phraseRows = phrases
      .map((phrase, index) => {
        const verdict = this.phraseVerdicts[phrase];
        return `<li>
          <button data-phrase="${index + 1}" class="phrase ${verdict ?? "unset"}">
            <span class="key">${index + 1}</span> ${esc(phrase)}
            <span class="verdict">${verdict ?? "-"}</span>
          </button>
        </li>`;
      })
      .join("");
    const position =
      task.queue_position === null ? "labeled" : `${task.queue_position} / ${task.queue_total}`;
    const banner = error ? `<div class="error">label rejected: ${esc(error)}</div>` : "";
    return `
      <header>
        <h1><span class="badge ${task.source_kind}">${sourceBadge(task.source_kind)}</span>
            task ${esc(task.task_id)}</h1>
        <span class="muted">queue ${position}</span>
      </header>
      ${banner}
      <pre class="context">${segments}</pre>
      <section class="phrase-verdicts">
        <h2>per-phrase verdicts (digits cycle)</h2>
        <ul>${phraseRows}</ul>
      </section>
      <section class="verdict-bar">
        <button data-verdict="relevant">relevant (r)</button>
        <button data-verdict="irrelevant">irrelevant (i)</button>
        <button data-verdict="unsure">unsure (u)</button>
      </section>
      <footer class="muted">r/i/u submit · 1-9 phrase verdicts · b back</footer>`;
  }

  private statsHtml(): string {
    const stats = this.stats;
    if (!stats) return `<p class="muted">no statistics yet</p>`;
    const pct = progressPercent(stats.progress.labeled, stats.progress.total);
    const agreement = stats.agreement
      ? `<div class="stat-row"><span>agreement with external list</span>
           <strong id="agreement">${
             stats.agreement.defined ? formatPercent(stats.agreement.overlap_pct) : "n/a"
           }</strong></div>`
      : "";
    const majorities = Object.entries(stats.phrase_majorities)
      .sort(([a], [b]) => a.localeCompare(b))
      .map(([phrase, verdict]) => `<tr><td>${esc(phrase)}</td><td>${verdict}</td></tr>`)
      .join("");
    const pairs = (stats.relevant_pairs ?? [])
      .map(
        ([a, b, count]) =>
          `<tr><td>${esc(a)} + ${esc(b)}</td><td class="pair-count">${count}</td></tr>`,
      )
      .join("");
    const pairTable = pairs
      ? `<h2>phrases judged relevant together</h2>
         <table class="majorities" id="pairs">
           <thead><tr><th>pair</th><th>tasks</th></tr></thead>
           <tbody>${pairs}</tbody>
         </table>`
      : "";
    return `
      <header><h1>statistics</h1></header>
      <div class="stat-row"><span>progress</span>
        <strong id="progress">${pct}%</strong>
        <span class="muted">${stats.progress.labeled} labeled / ${stats.progress.pending} pending</span>
      </div>
      ${agreement}
      <table class="majorities">
        <thead><tr><th>phrase</th><th>majority verdict</th></tr></thead>
        <tbody>${majorities}</tbody>
      </table>
      ${pairTable}
      <footer class="muted">b back · g refresh queue</footer>`;
  }

  private doneHtml(pending: number): string {
    return `
      <header><h1>queue complete</h1></header>
      <p id="pending-count">${pending} pending</p>
      <p>every sampled instance has a verdict.</p>
      <button id="stats-link">view statistics (s)</button>
      <footer class="muted">s stats · g refresh</footer>`;
  }

  private unreachableHtml(message: string): string {
    return `
      <div class="error" id="banner">service unreachable: ${esc(message)}</div>
      <button id="retry">retry (Enter)</button>`;
  }
}

export function mount(root: HTMLElement, api: TriageApi, options: AppOptions): App {
  const app = new App(root, api, options);
  void app.start();
  return app;
}
