/** Payload shapes of the triage HTTP API, plus the pure view logic. */

export type SourceKind = "comment" | "commit_message" | "issue";
export type Verdict = "relevant" | "irrelevant" | "unsure";

export interface TaskSummary {
  task_id: string;
  source_kind: SourceKind;
  stratum: string;
  phrases: string[];
  status: "pending" | "done";
}

export interface MatchSpan {
  phrase: string;
  source_kind: SourceKind;
  span: [number, number];
  document_id: string;
}

export interface TaskDetail extends TaskSummary {
  payload: string;
  matches: MatchSpan[];
  queue_position: number | null;
  queue_total: number;
}

export interface TaskPage {
  total: number;
  offset: number;
  limit: number;
  tasks: TaskSummary[];
}

export interface LabelPost {
  task_id: string;
  rater: string;
  verdict: Verdict;
  phrase_verdicts: Record<string, Verdict>;
}

export interface LabelAck {
  ok: boolean;
  task_id: string;
  pending: number;
}

export interface AgreementView {
  base_relevant: string[];
  other_relevant: string[];
  overlap_pct: number;
  defined: boolean;
}

export interface Stats {
  progress: { total: number; labeled: number; pending: number };
  phrase_majorities: Record<string, Verdict>;
  relevant_pairs: Array<[string, string, number]>;
  agreement?: AgreementView;
  relevance?: unknown;
}

export const VERDICTS: Verdict[] = ["relevant", "irrelevant", "unsure"];

/** Keyboard shortcut -> overall verdict. */
export function verdictForKey(key: string): Verdict | null {
  switch (key.toLowerCase()) {
    case "r":
      return "relevant";
    case "i":
      return "irrelevant";
    case "u":
      return "unsure";
    default:
      return null;
  }
}

export function filterBySource(
  tasks: TaskSummary[],
  kind: SourceKind | "all",
): TaskSummary[] {
  if (kind === "all") return tasks;
  return tasks.filter((t) => t.source_kind === kind);
}

export interface Segment {
  text: string;
  highlighted: boolean;
}

/**
 * Split a payload into plain/highlighted segments using exactly the span
 * offsets delivered by the API.  Overlapping spans merge into one
 * highlighted region; no re-matching happens client side.
 */
export function highlightSegments(payload: string, matches: MatchSpan[]): Segment[] {
  const spans = matches
    .map((m) => m.span)
    .slice()
    .sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  const merged: Array<[number, number]> = [];
  for (const [start, end] of spans) {
    const last = merged[merged.length - 1];
    if (last && start <= last[1]) {
      last[1] = Math.max(last[1], end);
    } else {
      merged.push([start, end]);
    }
  }
  const segments: Segment[] = [];
  let cursor = 0;
  for (const [start, end] of merged) {
    if (start > cursor) segments.push({ text: payload.slice(cursor, start), highlighted: false });
    segments.push({ text: payload.slice(start, end), highlighted: true });
    cursor = end;
  }
  if (cursor < payload.length) segments.push({ text: payload.slice(cursor), highlighted: false });
  return segments.filter((s) => s.text.length > 0);
}

/** 2 labeled of 5 -> 40 (whole percent). */
export function progressPercent(labeled: number, total: number): number {
  if (total === 0) return 100;
  return Math.round((labeled / total) * 100);
}

/** One-decimal percent string: 68.35 -> "68.4%". */
export function formatPercent(value: number): string {
  return `${value.toFixed(1)}%`;
}

/** Cycle a per-phrase verdict: unset -> relevant -> irrelevant -> unsure -> unset. */
export function cycleVerdict(current: Verdict | undefined): Verdict | undefined {
  if (current === undefined) return "relevant";
  const index = VERDICTS.indexOf(current);
  return index + 1 < VERDICTS.length ? VERDICTS[index + 1] : undefined;
}

export function sourceBadge(kind: SourceKind): string {
  switch (kind) {
    case "comment":
      return "comment";
    case "commit_message":
      return "commit";
    case "issue":
      return "issue";
  }
}
