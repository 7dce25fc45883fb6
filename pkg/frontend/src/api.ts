/**
 * Typed client for the pedal service. Field lists are exported as
 * runtime constants so the contract tests can check them against the
 * service's machine-readable payload schema.
 */

export const TASK_FIELDS = [
  "segment_id",
  "hypothesis_index",
  "source_text",
  "hypothesis_text",
  "predicted_ter",
  "pending_after",
  "lease_seconds",
] as const;

export interface Task {
  segment_id: number;
  hypothesis_index: number;
  source_text: string;
  hypothesis_text: string;
  predicted_ter: number;
  pending_after: number;
  lease_seconds: number;
}

export const QUEUE_NEXT_FIELDS = ["schema_version", "status", "task"] as const;

export interface QueueNextResponse {
  schema_version: number;
  status: "task" | "drained";
  task: Task | null;
}

export const SANITY_FLAG_FIELDS = [
  "segment_id",
  "editor_id",
  "blind_prediction",
  "realized_ter",
  "discrepancy",
  "threshold",
] as const;

export interface SanityFlag {
  segment_id: number;
  editor_id: string;
  blind_prediction: number;
  realized_ter: number;
  discrepancy: number;
  threshold: number;
}

export const POST_EDIT_FIELDS = [
  "schema_version",
  "segment_id",
  "realized_ter",
  "blind_prediction",
  "discrepancy",
  "sanity_flag",
  "auto_closed",
  "queue_size",
] as const;

export interface PostEditResponse {
  schema_version: number;
  segment_id: number;
  realized_ter: number;
  blind_prediction: number;
  discrepancy: number;
  sanity_flag: SanityFlag | null;
  auto_closed: number[];
  queue_size: number;
}

export const EVAL_STATS_FIELDS = [
  "samples",
  "mae",
  "mse",
  "spearman_rho",
  "pearson_r",
  "kendall_tau",
] as const;

export interface EvalStats {
  samples: number;
  mae: number;
  mse: number;
  spearman_rho: number | null;
  pearson_r: number | null;
  kendall_tau: number | null;
}

export const STATS_FIELDS = [
  "schema_version",
  "counts",
  "total_segments",
  "queue_size",
  "pct_post_edited",
  "mean_corpus_quality",
  "prequential",
  "flags_total",
  "model_step",
] as const;

export interface StatsResponse {
  schema_version: number;
  counts: {
    pending: number;
    in_progress: number;
    post_edited: number;
    auto_closed: number;
  };
  total_segments: number;
  queue_size: number;
  pct_post_edited: number;
  mean_corpus_quality: number | null;
  prequential: EvalStats | null;
  flags_total: number;
  model_step: number;
}

export const FLAGS_FIELDS = ["schema_version", "flags"] as const;

export interface FlagsResponse {
  schema_version: number;
  flags: SanityFlag[];
}

/** HTTP failure carrying the status code; 409 means a lost lease or state conflict. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly token?: string,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const headers: Record<string, string> = {
      ...(init?.headers as Record<string, string>),
    };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await fetch(this.baseUrl + path, { ...init, headers });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  nextTask(editorId: string): Promise<QueueNextResponse> {
    const q = new URLSearchParams({ editor_id: editorId });
    return this.request<QueueNextResponse>(`/queue/next?${q}`);
  }

  submitPostEdit(
    segmentId: number,
    editedText: string,
    editorId: string,
  ): Promise<PostEditResponse> {
    return this.request<PostEditResponse>(`/segments/${segmentId}/postedit`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ edited_text: editedText, editor_id: editorId }),
    });
  }

  stats(): Promise<StatsResponse> {
    return this.request<StatsResponse>("/stats");
  }

  flags(editorId?: string): Promise<FlagsResponse> {
    const q = editorId ? `?${new URLSearchParams({ editor_id: editorId })}` : "";
    return this.request<FlagsResponse>(`/flags${q}`);
  }
}
