/** Thin client for the annotation service HTTP API. */

import { SpanPayload } from "./labels";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly detail: unknown = null,
  ) {
    super(message);
  }
}

export interface NextItem {
  done?: boolean;
  excerpt_id?: string;
  text?: string;
  kinds?: string[];
  is_screening?: boolean;
  instructions?: string;
  progress: { completed: number; total: number };
}

export interface SubmitResult {
  status: string;
  state: string;
  micro_f1?: number[];
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `${response.status} ${response.statusText}`;
  let detail: unknown = null;
  try {
    const body = await response.json();
    code = body.code ?? code;
    message = body.message ?? message;
    detail = body.detail ?? null;
  } catch {
    // non-JSON body: keep the status line
  }
  return new ApiError(response.status, code, message, detail);
}

export class ServiceClient {
  constructor(private readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createTask(definition: unknown): Promise<{ task_id: string }> {
    return this.post("/tasks", definition);
  }

  openSession(taskId: string): Promise<{ session_token: string; state: string }> {
    return this.post(`/tasks/${taskId}/sessions`, { consent: true });
  }

  nextItem(token: string): Promise<NextItem> {
    return this.request(`/sessions/${token}/next`);
  }

  submit(
    token: string,
    excerptId: string,
    spans: SpanPayload[],
  ): Promise<SubmitResult> {
    return this.post(`/sessions/${token}/submit`, {
      excerpt_id: excerptId,
      spans,
    });
  }

  exportTask(taskId: string): Promise<{
    excerpts: { excerpt_id: string; text: string }[];
    responses: { annotator_id: string; excerpt_id: string; spans: SpanPayload[] }[];
    gold: Record<string, { spans: SpanPayload[] }>;
  }> {
    return this.request(`/tasks/${taskId}/export`);
  }
}
