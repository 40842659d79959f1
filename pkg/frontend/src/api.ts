import type { MessageResponse, SessionInfo, Transcript } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

const defaultFetch: FetchLike = (input, init) => globalThis.fetch(input, init);

/** Thin typed client for the agent's HTTP JSON API. */
export class AgentApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = defaultFetch,
  ) {}

  async createSession(studentId: string, locale?: string): Promise<SessionInfo> {
    return this.request<SessionInfo>("POST", "/sessions", {
      student_id: studentId,
      ...(locale ? { locale } : {}),
    });
  }

  async sendMessage(
    sessionId: string,
    text: string,
    opts: { lang?: string; confidence?: number } = {},
  ): Promise<MessageResponse> {
    return this.request<MessageResponse>(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/messages`,
      {
        text,
        ...(opts.lang ? { lang: opts.lang } : {}),
        ...(opts.confidence !== undefined ? { confidence: opts.confidence } : {}),
      },
    );
  }

  async getTranscript(sessionId: string): Promise<Transcript> {
    return this.request<Transcript>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/transcript`,
    );
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers: body === undefined ? {} : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, "connection_failed", `cannot reach ${this.baseUrl}: ${err}`);
    }
    if (!response.ok) {
      let code = "error";
      let message = `${response.status}`;
      try {
        const payload = (await response.json()) as { code?: string; message?: string };
        code = payload.code ?? code;
        message = payload.message ?? message;
      } catch {
        // body was not JSON; keep the status text
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }
}
