// Typed client for the translation service endpoints. The console talks to
// the backend exclusively through these four calls.

export interface SsmtResponse {
  transcript: string;
  fluent_text: string;
  translation: string;
  audio_b64: string;
  timings_ms: { asr: number; dc: number; mt: number; tts: number; total: number };
}

export interface TtmtResponse {
  translation: string;
  detected_src?: string;
  timing_ms: number;
}

export interface HealthResponse {
  status: string;
  replicas: { total: number; busy: number };
}

export class ApiError extends Error {
  constructor(message: string, readonly stage?: string, readonly status?: number) {
    super(message);
    this.name = "ApiError";
  }
}

async function post<T>(base: string, path: string, body: unknown): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  } catch (err) {
    throw new ApiError(`backend unreachable: ${String(err)}`);
  }
  const payload = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const detail = (payload as { detail?: { error?: string; stage?: string } }).detail;
    throw new ApiError(
      detail?.error ?? `request failed with status ${resp.status}`,
      detail?.stage,
      resp.status,
    );
  }
  return payload as T;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  ssmt(audioB64: string, src: string, tgt: string, pivot?: string): Promise<SsmtResponse> {
    const body: Record<string, string> = { audio_b64: audioB64, src, tgt };
    if (pivot) body.pivot = pivot;
    return post<SsmtResponse>(this.base, "/api/v1/ssmt", body);
  }

  ttmt(text: string, tgt: string, src?: string): Promise<TtmtResponse> {
    const body: Record<string, string> = { text, tgt };
    if (src) body.src = src;
    return post<TtmtResponse>(this.base, "/api/v1/ttmt", body);
  }

  filterScore(src: string[], tgt: string[]): Promise<{ scores: number[] }> {
    return post<{ scores: number[] }>(this.base, "/api/v1/filter/score", { src, tgt });
  }

  async health(): Promise<HealthResponse> {
    const resp = await fetch(this.base + "/api/v1/health");
    if (!resp.ok) throw new ApiError(`health check failed: ${resp.status}`, undefined, resp.status);
    return (await resp.json()) as HealthResponse;
  }
}
