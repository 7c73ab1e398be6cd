/** Thin typed client for the tone adjustment HTTP API. */

export interface AdjustResponse {
  image: string; // base64 PNG
  weights: number[];
  coords: number[][]; // 3 x N sampling coordinates
}

export interface HealthResponse {
  status: string;
  checkpoint: string;
  embedding_mode: string;
  grid_size: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

async function fail(resp: Response): Promise<never> {
  let code = "unknown";
  let message = resp.statusText;
  try {
    const body = await resp.json();
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // body was not the structured error shape; keep the defaults
  }
  throw new ApiError(resp.status, code, message);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private async post(path: string, body: unknown): Promise<Response> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) await fail(resp);
    return resp;
  }

  async health(): Promise<HealthResponse> {
    const resp = await this.fetchFn(this.baseUrl + "/health");
    if (!resp.ok) await fail(resp);
    return resp.json();
  }

  async texts(): Promise<string[]> {
    const resp = await this.fetchFn(this.baseUrl + "/texts");
    if (!resp.ok) await fail(resp);
    return (await resp.json()).texts;
  }

  async adjust(image: string, text: string, s: number): Promise<AdjustResponse> {
    const resp = await this.post("/adjust", { image, text, s });
    return resp.json();
  }

  /** Returns the .cube file body verbatim. */
  async lut(text: string, s: number, image?: string): Promise<string> {
    const body: Record<string, unknown> = { text, s };
    if (image !== undefined) body.image = image;
    const resp = await this.post("/lut", body);
    return resp.text();
  }

  async similarity(image: string, text: string): Promise<number> {
    const resp = await this.post("/similarity", { image, text });
    return (await resp.json()).relative_similarity;
  }
}
