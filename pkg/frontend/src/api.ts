// Typed client for the session service HTTP API. The console never computes
// speeds or genotypes itself; everything displayed comes from these documents.

export interface ParameterView {
  name: string;
  unit: string;
  value: number;
  label: string;
}

export interface RobotView {
  robot_index: number;
  genotype: number[];
  parameters: ParameterView[];
  measured: boolean;
  speed: number | null;
}

export interface CompletedGeneration {
  generation: number;
  best_speed: number;
  best_robot_index: number;
}

export interface SessionSummary {
  id: string;
  name: string;
  algorithm: "ga" | "pso";
  status: "collecting" | "complete";
  current_generation: number;
  max_generations: number;
  population: number;
  measured_count: number;
  created_at: string | null;
}

export interface SessionDocument extends SessionSummary {
  seed: number;
  config: Record<string, unknown>;
  robots: RobotView[];
  completed_generations: CompletedGeneration[];
  missing_robots: number[];
}

export interface MeasurementBody {
  slopes_dir_a?: number[];
  slopes_dir_b?: number[];
  speed?: number;
}

export interface CreateSessionBody {
  name: string;
  algorithm: "ga" | "pso";
  config?: Record<string, unknown>;
  seed: number;
  max_generations?: number;
}

export interface ApiErrorDetail {
  code: string;
  message: string;
  missing?: number[];
}

export class ApiRequestError extends Error {
  constructor(readonly status: number, readonly detail: ApiErrorDetail) {
    super(detail.message);
    this.name = "ApiRequestError";
  }
}

async function parseError(response: Response): Promise<ApiErrorDetail> {
  try {
    const body = await response.json();
    if (body && typeof body === "object" && "error" in body) {
      return body.error as ApiErrorDetail;
    }
    return { code: "http_error", message: JSON.stringify(body) };
  } catch {
    return { code: "http_error", message: `HTTP ${response.status}` };
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw new ApiRequestError(response.status, await parseError(response));
    }
    return (await response.json()) as T;
  }

  createSession(body: CreateSessionBody): Promise<SessionDocument> {
    return this.request("POST", "/api/sessions", body);
  }

  listSessions(): Promise<SessionSummary[]> {
    return this.request("GET", "/api/sessions");
  }

  getSession(id: string): Promise<SessionDocument> {
    return this.request("GET", `/api/sessions/${id}`);
  }

  putMeasurement(
    id: string,
    robotIndex: number,
    body: MeasurementBody,
    overwrite = false,
  ): Promise<SessionDocument> {
    const query = overwrite ? "?overwrite=true" : "";
    return this.request(
      "PUT",
      `/api/sessions/${id}/generations/current/robots/${robotIndex}/measurement${query}`,
      body,
    );
  }

  advance(id: string): Promise<SessionDocument> {
    return this.request("POST", `/api/sessions/${id}/advance`);
  }

  exportUrl(id: string): string {
    return `${this.baseUrl}/api/sessions/${id}/export?format=csv`;
  }
}
